#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "goalcomp/activations.hpp"
#include "goalcomp/errors.hpp"
#include "goalcomp/rng.hpp"
#include "goalcomp/tensor.hpp"

namespace goalcomp {

// N synchronized multi-sensor observations plus integer labels. Observations
// are stored per sensor as (N x d) row-per-sample matrices with values in
// [0,1]. image_rows/image_cols are set when d is an image raster (0 = not
// image-shaped).
struct SampleSet {
    std::size_t sensors = 1;
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<Tensor> observations;
    std::vector<std::uint32_t> labels;
    std::string provenance;
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;

    std::size_t size() const { return labels.size(); }
};

struct SplitSpec {
    double train_fraction = 0.8;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

inline void validate_sampleset(const SampleSet& set) {
    require(set.size() >= 1, "SampleSet: empty set");
    require(set.sensors >= 1 && set.dim >= 1 && set.classes >= 2,
            "SampleSet: bad dimensions");
    require(set.observations.size() == set.sensors,
            "SampleSet: expected one observation block per sensor");
    for (const Tensor& obs : set.observations)
        require(obs.rows() == set.size() && obs.cols() == set.dim,
                "SampleSet: observation block shape mismatch");
    for (std::uint32_t label : set.labels)
        require(label < set.classes, "SampleSet: label out of range");
}

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline std::uint32_t read_be_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                                 const std::string& path) {
    if (offset + 4 > bytes.size())
        throw ParseError(path + ": truncated at byte offset " + std::to_string(offset) +
                         " (need 4 bytes)");
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace detail

// Parses the big-endian IDX image/label pair into a single-sensor set with
// pixels scaled to [0,1].
inline SampleSet load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto image_bytes = detail::read_file_bytes(images_path);
    const auto label_bytes = detail::read_file_bytes(labels_path);

    const std::uint32_t image_magic = detail::read_be_u32(image_bytes, 0, images_path);
    if (image_magic != 0x00000803u)
        throw ParseError(images_path + ": bad image magic at byte offset 0 (got 0x" +
                         [&] { char b[16]; std::snprintf(b, sizeof b, "%08x", image_magic); return std::string(b); }() +
                         ", want 0x00000803)");
    const std::uint32_t count = detail::read_be_u32(image_bytes, 4, images_path);
    const std::uint32_t rows = detail::read_be_u32(image_bytes, 8, images_path);
    const std::uint32_t cols = detail::read_be_u32(image_bytes, 12, images_path);
    const std::size_t pixel_count =
        static_cast<std::size_t>(count) * rows * cols;
    if (image_bytes.size() < 16 + pixel_count)
        throw ParseError(images_path + ": truncated at byte offset " +
                         std::to_string(image_bytes.size()) + " (need " +
                         std::to_string(16 + pixel_count) + " bytes)");

    const std::uint32_t label_magic = detail::read_be_u32(label_bytes, 0, labels_path);
    if (label_magic != 0x00000801u)
        throw ParseError(labels_path + ": bad label magic at byte offset 0");
    const std::uint32_t label_count = detail::read_be_u32(label_bytes, 4, labels_path);
    if (label_count != count)
        throw ParseError(labels_path + ": label count " + std::to_string(label_count) +
                         " does not match image count " + std::to_string(count));
    if (label_bytes.size() < 8 + static_cast<std::size_t>(label_count))
        throw ParseError(labels_path + ": truncated at byte offset " +
                         std::to_string(label_bytes.size()));

    SampleSet set;
    set.sensors = 1;
    set.dim = static_cast<std::size_t>(rows) * cols;
    set.classes = 10;
    set.image_rows = rows;
    set.image_cols = cols;
    set.provenance = "idx(" + images_path + "," + labels_path + ")";
    Tensor obs(count, set.dim);
    for (std::size_t i = 0; i < pixel_count; ++i)
        obs.values()[i] = static_cast<double>(image_bytes[16 + i]) / 255.0;
    set.observations.push_back(std::move(obs));
    set.labels.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const std::uint8_t label = label_bytes[8 + j];
        if (label > 9)
            throw ParseError(labels_path + ": label " + std::to_string(int(label)) +
                             " out of range at byte offset " + std::to_string(8 + j));
        set.labels[j] = label;
    }
    validate_sampleset(set);
    return set;
}

// Two-sensor paired problem: both sensors draw an independently shuffled
// copy of the base set, samples are paired by position, and the target is
// the shared class when both members agree, else a dedicated mismatch class
// appended as index C0. With `balance` set, surplus mismatch pairs are
// dropped so the mismatch class holds at most half of the result.
inline SampleSet make_pairwise(const SampleSet& base, Rng& rng, bool balance = false) {
    validate_sampleset(base);
    require(base.sensors == 1, "make_pairwise: base set must be single-sensor");
    const std::size_t N = base.size();
    const std::size_t C0 = base.classes;

    std::vector<std::size_t> order_a(N), order_b(N);
    std::iota(order_a.begin(), order_a.end(), 0);
    std::iota(order_b.begin(), order_b.end(), 0);
    shuffle(order_a, rng);
    shuffle(order_b, rng);

    std::vector<std::size_t> keep;
    keep.reserve(N);
    if (balance) {
        std::size_t match_count = 0;
        for (std::size_t k = 0; k < N; ++k)
            if (base.labels[order_a[k]] == base.labels[order_b[k]]) ++match_count;
        std::size_t mismatch_budget = match_count;
        for (std::size_t k = 0; k < N; ++k) {
            if (base.labels[order_a[k]] == base.labels[order_b[k]]) {
                keep.push_back(k);
            } else if (mismatch_budget > 0) {
                keep.push_back(k);
                --mismatch_budget;
            }
        }
        require(!keep.empty(), "make_pairwise: balancing left no samples");
    } else {
        keep.resize(N);
        std::iota(keep.begin(), keep.end(), 0);
    }

    SampleSet out;
    out.sensors = 2;
    out.dim = base.dim;
    out.classes = C0 + 1;
    out.image_rows = base.image_rows;
    out.image_cols = base.image_cols;
    out.provenance = "pairwise(" + base.provenance + ")";
    const Tensor& src = base.observations.front();
    Tensor obs_a(keep.size(), base.dim), obs_b(keep.size(), base.dim);
    out.labels.resize(keep.size());
    for (std::size_t row = 0; row < keep.size(); ++row) {
        const std::size_t k = keep[row];
        const std::size_t ia = order_a[k], ib = order_b[k];
        for (std::size_t c = 0; c < base.dim; ++c) {
            obs_a(row, c) = src(ia, c);
            obs_b(row, c) = src(ib, c);
        }
        const std::uint32_t la = base.labels[ia], lb = base.labels[ib];
        out.labels[row] = la == lb ? la : static_cast<std::uint32_t>(C0);
    }
    out.observations.push_back(std::move(obs_a));
    out.observations.push_back(std::move(obs_b));
    validate_sampleset(out);
    return out;
}

// Synthetic correlated multi-sensor classification set. Every class owns a
// latent prototype; each sample perturbs that prototype with latent noise
// shared by all sensors, and each sensor sees the result through its own
// fixed linear view plus private noise, squashed into [0,1] by a sigmoid.
// Sensors are correlated through the shared latent. Both noise terms scale
// with sigma, so sigma = 0 collapses every class to one point per sensor;
// the latent term is deliberately the larger one — it provides the
// within-class spread that keeps samples near decision boundaries, which
// hard-threshold encoders need to receive usable surrogate gradients.
inline SampleSet synth_correlated(std::size_t S, std::size_t d, std::size_t C, std::size_t N,
                                  double sigma, Rng& rng) {
    require(S >= 2, "synth_correlated: need at least two sensors");
    require(C >= 2, "synth_correlated: need at least two classes");
    require(d >= 1 && N >= 1, "synth_correlated: bad dimensions");
    require(sigma >= 0.0, "synth_correlated: negative noise");

    // Class prototypes in the shared latent space (latent dim == d).
    std::vector<Tensor> prototypes;
    prototypes.reserve(C);
    for (std::size_t c = 0; c < C; ++c) {
        Tensor u(d, 1);
        for (std::size_t k = 0; k < d; ++k) u(k, 0) = rng.normal(0.0, 1.0);
        prototypes.push_back(std::move(u));
    }

    // Per-sensor views: dominated by the identity so matched dimensions stay
    // aligned across sensors, perturbed by a sensor-specific random mix.
    constexpr double kViewMix = 0.3;
    const double mix_std = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<Tensor> views;
    views.reserve(S);
    for (std::size_t i = 0; i < S; ++i) {
        Tensor m(d, d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c)
                m(r, c) = (r == c ? 1.0 - kViewMix : 0.0) + kViewMix * rng.normal(0.0, mix_std);
        views.push_back(std::move(m));
    }

    SampleSet set;
    set.sensors = S;
    set.dim = d;
    set.classes = C;
    set.provenance = "synth(S=" + std::to_string(S) + ",d=" + std::to_string(d) +
                     ",C=" + std::to_string(C) + ",N=" + std::to_string(N) + ")";
    for (std::size_t i = 0; i < S; ++i) set.observations.emplace_back(N, d);
    set.labels.resize(N);

    // Within-class latent spread, in units of sigma. All sensors observe the
    // same perturbed latent, so this term drives correlated variation; the
    // residual per-sensor term models independent measurement noise. The
    // squash gain stretches readings across the full [0,1] range instead of
    // bunching them around 0.5, which keeps per-dimension variance high.
    constexpr double kLatentSpread = 4.0;
    constexpr double kSquashGain = 3.0;
    Tensor latent(d, 1);
    for (std::size_t j = 0; j < N; ++j) {
        const auto label = static_cast<std::uint32_t>(rng.below(C));
        set.labels[j] = label;
        const Tensor& proto = prototypes[label];
        for (std::size_t k = 0; k < d; ++k)
            latent(k, 0) = proto(k, 0) + sigma * kLatentSpread * rng.normal(0.0, 1.0);
        for (std::size_t i = 0; i < S; ++i) {
            const Tensor projected = matmul(views[i], latent);
            Tensor& obs = set.observations[i];
            for (std::size_t k = 0; k < d; ++k)
                obs(j, k) = sigmoid_scalar(kSquashGain *
                                           (projected(k, 0) + sigma * rng.normal(0.0, 1.0)));
        }
    }
    validate_sampleset(set);
    return set;
}

// Unit basis row vector (1 x C).
inline Tensor one_hot(std::size_t label, std::size_t C) {
    require(label < C, "one_hot: label " + std::to_string(label) + " out of range for " +
                           std::to_string(C) + " classes");
    Tensor row(1, C);
    row(0, label) = 1.0;
    return row;
}

namespace detail {

inline SampleSet take_rows(const SampleSet& set, const std::vector<std::size_t>& rows,
                           const std::string& provenance) {
    SampleSet out;
    out.sensors = set.sensors;
    out.dim = set.dim;
    out.classes = set.classes;
    out.image_rows = set.image_rows;
    out.image_cols = set.image_cols;
    out.provenance = provenance;
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < set.sensors; ++i) {
        Tensor obs(rows.size(), set.dim);
        const Tensor& src = set.observations[i];
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < set.dim; ++c) obs(r, c) = src(rows[r], c);
        out.observations.push_back(std::move(obs));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) out.labels[r] = set.labels[rows[r]];
    return out;
}

}  // namespace detail

// Seeded shuffle followed by a disjoint train/test partition.
inline std::pair<SampleSet, SampleSet> split(const SampleSet& set, const SplitSpec& spec) {
    validate_sampleset(set);
    require(spec.train_fraction > 0.0 && spec.test_fraction > 0.0,
            "split: fractions must be positive");
    require(spec.train_fraction + spec.test_fraction <= 1.0 + 1e-12,
            "split: fractions exceed 1");
    const std::size_t N = set.size();
    const auto train_count =
        static_cast<std::size_t>(static_cast<double>(N) * spec.train_fraction + 1e-9);
    const auto test_count =
        static_cast<std::size_t>(static_cast<double>(N) * spec.test_fraction + 1e-9);
    require(train_count >= 1, "split: train fraction too small to yield a sample");
    require(test_count >= 1, "split: test fraction too small to yield a sample");
    require(train_count + test_count <= N, "split: partition exceeds set size");

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    shuffle(order, rng);

    const std::vector<std::size_t> train_rows(order.begin(), order.begin() + train_count);
    const std::vector<std::size_t> test_rows(order.begin() + train_count,
                                             order.begin() + train_count + test_count);
    return {detail::take_rows(set, train_rows, set.provenance + "/train"),
            detail::take_rows(set, test_rows, set.provenance + "/test")};
}

// Single-sensor view of one sensor's slice (for per-sensor pretraining).
inline SampleSet sensor_slice(const SampleSet& set, std::size_t sensor) {
    validate_sampleset(set);
    require(sensor < set.sensors, "sensor_slice: sensor index out of range");
    SampleSet out;
    out.sensors = 1;
    out.dim = set.dim;
    out.classes = set.classes;
    out.image_rows = set.image_rows;
    out.image_cols = set.image_cols;
    out.provenance = set.provenance + "/sensor" + std::to_string(sensor);
    out.observations.push_back(set.observations[sensor]);
    out.labels = set.labels;
    return out;
}

// Average-pools square image observations by an integer factor (e.g. 2 to
// take 28x28 rasters to 14x14) across every sensor.
inline SampleSet downsample_images(const SampleSet& set, std::size_t factor) {
    validate_sampleset(set);
    require(factor >= 1, "downsample_images: factor must be positive");
    require(set.image_rows > 0 && set.image_cols > 0,
            "downsample_images: set is not image-shaped");
    require(set.image_rows % factor == 0 && set.image_cols % factor == 0,
            "downsample_images: image dims not divisible by factor");
    if (factor == 1) return set;

    const std::size_t out_rows = set.image_rows / factor;
    const std::size_t out_cols = set.image_cols / factor;
    SampleSet out;
    out.sensors = set.sensors;
    out.dim = out_rows * out_cols;
    out.classes = set.classes;
    out.image_rows = out_rows;
    out.image_cols = out_cols;
    out.provenance = set.provenance + "/pool" + std::to_string(factor);
    out.labels = set.labels;
    const double inv_area = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t i = 0; i < set.sensors; ++i) {
        const Tensor& src = set.observations[i];
        Tensor obs(set.size(), out.dim);
        for (std::size_t j = 0; j < set.size(); ++j) {
            for (std::size_t pr = 0; pr < out_rows; ++pr) {
                for (std::size_t pc = 0; pc < out_cols; ++pc) {
                    double sum = 0.0;
                    for (std::size_t dr = 0; dr < factor; ++dr)
                        for (std::size_t dc = 0; dc < factor; ++dc)
                            sum += src(j, (pr * factor + dr) * set.image_cols +
                                              (pc * factor + dc));
                    obs(j, pr * out_cols + pc) = sum * inv_area;
                }
            }
        }
        out.observations.push_back(std::move(obs));
    }
    validate_sampleset(out);
    return out;
}

// (d x B) column batch of one sensor's observations at the given rows.
inline Tensor batch_columns(const SampleSet& set, std::size_t sensor,
                            const std::vector<std::size_t>& rows) {
    require(sensor < set.sensors, "batch_columns: sensor index out of range");
    require(!rows.empty(), "batch_columns: empty batch");
    const Tensor& src = set.observations[sensor];
    Tensor out(set.dim, rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        require(rows[b] < set.size(), "batch_columns: row index out of range");
        for (std::size_t c = 0; c < set.dim; ++c) out(c, b) = src(rows[b], c);
    }
    return out;
}

// (C x B) one-hot column batch of labels at the given rows.
inline Tensor label_columns(const SampleSet& set, const std::vector<std::size_t>& rows) {
    require(!rows.empty(), "label_columns: empty batch");
    Tensor out(set.classes, rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        require(rows[b] < set.size(), "label_columns: row index out of range");
        out(set.labels[rows[b]], b) = 1.0;
    }
    return out;
}

}  // namespace goalcomp
