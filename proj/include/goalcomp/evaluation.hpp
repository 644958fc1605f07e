#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "goalcomp/bundle.hpp"
#include "goalcomp/data.hpp"
#include "goalcomp/format.hpp"
#include "goalcomp/losses.hpp"
#include "goalcomp/pgm.hpp"
#include "goalcomp/rng.hpp"

namespace goalcomp {

struct Metrics {
    double accuracy = 0.0;
    std::size_t samples = 0;
    std::size_t classes = 0;
    std::vector<std::uint64_t> confusion;   // C x C row-major, rows = true class
    std::vector<double> per_class_recall;   // diagonal / row sum (0 for empty rows)

    std::uint64_t at(std::size_t truth, std::size_t predicted) const {
        return confusion[truth * classes + predicted];
    }
};

// Evaluation parallelism cap from the environment; 0 or unset = sequential.
inline std::size_t env_threads() {
    const char* raw = std::getenv("GOALCOMP_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    const unsigned long v = std::strtoul(raw, &end, 10);
    require(end != raw && *end == '\0', "GOALCOMP_THREADS: not an unsigned integer");
    return static_cast<std::size_t>(v);
}

namespace detail {

// Tallies argmax predictions over fixed sample chunks. Each chunk owns a
// private count table and tables merge in chunk order, so the result is
// identical for any thread count.
inline Metrics tally_predictions(
    const SampleSet& set, std::size_t classes,
    const std::function<Tensor(const std::vector<std::size_t>&)>& predict_columns,
    std::size_t threads) {
    const std::size_t N = set.size();
    constexpr std::size_t kChunk = 256;
    std::vector<std::vector<std::size_t>> chunks;
    for (std::size_t start = 0; start < N; start += kChunk) {
        const std::size_t stop = std::min(N, start + kChunk);
        std::vector<std::size_t> rows(stop - start);
        std::iota(rows.begin(), rows.end(), start);
        chunks.push_back(std::move(rows));
    }

    std::vector<std::vector<std::uint64_t>> partials(
        chunks.size(), std::vector<std::uint64_t>(classes * classes, 0));
    const auto run_chunk = [&](std::size_t idx) {
        const Tensor probs = predict_columns(chunks[idx]);
        auto& counts = partials[idx];
        for (std::size_t b = 0; b < chunks[idx].size(); ++b) {
            std::size_t arg = 0;
            for (std::size_t r = 1; r < probs.rows(); ++r)
                if (probs(r, b) > probs(arg, b)) arg = r;
            counts[set.labels[chunks[idx][b]] * classes + arg] += 1;
        }
    };

    if (threads <= 1 || chunks.size() <= 1) {
        for (std::size_t idx = 0; idx < chunks.size(); ++idx) run_chunk(idx);
    } else {
        std::atomic<std::size_t> next{0};
        const std::size_t worker_count = std::min(threads, chunks.size());
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            workers.emplace_back([&] {
                for (std::size_t idx = next.fetch_add(1); idx < chunks.size();
                     idx = next.fetch_add(1))
                    run_chunk(idx);
            });
        }
        for (std::thread& t : workers) t.join();
    }

    Metrics m;
    m.samples = N;
    m.classes = classes;
    m.confusion.assign(classes * classes, 0);
    for (const auto& counts : partials)
        for (std::size_t i = 0; i < counts.size(); ++i) m.confusion[i] += counts[i];
    std::uint64_t diagonal = 0;
    m.per_class_recall.resize(classes, 0.0);
    for (std::size_t t = 0; t < classes; ++t) {
        std::uint64_t row = 0;
        for (std::size_t p = 0; p < classes; ++p) row += m.at(t, p);
        diagonal += m.at(t, t);
        if (row > 0)
            m.per_class_recall[t] = static_cast<double>(m.at(t, t)) / static_cast<double>(row);
    }
    m.accuracy = static_cast<double>(diagonal) / static_cast<double>(N);
    return m;
}

inline Tensor sensor_batch_columns(const SampleSet& set,
                                   const std::vector<std::size_t>& rows) {
    std::vector<Tensor> parts;
    parts.reserve(set.sensors);
    for (std::size_t i = 0; i < set.sensors; ++i)
        parts.push_back(batch_columns(set, i, rows));
    return vconcat(parts);
}

}  // namespace detail

// Deployed-path accuracy: every sample is encoded by all S encoders, the
// fusion net classifies the concatenated codes, argmax decides.
inline Metrics evaluate(const SensorBundle& bundle, const SampleSet& test,
                        std::size_t threads = 0) {
    validate_bundle(bundle);
    validate_sampleset(test);
    require(test.sensors == bundle.S && test.dim == bundle.d && test.classes == bundle.C,
            "evaluate: test set dims do not match bundle");
    return detail::tally_predictions(
        test, bundle.C,
        [&](const std::vector<std::size_t>& rows) {
            std::vector<Tensor> codes;
            codes.reserve(bundle.S);
            for (std::size_t i = 0; i < bundle.S; ++i)
                codes.push_back(
                    model_forward(bundle.encoders[i], batch_columns(test, i, rows)));
            return model_forward(bundle.fusion, vconcat(codes));
        },
        threads);
}

// Teacher accuracy on raw concatenated observations, same tally rules.
inline Metrics evaluate_baseline(const SensorBundle& bundle, const SampleSet& test,
                                 std::size_t threads = 0) {
    validate_bundle(bundle);
    validate_sampleset(test);
    require(test.sensors == bundle.S && test.dim == bundle.d && test.classes == bundle.C,
            "evaluate: test set dims do not match bundle");
    return detail::tally_predictions(
        test, bundle.C,
        [&](const std::vector<std::size_t>& rows) {
            return model_forward(bundle.baseline, detail::sensor_batch_columns(test, rows));
        },
        threads);
}

// One CR point of a sweep. `flops` counts the deployed decision path
// (encoders + fusion). Failed rows keep the error and blank numeric fields.
struct SweepRow {
    double cr = 0.0;
    std::size_t n = 0;
    double fused_acc = 0.0;
    double baseline_acc = 0.0;
    double ratio = 0.0;
    std::uint64_t flops = 0;
    bool failed = false;
    std::string error;
};

inline std::string class_label(std::size_t index) {
    return index == 10 ? std::string("F") : std::to_string(index);
}

inline std::string metrics_csv(const std::vector<SweepRow>& rows) {
    std::string out = "cr,n,fused_acc,baseline_acc,ratio,flops\n";
    for (const SweepRow& r : rows) {
        out += fmt_double(r.cr) + "," + std::to_string(r.n) + ",";
        if (!r.failed) {
            out += fmt_double(r.fused_acc) + "," + fmt_double(r.baseline_acc) + "," +
                   fmt_double(r.ratio) + "," + std::to_string(r.flops);
        } else {
            out += ",,,";
        }
        out += "\n";
    }
    return out;
}

inline std::string confusion_csv(const Metrics& m) {
    std::string out;
    for (std::size_t c = 0; c < m.classes; ++c) {
        out += class_label(c);
        out += c + 1 < m.classes ? ',' : '\n';
    }
    for (std::size_t t = 0; t < m.classes; ++t) {
        for (std::size_t p = 0; p < m.classes; ++p) {
            out += std::to_string(m.at(t, p));
            out += p + 1 < m.classes ? ',' : '\n';
        }
    }
    return out;
}

// CR / FLOPs / accuracy table for plotting the computation-accuracy trend.
inline std::string tradeoff_report(const std::vector<SweepRow>& rows) {
    require(rows.size() >= 2, "tradeoff_report: need at least two sweep rows");
    std::string out = "cr,flops,fused_acc\n";
    for (const SweepRow& r : rows) {
        out += fmt_double(r.cr) + ",";
        if (!r.failed)
            out += std::to_string(r.flops) + "," + fmt_double(r.fused_acc);
        else
            out += ",";
        out += "\n";
    }
    return out;
}

struct InterpolationStep {
    LatentCode code;
    Tensor frame{1, 1};  // decoded observation, one row
};

// Walks from z_start to z_end one bit at a time, decoding after each flip.
// The flip order over differing positions is drawn from `rng` so runs are
// reproducible; the sequence has Hamming(start, end) + 1 frames and its last
// code equals z_end exactly.
inline std::vector<InterpolationStep> interpolate_latent(const MlpModel& decoder,
                                                         const LatentCode& z_start,
                                                         const LatentCode& z_end, Rng& rng) {
    require(decoder.role == Role::Decoder, "interpolate_latent: model is not a decoder");
    require(z_start.bits.size() == z_end.bits.size(),
            "interpolate_latent: code lengths differ");
    require(decoder.input_dim() == z_start.bits.size(),
            "interpolate_latent: decoder does not match code length");

    std::vector<std::size_t> differing;
    for (std::size_t i = 0; i < z_start.bits.size(); ++i)
        if (z_start.bits[i] != z_end.bits[i]) differing.push_back(i);
    shuffle(differing, rng);

    std::vector<InterpolationStep> steps;
    steps.reserve(differing.size() + 1);
    LatentCode current = z_start;
    const auto decode_current = [&] {
        InterpolationStep step;
        step.code = current;
        step.frame = model_forward(decoder, code_column(current)).transposed();
        steps.push_back(std::move(step));
    };
    decode_current();
    for (std::size_t pos : differing) {
        current.bits[pos] = z_end.bits[pos];
        decode_current();
    }
    return steps;
}

struct ReconstructionReport {
    std::vector<double> mse;              // per sample, input vs decoded output
    std::vector<std::string> image_files; // written PGMs, original/reconstruction pairs
};

// Dumps original/reconstruction PGM pairs for one sensor's view of each
// sample and logs the per-sample reconstruction error alongside.
inline ReconstructionReport reconstruction_report(const SensorBundle& bundle,
                                                  const SampleSet& samples,
                                                  const std::string& out_dir,
                                                  std::size_t sensor = 0) {
    validate_bundle(bundle);
    validate_sampleset(samples);
    require(sensor < samples.sensors, "reconstruction_report: sensor index out of range");
    require(samples.dim == bundle.d, "reconstruction_report: sample dim mismatch");

    std::size_t img_rows = samples.image_rows, img_cols = samples.image_cols;
    if (img_rows == 0 || img_cols == 0) {
        const auto side = static_cast<std::size_t>(std::llround(
            std::sqrt(static_cast<double>(samples.dim))));
        require(side * side == samples.dim,
                "reconstruction_report: dim " + std::to_string(samples.dim) +
                    " is not a square raster and the set carries no image shape");
        img_rows = img_cols = side;
    }

    std::filesystem::create_directories(out_dir);
    const MlpModel& encoder = bundle.encoders[sensor];
    const MlpModel& decoder = bundle.decoders[sensor];

    ReconstructionReport report;
    std::string mse_csv = "index,mse\n";
    char name[64];
    for (std::size_t j = 0; j < samples.size(); ++j) {
        Tensor original(samples.dim, 1);
        for (std::size_t k = 0; k < samples.dim; ++k)
            original(k, 0) = samples.observations[sensor](j, k);
        const LatentCode code = encode(encoder, original, bundle.R, sensor);
        const Tensor recon = model_forward(decoder, code_column(code));

        std::snprintf(name, sizeof name, "orig_%04zu.pgm", j);
        const std::string orig_path = out_dir + "/" + name;
        std::snprintf(name, sizeof name, "recon_%04zu.pgm", j);
        const std::string recon_path = out_dir + "/" + name;
        write_pgm(orig_path, as_image(original.transposed(), img_rows, img_cols));
        write_pgm(recon_path, as_image(recon.transposed(), img_rows, img_cols));
        report.image_files.push_back(orig_path);
        report.image_files.push_back(recon_path);

        const double sample_mse = mse_loss(original.transposed(), recon.transposed());
        report.mse.push_back(sample_mse);
        mse_csv += std::to_string(j) + "," + fmt_double(sample_mse) + "\n";
    }
    write_text_file(out_dir + "/reconstruction-mse.csv", mse_csv);
    return report;
}

}  // namespace goalcomp
