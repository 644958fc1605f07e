#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "goalcomp/errors.hpp"
#include "goalcomp/model.hpp"

namespace goalcomp {

// One sensor's transmitted message: n hard bits.
struct LatentCode {
    std::vector<std::uint8_t> bits;
    std::size_t sensor_index = 0;
};

// Everything one trained run produces: per-sensor encoders/decoders, the
// raw-input baseline, the code-input fusion classifier, and the dimensions
// they were built for. R is the per-sensor bit budget.
struct SensorBundle {
    std::vector<MlpModel> encoders;
    std::vector<MlpModel> decoders;
    MlpModel baseline;
    MlpModel fusion;
    std::uint32_t S = 0;
    std::uint32_t d = 0;
    std::uint32_t n = 0;
    std::uint32_t C = 0;
    std::uint32_t R = 0;
};

// Hidden widths interpolated geometrically between `in` and `out`:
// round(in · (out/in)^(k/(count+1))) for k = 1..count.
inline std::vector<std::size_t> geometric_widths(std::size_t in, std::size_t out,
                                                 std::size_t count) {
    require(in >= 1 && out >= 1, "geometric_widths: dims must be positive");
    std::vector<std::size_t> widths(count);
    const double ratio = static_cast<double>(out) / static_cast<double>(in);
    for (std::size_t k = 1; k <= count; ++k) {
        const double exponent = static_cast<double>(k) / static_cast<double>(count + 1);
        const double w = static_cast<double>(in) * std::pow(ratio, exponent);
        widths[k - 1] = static_cast<std::size_t>(std::llround(w));
    }
    return widths;
}

namespace detail {

inline MlpModel build_stack(Role role, std::size_t in, const std::vector<std::size_t>& hidden,
                            std::size_t out, Rng& rng) {
    MlpModel model;
    model.role = role;
    std::size_t prev = in;
    for (std::size_t width : hidden) {
        model.layers.push_back(make_dense(prev, width, Activation::ReLU, rng));
        prev = width;
    }
    model.layers.push_back(make_dense(prev, out, expected_output_activation(role), rng));
    validate_model(model);
    return model;
}

}  // namespace detail

// Per-sensor encoder: three hidden ReLU layers funneling d down to the
// n-bit QSigmoid output.
inline MlpModel build_encoder(std::size_t d, std::size_t n, Rng& rng,
                              const std::vector<std::size_t>& width_override = {}) {
    require(n >= 1, "build_encoder: code length must be positive");
    require(n <= d, "build_encoder: code length " + std::to_string(n) +
                        " exceeds input dim " + std::to_string(d));
    const auto hidden = width_override.empty() ? geometric_widths(d, n, 3) : width_override;
    return detail::build_stack(Role::Encoder, d, hidden, n, rng);
}

// Mirror of the encoder: hidden widths reversed, Sigmoid output of size d.
inline MlpModel build_decoder(std::size_t n, std::size_t d, Rng& rng,
                              const std::vector<std::size_t>& width_override = {}) {
    require(n >= 1, "build_decoder: code length must be positive");
    require(n <= d, "build_decoder: code length exceeds output dim");
    auto hidden = width_override.empty() ? geometric_widths(d, n, 3) : width_override;
    std::reverse(hidden.begin(), hidden.end());
    return detail::build_stack(Role::Decoder, n, hidden, d, rng);
}

// Fusion classifier on concatenated codes: five hidden ReLU layers from S·n
// to C, Softmax output (six weight layers in total).
inline MlpModel build_fusion(std::size_t S, std::size_t n, std::size_t C, Rng& rng,
                             const std::vector<std::size_t>& width_override = {}) {
    require(S >= 1 && n >= 1, "build_fusion: S·n must be positive");
    require(C >= 2, "build_fusion: need at least two classes");
    const auto hidden =
        width_override.empty() ? geometric_widths(S * n, C, 5) : width_override;
    return detail::build_stack(Role::Fusion, S * n, hidden, C, rng);
}

// Baseline classifier on raw concatenated observations: same depth as the
// fusion net with doubled hidden widths, so its capacity dominates.
inline MlpModel build_baseline(std::size_t S, std::size_t d, std::size_t C, Rng& rng,
                               const std::vector<std::size_t>& width_override = {}) {
    require(S >= 1 && d >= 1, "build_baseline: S·d must be positive");
    require(C >= 2, "build_baseline: need at least two classes");
    auto hidden = width_override.empty() ? geometric_widths(S * d, C, 5) : width_override;
    if (width_override.empty())
        for (std::size_t& w : hidden) w *= 2;
    return detail::build_stack(Role::Baseline, S * d, hidden, C, rng);
}

inline void validate_bundle(const SensorBundle& b) {
    require(b.S >= 1, "bundle: S must be at least 1");
    require(b.n <= b.R, "bundle: code length n=" + std::to_string(b.n) +
                            " exceeds bit budget R=" + std::to_string(b.R));
    require(b.encoders.size() == b.S, "bundle: expected one encoder per sensor");
    require(b.decoders.size() == b.S, "bundle: expected one decoder per sensor");
    for (const MlpModel& enc : b.encoders) {
        validate_model(enc);
        require(enc.role == Role::Encoder && enc.input_dim() == b.d && enc.output_dim() == b.n,
                "bundle: encoder dims disagree with header");
    }
    for (const MlpModel& dec : b.decoders) {
        validate_model(dec);
        require(dec.role == Role::Decoder && dec.input_dim() == b.n && dec.output_dim() == b.d,
                "bundle: decoder dims disagree with header");
    }
    validate_model(b.fusion);
    require(b.fusion.role == Role::Fusion && b.fusion.input_dim() == b.S * b.n &&
                b.fusion.output_dim() == b.C,
            "bundle: fusion dims disagree with header");
    validate_model(b.baseline);
    require(b.baseline.role == Role::Baseline && b.baseline.input_dim() == b.S * b.d &&
                b.baseline.output_dim() == b.C,
            "bundle: baseline dims disagree with header");
}

namespace detail {

// Accepts a length-d vector in either orientation and returns it as a
// (d x 1) column.
inline Tensor as_column(const Tensor& x, std::size_t d, const char* op) {
    require(x.size() == d && (x.cols() == 1 || x.rows() == 1),
            std::string(op) + ": expected a length-" + std::to_string(d) + " vector");
    return x.cols() == 1 ? x : x.transposed();
}

}  // namespace detail

// Runs one sensor's encoder on a single observation and packages the hard
// bits. Throws when the code would not fit the bit budget.
inline LatentCode encode(const MlpModel& encoder, const Tensor& x, std::uint64_t budget,
                         std::size_t sensor_index = 0) {
    require(encoder.role == Role::Encoder, "encode: model is not an encoder");
    const std::size_t n = encoder.output_dim();
    if (n > budget)
        throw BudgetExceededError("encode: code length " + std::to_string(n) +
                                  " exceeds bit budget " + std::to_string(budget));
    const Tensor col = detail::as_column(x, encoder.input_dim(), "encode");
    const Tensor bits = model_forward(encoder, col, QuantMode::Hard);
    LatentCode code;
    code.sensor_index = sensor_index;
    code.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) code.bits[i] = bits(i, 0) >= 0.5 ? 1 : 0;
    return code;
}

// Column vector view of a code, for feeding decoders and the fusion net.
inline Tensor code_column(const LatentCode& code) {
    Tensor col(code.bits.size(), 1);
    for (std::size_t i = 0; i < code.bits.size(); ++i) {
        require(code.bits[i] == 0 || code.bits[i] == 1, "code_column: non-binary bit");
        col(i, 0) = static_cast<double>(code.bits[i]);
    }
    return col;
}

// Stacks column-batches vertically (shared column count).
inline Tensor vconcat(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "vconcat: no parts");
    std::size_t rows = 0;
    const std::size_t cols = parts.front().cols();
    for (const Tensor& p : parts) {
        require(p.cols() == cols, "vconcat: column count mismatch");
        rows += p.rows();
    }
    Tensor out(rows, cols);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        for (std::size_t r = 0; r < p.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out(offset + r, c) = p(r, c);
        offset += p.rows();
    }
    return out;
}

// Class distribution from the fusion net over one set of sensor codes. The
// codes must arrive in sensor order, one per sensor; the result is a
// (1 x C) probability row and its argmax is the decision.
inline Tensor fuse_predict(const MlpModel& fusion, const std::vector<LatentCode>& codes) {
    require(fusion.role == Role::Fusion, "fuse_predict: model is not a fusion net");
    require(!codes.empty(), "fuse_predict: no codes");
    const std::size_t n = codes.front().bits.size();
    std::vector<Tensor> columns;
    columns.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        require(codes[i].sensor_index == i,
                "fuse_predict: codes must be ordered by sensor_index");
        require(codes[i].bits.size() == n, "fuse_predict: code length mismatch");
        columns.push_back(code_column(codes[i]));
    }
    const Tensor input = vconcat(columns);
    require(input.rows() == fusion.input_dim(),
            "fuse_predict: expected " + std::to_string(fusion.input_dim() / n) +
                " codes of length " + std::to_string(n));
    return model_forward(fusion, input).transposed();
}

// Class distribution from the baseline on raw per-sensor observations,
// concatenated in sensor order. Result is a (1 x C) probability row.
inline Tensor baseline_predict(const MlpModel& baseline,
                               const std::vector<Tensor>& observations) {
    require(baseline.role == Role::Baseline, "baseline_predict: model is not a baseline");
    require(!observations.empty(), "baseline_predict: no observations");
    const std::size_t S = observations.size();
    const std::size_t d = baseline.input_dim() / S;
    require(S * d == baseline.input_dim(),
            "baseline_predict: expected " + std::to_string(S) + " observations");
    std::vector<Tensor> columns;
    columns.reserve(S);
    for (const Tensor& obs : observations)
        columns.push_back(detail::as_column(obs, d, "baseline_predict"));
    return model_forward(baseline, vconcat(columns)).transposed();
}

// Total operation count across every member model.
inline std::uint64_t flops_estimate(const SensorBundle& b) {
    std::uint64_t total = 0;
    for (const MlpModel& m : b.encoders) total += flops_estimate(m);
    for (const MlpModel& m : b.decoders) total += flops_estimate(m);
    return total + flops_estimate(b.baseline) + flops_estimate(b.fusion);
}

// Cost of the deployed decision path: every encoder plus the fusion net
// (decoders and the baseline teacher stay on the bench).
inline std::uint64_t inference_flops(const SensorBundle& b) {
    std::uint64_t total = flops_estimate(b.fusion);
    for (const MlpModel& m : b.encoders) total += flops_estimate(m);
    return total;
}

inline double compression_ratio(std::size_t d, std::size_t n) {
    require(n >= 1, "compression_ratio: code length must be positive");
    return static_cast<double>(d) / static_cast<double>(n);
}

}  // namespace goalcomp
