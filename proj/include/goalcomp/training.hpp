#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goalcomp/adam.hpp"
#include "goalcomp/backprop.hpp"
#include "goalcomp/bundle.hpp"
#include "goalcomp/config.hpp"
#include "goalcomp/data.hpp"
#include "goalcomp/format.hpp"

namespace goalcomp {

// A loss above this (or any non-finite loss) aborts the phase.
inline constexpr double kDivergenceCeiling = 1e6;

struct TrainRecord {
    int phase = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
    std::optional<double> accuracy;  // absent where accuracy is undefined
    double seconds = 0.0;
};

// Per-epoch training history. Epoch 0 records the freshly initialized model
// evaluated directly; epoch k >= 1 records the mean training loss of epoch k.
struct TrainLog {
    std::vector<TrainRecord> records;

    void append(int phase, std::size_t epoch, double loss, std::optional<double> accuracy,
                double seconds) {
        require(records.empty() || records.back().phase < phase ||
                    (records.back().phase == phase && records.back().epoch < epoch),
                "TrainLog: records must be strictly ordered by (phase, epoch)");
        records.push_back({phase, epoch, loss, accuracy, seconds});
    }

    void extend(const TrainLog& other) {
        for (const TrainRecord& r : other.records)
            append(r.phase, r.epoch, r.loss, r.accuracy, r.seconds);
    }

    std::string to_csv() const {
        std::string out = "phase,epoch,loss,accuracy,seconds\n";
        for (const TrainRecord& r : records) {
            out += std::to_string(r.phase) + "," + std::to_string(r.epoch) + "," +
                   fmt_double(r.loss) + ",";
            if (r.accuracy) out += fmt_double(*r.accuracy);
            out += "," + fmt_double(r.seconds) + "\n";
        }
        return out;
    }
};

namespace detail {

inline void check_loss(int phase, std::size_t epoch, double loss) {
    if (!std::isfinite(loss) || loss > kDivergenceCeiling)
        throw TrainingDivergedError(phase, static_cast<int>(epoch),
                                    "loss " + fmt_double(loss));
}

// Seeded shuffle of [0, N) chopped into batches.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t N,
                                                           std::size_t batch_size, Rng& rng) {
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::vector<std::vector<std::size_t>> batches;
    batches.reserve((N + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < N; start += batch_size) {
        const std::size_t stop = std::min(N, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

// Fixed-order batches (no shuffle) for full-set evaluation passes.
inline std::vector<std::vector<std::size_t>> eval_chunks(std::size_t N,
                                                         std::size_t chunk = 512) {
    std::vector<std::vector<std::size_t>> chunks;
    for (std::size_t start = 0; start < N; start += chunk) {
        const std::size_t stop = std::min(N, start + chunk);
        std::vector<std::size_t> rows(stop - start);
        std::iota(rows.begin(), rows.end(), start);
        chunks.push_back(std::move(rows));
    }
    return chunks;
}

inline std::size_t correct_in_columns(const Tensor& probs, const SampleSet& set,
                                      const std::vector<std::size_t>& rows) {
    std::size_t correct = 0;
    for (std::size_t b = 0; b < rows.size(); ++b) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < probs.rows(); ++r)
            if (probs(r, b) > probs(arg, b)) arg = r;
        if (arg == set.labels[rows[b]]) ++correct;
    }
    return correct;
}

inline double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// (S·d x B) concatenated raw observation columns.
inline Tensor raw_columns(const SampleSet& set, const std::vector<std::size_t>& rows) {
    std::vector<Tensor> parts;
    parts.reserve(set.sensors);
    for (std::size_t i = 0; i < set.sensors; ++i)
        parts.push_back(batch_columns(set, i, rows));
    return vconcat(parts);
}

// Rows [r0, r0+count) of a column-batch.
inline Tensor row_block(const Tensor& m, std::size_t r0, std::size_t count) {
    require(r0 + count <= m.rows(), "row_block: range out of bounds");
    Tensor out(count, m.cols());
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r0 + r, c);
    return out;
}

// Shifts the quantizer layer's bias so each code unit's median pre-activation
// over the given inputs sits at the threshold. With nonnegative inputs the
// random per-unit offsets of a fresh network dwarf the cross-sample spread,
// which parks code units entirely on one side of the threshold; a constant
// bit receives gradients that cannot tell samples apart, so pretraining
// settles into a collapsed code it rarely escapes. Centering the medians
// starts every bit at an even split so per-sample gradient diversity exists
// from the first step.
inline void recenter_quantizer(MlpModel& encoder, const Tensor& x_cols) {
    const ModelTrace trace = forward_trace(encoder, x_cols, QuantMode::Hard);
    const Tensor& pre = trace.pre.back();
    DenseLayer& last = encoder.layers.back();
    std::vector<double> unit(pre.cols());
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        for (std::size_t c = 0; c < pre.cols(); ++c) unit[c] = pre(r, c);
        const auto mid = unit.begin() + static_cast<std::ptrdiff_t>(unit.size() / 2);
        std::nth_element(unit.begin(), mid, unit.end());
        last.bias(r, 0) -= *mid;
    }
}

}  // namespace detail

struct Phase1Result {
    std::vector<MlpModel> encoders;
    std::vector<MlpModel> decoders;
    TrainLog log;
};

// Phase 1: per-sensor autoencoder pretraining under reconstruction MSE. The
// encoders keep their hard binary bottleneck during the forward pass; the
// backward pass rides the straight-through surrogate.
inline Phase1Result phase1_autoencoders(const RunConfig& cfg, const SampleSet& train,
                                        Rng& rng) {
    validate_sampleset(train);
    require(train.sensors == cfg.sensors && train.dim == cfg.input_dim,
            "phase1: dataset dims do not match config");
    const std::size_t S = cfg.sensors;
    const std::size_t N = train.size();

    Phase1Result out;
    std::vector<ModelOptimizer> enc_opts, dec_opts;
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < S; ++i) {
        out.encoders.push_back(
            build_encoder(cfg.input_dim, cfg.code_bits, rng, cfg.encoder_widths));
        detail::recenter_quantizer(out.encoders.back(), batch_columns(train, i, all));
        out.decoders.push_back(
            build_decoder(cfg.code_bits, cfg.input_dim, rng, cfg.encoder_widths));
        enc_opts.emplace_back(out.encoders.back(), cfg.learning_rate);
        dec_opts.emplace_back(out.decoders.back(), cfg.learning_rate);
    }

    const auto full_set_mse = [&] {
        double loss_sum = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            double sensor_sum = 0.0;
            for (const auto& rows : detail::eval_chunks(N)) {
                const Tensor x = batch_columns(train, i, rows);
                const Tensor recon =
                    model_forward(out.decoders[i], model_forward(out.encoders[i], x));
                sensor_sum += mse_loss(x.transposed(), recon.transposed()) *
                              static_cast<double>(rows.size());
            }
            loss_sum += sensor_sum / static_cast<double>(N);
        }
        return loss_sum / static_cast<double>(S);
    };

    auto start = std::chrono::steady_clock::now();
    out.log.append(1, 0, full_set_mse(), std::nullopt, detail::elapsed_seconds(start));

    for (std::size_t epoch = 1; epoch <= cfg.epochs.autoencoder; ++epoch) {
        start = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            double sensor_loss = 0.0;
            for (const auto& rows : detail::epoch_batches(N, cfg.batch_size, rng)) {
                const Tensor x = batch_columns(train, i, rows);
                const ModelTrace enc_trace = forward_trace(out.encoders[i], x);
                const ModelTrace dec_trace =
                    forward_trace(out.decoders[i], enc_trace.output());
                const LossHead head = mse_head(dec_trace.output(), x);
                detail::check_loss(1, epoch, head.loss);
                GradientBundle dec_grads, enc_grads;
                const Tensor d_code =
                    backward_trace(out.decoders[i], dec_trace, head.d_output, dec_grads);
                backward_trace(out.encoders[i], enc_trace, d_code, enc_grads);
                dec_opts[i].apply(out.decoders[i], dec_grads);
                enc_opts[i].apply(out.encoders[i], enc_grads);
                sensor_loss += head.loss * static_cast<double>(rows.size());
            }
            epoch_loss += sensor_loss / static_cast<double>(N);
        }
        out.log.append(1, epoch, epoch_loss / static_cast<double>(S), std::nullopt,
                       detail::elapsed_seconds(start));
    }
    return out;
}

struct Phase2Result {
    MlpModel baseline;
    TrainLog log;
};

// Phase 2: the baseline classifier learns the label distribution from raw
// concatenated observations, then its weights are frozen for good — it
// serves as the constant teacher afterwards.
inline Phase2Result phase2_baseline(const RunConfig& cfg, const SampleSet& train, Rng& rng) {
    validate_sampleset(train);
    require(train.sensors == cfg.sensors && train.dim == cfg.input_dim &&
                train.classes == cfg.classes,
            "phase2: dataset dims do not match config");
    const std::size_t N = train.size();

    Phase2Result out;
    out.baseline = build_baseline(cfg.sensors, cfg.input_dim, cfg.classes, rng,
                                  cfg.baseline_widths);
    ModelOptimizer opt(out.baseline, cfg.learning_rate);

    const auto full_set_eval = [&]() -> std::pair<double, double> {
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (const auto& rows : detail::eval_chunks(N)) {
            const Tensor probs = model_forward(out.baseline, detail::raw_columns(train, rows));
            loss_sum += cross_entropy(label_columns(train, rows).transposed(),
                                      probs.transposed()) *
                        static_cast<double>(rows.size());
            correct += detail::correct_in_columns(probs, train, rows);
        }
        return {loss_sum / static_cast<double>(N),
                static_cast<double>(correct) / static_cast<double>(N)};
    };

    auto start = std::chrono::steady_clock::now();
    const auto [loss0, acc0] = full_set_eval();
    out.log.append(2, 0, loss0, acc0, detail::elapsed_seconds(start));

    for (std::size_t epoch = 1; epoch <= cfg.epochs.baseline; ++epoch) {
        start = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        std::size_t correct = 0;
        for (const auto& rows : detail::epoch_batches(N, cfg.batch_size, rng)) {
            const Tensor x = detail::raw_columns(train, rows);
            const Tensor y = label_columns(train, rows);
            const ModelTrace trace = forward_trace(out.baseline, x);
            const LossHead head = cross_entropy_head(trace.output(), y);
            detail::check_loss(2, epoch, head.loss);
            GradientBundle grads;
            backward_trace(out.baseline, trace, head.d_output, grads);
            opt.apply(out.baseline, grads);
            epoch_loss += head.loss * static_cast<double>(rows.size());
            correct += detail::correct_in_columns(trace.output(), train, rows);
        }
        out.log.append(2, epoch, epoch_loss / static_cast<double>(N),
                       static_cast<double>(correct) / static_cast<double>(N),
                       detail::elapsed_seconds(start));
    }

    out.baseline.frozen = true;
    return out;
}

struct Phase3Result {
    SensorBundle bundle;
    TrainLog log;
};

// Phase 3: encoders and the fusion classifier train end-to-end under
// cross-entropy plus divergence from the frozen teacher's soft targets. The
// teacher contributes no gradient entries. Soft targets are recomputed per
// batch by default to keep memory bounded; cache_soft_targets trades one
// N x C table for skipping the repeated teacher passes, with bitwise
// identical results since the teacher is frozen and forward passes are
// column-independent.
inline Phase3Result phase3_joint(const RunConfig& cfg, const SampleSet& train,
                                 std::vector<MlpModel> encoders,
                                 std::vector<MlpModel> decoders, const MlpModel& baseline,
                                 Rng& rng, bool cache_soft_targets = false) {
    validate_sampleset(train);
    require(train.sensors == cfg.sensors && train.dim == cfg.input_dim &&
                train.classes == cfg.classes,
            "phase3: dataset dims do not match config");
    if (!baseline.frozen)
        throw ContractError("phase3: baseline teacher must be frozen before joint training");
    require(encoders.size() == cfg.sensors && decoders.size() == cfg.sensors,
            "phase3: expected one encoder and decoder per sensor");
    for (const MlpModel& enc : encoders)
        require(enc.input_dim() == cfg.input_dim && enc.output_dim() == cfg.code_bits,
                "phase3: encoder dims do not match config");
    const std::size_t S = cfg.sensors;
    const std::size_t n = cfg.code_bits;
    const std::size_t N = train.size();

    MlpModel fusion =
        build_fusion(cfg.sensors, cfg.code_bits, cfg.classes, rng, cfg.fusion_widths);
    ModelOptimizer fusion_opt(fusion, cfg.learning_rate);
    std::vector<ModelOptimizer> enc_opts;
    for (MlpModel& enc : encoders) enc_opts.emplace_back(enc, cfg.learning_rate);

    Tensor cached_targets;  // (C x N) when caching is on
    if (cache_soft_targets) {
        cached_targets = Tensor(cfg.classes, N);
        for (const auto& rows : detail::eval_chunks(N)) {
            const Tensor block = model_forward(baseline, detail::raw_columns(train, rows));
            for (std::size_t c = 0; c < block.rows(); ++c)
                for (std::size_t b = 0; b < rows.size(); ++b)
                    cached_targets(c, rows[b]) = block(c, b);
        }
    }
    const auto soft_targets = [&](const std::vector<std::size_t>& rows,
                                  const Tensor& raw) -> Tensor {
        if (!cache_soft_targets) return model_forward(baseline, raw);
        Tensor out(cfg.classes, rows.size());
        for (std::size_t c = 0; c < out.rows(); ++c)
            for (std::size_t b = 0; b < rows.size(); ++b)
                out(c, b) = cached_targets(c, rows[b]);
        return out;
    };

    TrainLog log;
    const auto full_set_eval = [&]() -> std::pair<double, double> {
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (const auto& rows : detail::eval_chunks(N)) {
            std::vector<Tensor> codes;
            codes.reserve(S);
            for (std::size_t i = 0; i < S; ++i)
                codes.push_back(model_forward(encoders[i], batch_columns(train, i, rows)));
            const Tensor probs = model_forward(fusion, vconcat(codes));
            const Tensor teacher = soft_targets(rows, detail::raw_columns(train, rows));
            loss_sum += distill_loss(label_columns(train, rows).transposed(),
                                     probs.transposed(), teacher.transposed()) *
                        static_cast<double>(rows.size());
            correct += detail::correct_in_columns(probs, train, rows);
        }
        return {loss_sum / static_cast<double>(N),
                static_cast<double>(correct) / static_cast<double>(N)};
    };

    auto start = std::chrono::steady_clock::now();
    const auto [loss0, acc0] = full_set_eval();
    log.append(3, 0, loss0, acc0, detail::elapsed_seconds(start));

    for (std::size_t epoch = 1; epoch <= cfg.epochs.joint; ++epoch) {
        start = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        std::size_t correct = 0;
        for (const auto& rows : detail::epoch_batches(N, cfg.batch_size, rng)) {
            std::vector<Tensor> xs;
            std::vector<ModelTrace> enc_traces;
            std::vector<Tensor> code_blocks;
            xs.reserve(S);
            enc_traces.reserve(S);
            code_blocks.reserve(S);
            for (std::size_t i = 0; i < S; ++i) {
                xs.push_back(batch_columns(train, i, rows));
                enc_traces.push_back(forward_trace(encoders[i], xs.back()));
                code_blocks.push_back(enc_traces.back().output());
            }
            const ModelTrace fusion_trace = forward_trace(fusion, vconcat(code_blocks));
            const Tensor teacher = soft_targets(rows, vconcat(xs));
            const Tensor y = label_columns(train, rows);
            const LossHead head = distill_head(fusion_trace.output(), y, teacher);
            detail::check_loss(3, epoch, head.loss);
            assert(head.loss >= cross_entropy(y.transposed(),
                                              fusion_trace.output().transposed()) -
                                    1e-12);

            GradientBundle fusion_grads;
            const Tensor d_codes =
                backward_trace(fusion, fusion_trace, head.d_output, fusion_grads);
            fusion_opt.apply(fusion, fusion_grads);
            for (std::size_t i = 0; i < S; ++i) {
                GradientBundle enc_grads;
                backward_trace(encoders[i], enc_traces[i],
                               detail::row_block(d_codes, i * n, n), enc_grads);
                enc_opts[i].apply(encoders[i], enc_grads);
            }
            epoch_loss += head.loss * static_cast<double>(rows.size());
            correct += detail::correct_in_columns(fusion_trace.output(), train, rows);
        }
        log.append(3, epoch, epoch_loss / static_cast<double>(N),
                   static_cast<double>(correct) / static_cast<double>(N),
                   detail::elapsed_seconds(start));
    }

    Phase3Result out;
    out.log = std::move(log);
    out.bundle.S = static_cast<std::uint32_t>(cfg.sensors);
    out.bundle.d = static_cast<std::uint32_t>(cfg.input_dim);
    out.bundle.n = static_cast<std::uint32_t>(cfg.code_bits);
    out.bundle.C = static_cast<std::uint32_t>(cfg.classes);
    out.bundle.R = static_cast<std::uint32_t>(cfg.bit_budget);
    out.bundle.encoders = std::move(encoders);
    out.bundle.decoders = std::move(decoders);
    for (MlpModel& dec : out.bundle.decoders) dec.frozen = true;
    out.bundle.baseline = baseline;
    out.bundle.fusion = std::move(fusion);
    validate_bundle(out.bundle);
    return out;
}

}  // namespace goalcomp
