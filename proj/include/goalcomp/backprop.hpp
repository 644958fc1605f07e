#pragma once

#include <optional>
#include <vector>

#include "goalcomp/losses.hpp"
#include "goalcomp/model.hpp"

namespace goalcomp {

enum class LossKind : std::uint8_t { MSE = 0, CrossEntropy = 1, Distill = 2 };

struct LayerGrad {
    Tensor d_weights{1, 1};
    Tensor d_bias{1, 1};
};

// One slot per layer, in layer order; frozen layers carry no entry.
using GradientBundle = std::vector<std::optional<LayerGrad>>;

// Cached forward pass: per-layer pre-activations and activated outputs for a
// column-batch. Composable: the output of one trace can feed another model.
struct ModelTrace {
    Tensor input{1, 1};
    std::vector<Tensor> pre;
    std::vector<Tensor> post;
    QuantMode mode = QuantMode::Hard;

    const Tensor& output() const {
        require(!post.empty(), "ModelTrace: empty trace");
        return post.back();
    }
};

inline ModelTrace forward_trace(const MlpModel& model, const Tensor& x,
                                QuantMode mode = QuantMode::Hard) {
    require(!model.layers.empty(), "forward_trace: model has no layers");
    ModelTrace trace;
    trace.input = x;
    trace.mode = mode;
    trace.pre.reserve(model.layers.size());
    trace.post.reserve(model.layers.size());
    const Tensor* h = &trace.input;
    for (const DenseLayer& layer : model.layers) {
        trace.pre.push_back(dense_preactivation(layer, *h));
        trace.post.push_back(apply_activation(layer.activation, trace.pre.back(), mode));
        ensure_finite(trace.post.back(), "forward_trace");
        h = &trace.post.back();
    }
    return trace;
}

namespace detail {

// dL/d(pre-activation) from dL/d(output) for one layer. ReLU gates on the
// sign of the pre-activation; Sigmoid and QSigmoid both use the sigmoid
// derivative (QSigmoid is the straight-through path); Softmax applies its
// full per-column Jacobian.
inline Tensor activation_backward(Activation activation, const Tensor& pre, const Tensor& post,
                                  const Tensor& d_out) {
    require(d_out.same_shape(pre), "activation_backward: gradient shape mismatch");
    Tensor d_pre = d_out;
    switch (activation) {
        case Activation::Identity:
            return d_pre;
        case Activation::ReLU:
            for (std::size_t i = 0; i < pre.size(); ++i)
                if (pre.values()[i] <= 0.0) d_pre.values()[i] = 0.0;
            return d_pre;
        case Activation::Sigmoid:
        case Activation::QSigmoid:
            for (std::size_t i = 0; i < pre.size(); ++i) {
                const double s = sigmoid_scalar(pre.values()[i]);
                d_pre.values()[i] *= s * (1.0 - s);
            }
            return d_pre;
        case Activation::Softmax:
            for (std::size_t c = 0; c < pre.cols(); ++c) {
                double dot = 0.0;
                for (std::size_t r = 0; r < pre.rows(); ++r) dot += d_out(r, c) * post(r, c);
                for (std::size_t r = 0; r < pre.rows(); ++r)
                    d_pre(r, c) = post(r, c) * (d_out(r, c) - dot);
            }
            return d_pre;
    }
    throw ContractError("activation_backward: unknown activation");
}

inline std::vector<bool> effective_freeze_mask(const MlpModel& model,
                                               const std::vector<bool>& mask) {
    if (mask.empty()) return std::vector<bool>(model.layers.size(), model.frozen);
    require(mask.size() == model.layers.size(),
            "backprop: freeze mask size does not match layer count");
    return mask;
}

}  // namespace detail

// Walks the trace backwards from dL/d(model output), filling `grads` (one
// optional per layer; frozen layers stay empty but still pass the gradient
// through) and returning dL/d(model input).
inline Tensor backward_trace(const MlpModel& model, const ModelTrace& trace,
                             const Tensor& d_output, GradientBundle& grads,
                             const std::vector<bool>& freeze_mask = {}) {
    require(trace.pre.size() == model.layers.size(), "backward_trace: trace/model mismatch");
    require(d_output.same_shape(trace.post.back()),
            "backward_trace: output gradient shape mismatch");
    const std::vector<bool> mask = detail::effective_freeze_mask(model, freeze_mask);
    grads.assign(model.layers.size(), std::nullopt);
    Tensor d_out = d_output;
    for (std::size_t k = model.layers.size(); k-- > 0;) {
        const DenseLayer& layer = model.layers[k];
        const Tensor d_pre =
            detail::activation_backward(layer.activation, trace.pre[k], trace.post[k], d_out);
        if (!mask[k]) {
            const Tensor& layer_input = k == 0 ? trace.input : trace.post[k - 1];
            LayerGrad g;
            g.d_weights = matmul_nt(d_pre, layer_input);
            g.d_bias = Tensor(layer.fan_out(), 1);
            for (std::size_t r = 0; r < d_pre.rows(); ++r) {
                double sum = 0.0;
                for (std::size_t c = 0; c < d_pre.cols(); ++c) sum += d_pre(r, c);
                g.d_bias(r, 0) = sum;
            }
            ensure_finite(g.d_weights, "backward_trace");
            ensure_finite(g.d_bias, "backward_trace");
            grads[k] = std::move(g);
        }
        d_out = matmul_tn(layer.weights, d_pre);
    }
    return d_out;
}

// Loss heads: scalar loss plus dL/d(output) in the engine's column layout.
// The scalar is computed by the public loss functions (on transposed views)
// so logged values and head values are bitwise identical.
struct LossHead {
    double loss = 0.0;
    Tensor d_output{1, 1};
};

inline LossHead mse_head(const Tensor& output_cols, const Tensor& target_cols) {
    require(output_cols.same_shape(target_cols), "mse_head: shape mismatch");
    LossHead head;
    head.loss = mse_loss(target_cols.transposed(), output_cols.transposed());
    head.d_output = Tensor(output_cols.rows(), output_cols.cols());
    const double scale = 2.0 / static_cast<double>(output_cols.cols());
    for (std::size_t i = 0; i < output_cols.size(); ++i)
        head.d_output.values()[i] = scale * (output_cols.values()[i] - target_cols.values()[i]);
    return head;
}

inline LossHead cross_entropy_head(const Tensor& probs_cols, const Tensor& onehot_cols) {
    require(probs_cols.same_shape(onehot_cols), "cross_entropy_head: shape mismatch");
    LossHead head;
    head.loss = cross_entropy(onehot_cols.transposed(), probs_cols.transposed());
    head.d_output = Tensor(probs_cols.rows(), probs_cols.cols());
    const double inv = 1.0 / (static_cast<double>(probs_cols.cols()) * std::log(2.0));
    for (std::size_t i = 0; i < probs_cols.size(); ++i) {
        const double p = probs_cols.values()[i];
        const double t = onehot_cols.values()[i];
        // Zero gradient where the log argument sits on its clamp boundary,
        // matching the clamped loss exactly.
        if (p <= kProbEpsilon || p >= 1.0 - kProbEpsilon) continue;
        head.d_output.values()[i] = -inv * (t / p - (1.0 - t) / (1.0 - p));
    }
    return head;
}

inline LossHead kl_head(const Tensor& teacher_cols, const Tensor& probs_cols) {
    require(teacher_cols.same_shape(probs_cols), "kl_head: shape mismatch");
    LossHead head;
    head.loss = kl_divergence(teacher_cols.transposed(), probs_cols.transposed());
    head.d_output = Tensor(probs_cols.rows(), probs_cols.cols());
    const double inv = 1.0 / (static_cast<double>(probs_cols.cols()) * std::log(2.0));
    for (std::size_t c = 0; c < probs_cols.cols(); ++c) {
        // Mirror the per-sample floor: a sample whose divergence rounded
        // below zero contributes no gradient, exactly as it adds no loss.
        double sample_kl = 0.0;
        for (std::size_t r = 0; r < probs_cols.rows(); ++r) {
            const double t = teacher_cols(r, c);
            if (t > 0.0)
                sample_kl += t * std::log2(t / std::max(probs_cols(r, c), kProbEpsilon));
        }
        if (sample_kl <= 0.0) continue;
        for (std::size_t r = 0; r < probs_cols.rows(); ++r) {
            const double t = teacher_cols(r, c);
            const double q = probs_cols(r, c);
            if (t > 0.0 && q > kProbEpsilon) head.d_output(r, c) = -inv * t / q;
        }
    }
    return head;
}

inline LossHead distill_head(const Tensor& probs_cols, const Tensor& onehot_cols,
                             const Tensor& teacher_cols) {
    const LossHead ce = cross_entropy_head(probs_cols, onehot_cols);
    const LossHead kl = kl_head(teacher_cols, probs_cols);
    LossHead head;
    head.loss = ce.loss + kl.loss;
    head.d_output = ce.d_output;
    for (std::size_t i = 0; i < head.d_output.size(); ++i)
        head.d_output.values()[i] += kl.d_output.values()[i];
    return head;
}

// Single-model convenience: forward, attach the requested loss head, walk
// back. `target_cols` is the reconstruction target for MSE or the one-hot
// labels otherwise; `teacher_cols` supplies the constant soft targets for
// the distillation loss and must be null for the other kinds.
inline double backprop(const MlpModel& model, const Tensor& x_cols, const Tensor& target_cols,
                       LossKind kind, GradientBundle& grads,
                       const std::vector<bool>& freeze_mask = {},
                       const Tensor* teacher_cols = nullptr,
                       QuantMode mode = QuantMode::Hard) {
    const ModelTrace trace = forward_trace(model, x_cols, mode);
    LossHead head;
    switch (kind) {
        case LossKind::MSE:
            require(teacher_cols == nullptr, "backprop: MSE takes no teacher");
            head = mse_head(trace.output(), target_cols);
            break;
        case LossKind::CrossEntropy:
            require(teacher_cols == nullptr, "backprop: cross-entropy takes no teacher");
            head = cross_entropy_head(trace.output(), target_cols);
            break;
        case LossKind::Distill:
            require(teacher_cols != nullptr, "backprop: distillation requires a teacher");
            head = distill_head(trace.output(), target_cols, *teacher_cols);
            break;
    }
    backward_trace(model, trace, head.d_output, grads, freeze_mask);
    return head.loss;
}

}  // namespace goalcomp
