#pragma once

#include <cmath>
#include <cstdint>

#include "goalcomp/activations.hpp"
#include "goalcomp/rng.hpp"
#include "goalcomp/tensor.hpp"

namespace goalcomp {

// How a QSigmoid output is materialized in the forward pass. Hard emits the
// deployable {0,1} bits; Soft substitutes the sigmoid surrogate so the whole
// network stays differentiable (used by gradient checks). The backward pass
// multiplier is the same in both modes.
enum class QuantMode : std::uint8_t { Hard = 0, Soft = 1 };

// Fully-connected layer: out = activation(W·x + b). Weights are
// (fan_out x fan_in); bias is a (fan_out x 1) column.
struct DenseLayer {
    Tensor weights{1, 1};
    Tensor bias{1, 1};
    Activation activation = Activation::Identity;

    std::size_t fan_in() const { return weights.cols(); }
    std::size_t fan_out() const { return weights.rows(); }
};

// He-initialized weight block: i.i.d. N(0, sqrt(2/fan_in)), shaped
// (fan_out x fan_in).
inline Tensor he_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    require(fan_in >= 1, "he_init: fan_in must be positive");
    require(fan_out >= 1, "he_init: fan_out must be positive");
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor w(fan_out, fan_in);
    for (std::size_t i = 0; i < w.size(); ++i) w.values()[i] = rng.normal(0.0, stddev);
    return w;
}

inline DenseLayer make_dense(std::size_t fan_in, std::size_t fan_out, Activation activation,
                             Rng& rng) {
    DenseLayer layer;
    layer.weights = he_init(fan_in, fan_out, rng);
    layer.bias = Tensor(fan_out, 1);
    layer.activation = activation;
    return layer;
}

// Pre-activation for a batch laid out column-wise: x is (fan_in x N) and the
// result is (fan_out x N), bias broadcast across columns.
inline Tensor dense_preactivation(const DenseLayer& layer, const Tensor& x) {
    require(x.rows() == layer.weights.cols(),
            "dense_forward: input rows (" + std::to_string(x.rows()) +
                ") do not match layer fan-in (" + std::to_string(layer.weights.cols()) + ")");
    require(layer.bias.rows() == layer.weights.rows() && layer.bias.cols() == 1,
            "dense_forward: bias shape does not match fan-out");
    Tensor pre = matmul(layer.weights, x);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        const double b = layer.bias(r, 0);
        for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += b;
    }
    return pre;
}

// Applies a layer's activation to a column-batch of pre-activations.
inline Tensor apply_activation(Activation activation, const Tensor& pre, QuantMode mode) {
    switch (activation) {
        case Activation::Identity:
            return pre;
        case Activation::ReLU:
            return relu(pre);
        case Activation::Sigmoid:
            return sigmoid(pre);
        case Activation::QSigmoid:
            return mode == QuantMode::Hard ? qsigmoid(pre).bits : sigmoid(pre);
        case Activation::Softmax: {
            Tensor out = pre;
            softmax_columns_inplace(out);
            return out;
        }
    }
    throw ContractError("apply_activation: unknown activation");
}

// activation(W·x + b), column-preserving over the batch.
inline Tensor dense_forward(const DenseLayer& layer, const Tensor& x,
                            QuantMode mode = QuantMode::Hard) {
    const Tensor pre = dense_preactivation(layer, x);
    Tensor out = apply_activation(layer.activation, pre, mode);
    ensure_finite(out, "dense_forward");
    return out;
}

// Deterministic cost model: one multiply-add pair per weight, one add per
// bias term, one operation per activated unit.
inline std::uint64_t layer_flops(const DenseLayer& layer) {
    const auto in = static_cast<std::uint64_t>(layer.fan_in());
    const auto out = static_cast<std::uint64_t>(layer.fan_out());
    return 2 * in * out + out + out;
}

}  // namespace goalcomp
