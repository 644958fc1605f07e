#pragma once

#include <cmath>
#include <cstdint>

#include "goalcomp/backprop.hpp"

namespace goalcomp {

// Bias-corrected Adam state for one parameter tensor. Moments always match
// the parameter shape; t counts completed steps.
struct AdamState {
    Tensor m{1, 1};
    Tensor v{1, 1};
    std::uint64_t t = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline AdamState make_adam_state(const Tensor& params, double lr = 0.01) {
    AdamState state;
    state.m = Tensor(params.rows(), params.cols());
    state.v = Tensor(params.rows(), params.cols());
    state.lr = lr;
    return state;
}

inline void adam_step(Tensor& params, const Tensor& grad, AdamState& state) {
    require(params.same_shape(grad), "adam_step: gradient shape mismatch");
    require(params.same_shape(state.m) && params.same_shape(state.v),
            "adam_step: state shape mismatch");
    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad.values()[i];
        double& m = state.m.values()[i];
        double& v = state.v.values()[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / c1;
        const double v_hat = v / c2;
        params.values()[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    ensure_finite(params, "adam_step");
}

// Adam states for every layer of a model, applied from a GradientBundle.
// Layers whose bundle slot is empty (frozen) are skipped untouched.
struct ModelOptimizer {
    std::vector<AdamState> weight_states;
    std::vector<AdamState> bias_states;

    ModelOptimizer() = default;
    ModelOptimizer(const MlpModel& model, double lr) {
        weight_states.reserve(model.layers.size());
        bias_states.reserve(model.layers.size());
        for (const DenseLayer& layer : model.layers) {
            weight_states.push_back(make_adam_state(layer.weights, lr));
            bias_states.push_back(make_adam_state(layer.bias, lr));
        }
    }

    void apply(MlpModel& model, const GradientBundle& grads) {
        require(grads.size() == model.layers.size(), "ModelOptimizer: bundle size mismatch");
        require(weight_states.size() == model.layers.size(),
                "ModelOptimizer: state built for a different model");
        for (std::size_t k = 0; k < grads.size(); ++k) {
            if (!grads[k].has_value()) continue;
            if (model.frozen)
                throw ContractError("ModelOptimizer: attempted update of a frozen model");
            adam_step(model.layers[k].weights, grads[k]->d_weights, weight_states[k]);
            adam_step(model.layers[k].bias, grads[k]->d_bias, bias_states[k]);
        }
    }
};

}  // namespace goalcomp
