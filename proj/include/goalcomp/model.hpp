#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "goalcomp/layer.hpp"

namespace goalcomp {

enum class Role : std::uint8_t { Encoder = 0, Decoder = 1, Baseline = 2, Fusion = 3 };

inline const char* role_name(Role role) {
    switch (role) {
        case Role::Encoder: return "encoder";
        case Role::Decoder: return "decoder";
        case Role::Baseline: return "baseline";
        case Role::Fusion: return "fusion";
    }
    return "unknown";
}

// Feed-forward stack of dense layers. The role tag fixes which output
// activation is legal; `frozen` marks parameters that must not change.
struct MlpModel {
    Role role = Role::Encoder;
    std::vector<DenseLayer> layers;
    bool frozen = false;

    std::size_t input_dim() const {
        require(!layers.empty(), "MlpModel: empty model has no input dim");
        return layers.front().fan_in();
    }
    std::size_t output_dim() const {
        require(!layers.empty(), "MlpModel: empty model has no output dim");
        return layers.back().fan_out();
    }
};

inline bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weights == b.weights && a.bias == b.bias;
}

inline bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.role == b.role && a.frozen == b.frozen && a.layers == b.layers;
}

inline Activation expected_output_activation(Role role) {
    switch (role) {
        case Role::Encoder: return Activation::QSigmoid;
        case Role::Decoder: return Activation::Sigmoid;
        case Role::Baseline: return Activation::Softmax;
        case Role::Fusion: return Activation::Softmax;
    }
    throw ContractError("expected_output_activation: unknown role");
}

// Structural checks: non-empty, consecutive shapes chain, quantizer/softmax
// confined to the output layer, and the role-mandated output activation.
inline void validate_model(const MlpModel& model) {
    require(!model.layers.empty(), "validate_model: model has no layers");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const DenseLayer& layer = model.layers[i];
        require(layer.bias.rows() == layer.weights.rows() && layer.bias.cols() == 1,
                "validate_model: layer " + std::to_string(i) + " bias shape mismatch");
        if (i + 1 < model.layers.size()) {
            require(model.layers[i + 1].fan_in() == layer.fan_out(),
                    "validate_model: layer " + std::to_string(i) + " output dim " +
                        std::to_string(layer.fan_out()) + " does not feed layer " +
                        std::to_string(i + 1));
            require(layer.activation != Activation::QSigmoid &&
                        layer.activation != Activation::Softmax,
                    "validate_model: quantizer/softmax allowed only as the output layer");
        }
    }
    require(model.layers.back().activation == expected_output_activation(model.role),
            std::string("validate_model: ") + role_name(model.role) +
                " output activation must be " +
                activation_name(expected_output_activation(model.role)));
}

// Runs the whole stack on a column-batch x of shape (input_dim x N).
inline Tensor model_forward(const MlpModel& model, const Tensor& x,
                            QuantMode mode = QuantMode::Hard) {
    require(!model.layers.empty(), "model_forward: model has no layers");
    Tensor h = x;
    for (const DenseLayer& layer : model.layers) h = dense_forward(layer, h, mode);
    return h;
}

// Exact operation count for one forward pass through every layer.
inline std::uint64_t flops_estimate(const MlpModel& model) {
    std::uint64_t total = 0;
    for (const DenseLayer& layer : model.layers) total += layer_flops(layer);
    return total;
}

}  // namespace goalcomp
