#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "goalcomp/tensor.hpp"

namespace goalcomp {

enum class Activation : std::uint8_t {
    Identity = 0,
    ReLU = 1,
    Sigmoid = 2,
    QSigmoid = 3,
    Softmax = 4,
};

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::QSigmoid: return "qsigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

inline double sigmoid_scalar(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = std::max(0.0, v);
    ensure_finite(out, "relu");
    return out;
}

inline Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = sigmoid_scalar(v);
    ensure_finite(out, "sigmoid");
    return out;
}

struct QSigmoidResult {
    Tensor bits;            // hard 0/1 values
    Tensor surrogate_grad;  // sigmoid'(a), consumed by the straight-through backward pass
};

// Binary quantizer: bit = 1 where sigmoid(a) >= 0.5, i.e. a >= 0 (ties to 1).
inline QSigmoidResult qsigmoid(const Tensor& a) {
    QSigmoidResult out{a, a};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a.values()[i];
        out.bits.values()[i] = v >= 0.0 ? 1.0 : 0.0;
        const double s = sigmoid_scalar(v);
        out.surrogate_grad.values()[i] = s * (1.0 - s);
    }
    ensure_finite(out.surrogate_grad, "qsigmoid");
    return out;
}

// Row-wise softmax: each row holds one sample's logits. Max-shifted before
// exponentiation; the shift leaves the result unchanged.
inline Tensor softmax(const Tensor& logits) {
    require(logits.cols() >= 1, "softmax: needs at least one element per sample");
    Tensor out = logits;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.data() + r * out.cols();
        double hi = row[0];
        for (std::size_t c = 1; c < out.cols(); ++c) hi = std::max(hi, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c) {
            row[c] = std::exp(row[c] - hi);
            sum += row[c];
        }
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] /= sum;
    }
    ensure_finite(out, "softmax");
    return out;
}

// Column-wise variant used inside the network engine, where samples are columns.
inline void softmax_columns_inplace(Tensor& t) {
    require(t.rows() >= 1, "softmax: needs at least one element per sample");
    for (std::size_t c = 0; c < t.cols(); ++c) {
        double hi = t(0, c);
        for (std::size_t r = 1; r < t.rows(); ++r) hi = std::max(hi, t(r, c));
        double sum = 0.0;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double e = std::exp(t(r, c) - hi);
            t(r, c) = e;
            sum += e;
        }
        for (std::size_t r = 0; r < t.rows(); ++r) t(r, c) /= sum;
    }
    ensure_finite(t, "softmax");
}

}  // namespace goalcomp
