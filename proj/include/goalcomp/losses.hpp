#pragma once

#include <algorithm>
#include <cmath>

#include "goalcomp/tensor.hpp"

namespace goalcomp {

// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-12;

// Losses use base-2 logarithms throughout, matching the bit-denominated
// divergence; the constant rescaling does not move optima.
inline double log2_clamped(double v) {
    return std::log2(std::clamp(v, kProbEpsilon, 1.0 - kProbEpsilon));
}

// Mean squared error over a batch: rows are samples. (1/N) sum_i ||x_i - xhat_i||^2.
inline double mse_loss(const Tensor& x, const Tensor& x_hat) {
    require(x.same_shape(x_hat), "mse_loss: shape mismatch");
    require(x.rows() >= 1, "mse_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.values()[i] - x_hat.values()[i];
        total += d * d;
    }
    const double loss = total / static_cast<double>(x.rows());
    ensure_finite(loss, "mse_loss");
    return loss;
}

// Per-class binary cross-entropy summed over classes, averaged over the batch:
//   -(1/N) sum_rows sum_c [ y log2(yhat) + (1-y) log2(1-yhat) ]
// Rows are samples; y must be one-hot, yhat entries in [0, 1].
inline double cross_entropy(const Tensor& y, const Tensor& y_hat) {
    require(y.same_shape(y_hat), "cross_entropy: shape mismatch");
    require(y.rows() >= 1, "cross_entropy: empty batch");
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
            const double t = y(r, c);
            require(t == 0.0 || t == 1.0, "cross_entropy: target is not one-hot");
            row_sum += t;
            const double p = y_hat(r, c);
            require(p >= 0.0 && p <= 1.0, "cross_entropy: probability outside [0, 1]");
        }
        require(row_sum == 1.0, "cross_entropy: target row is not one-hot");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = y.values()[i];
        const double p = y_hat.values()[i];
        total -= t * log2_clamped(p) + (1.0 - t) * log2_clamped(1.0 - p);
    }
    const double loss = total / static_cast<double>(y.rows());
    ensure_finite(loss, "cross_entropy");
    return loss;
}

// KL(p || q) in bits, per sample, averaged over the batch. Rows are samples
// and every row of p and q must sum to 1 within 1e-6. Terms with p == 0
// contribute zero; q is clamped below at kProbEpsilon. Each per-sample
// divergence is floored at zero so rounding cannot leak a negative value.
inline double kl_divergence(const Tensor& p, const Tensor& q) {
    require(p.same_shape(q), "kl_divergence: shape mismatch");
    require(p.rows() >= 1, "kl_divergence: empty batch");
    constexpr double kRowSumTolerance = 1e-6;
    double total = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double p_sum = 0.0;
        double q_sum = 0.0;
        double row_kl = 0.0;
        for (std::size_t c = 0; c < p.cols(); ++c) {
            const double pv = p(r, c);
            const double qv = q(r, c);
            require(pv >= 0.0 && qv >= 0.0, "kl_divergence: negative probability");
            p_sum += pv;
            q_sum += qv;
            if (pv > 0.0) row_kl += pv * std::log2(pv / std::max(qv, kProbEpsilon));
        }
        require(std::abs(p_sum - 1.0) <= kRowSumTolerance,
                "kl_divergence: p row " + std::to_string(r) + " does not sum to 1");
        require(std::abs(q_sum - 1.0) <= kRowSumTolerance,
                "kl_divergence: q row " + std::to_string(r) + " does not sum to 1");
        total += std::max(0.0, row_kl);
    }
    const double loss = total / static_cast<double>(p.rows());
    ensure_finite(loss, "kl_divergence");
    return loss;
}

// Distillation objective: hard-label cross-entropy plus divergence from the
// (constant) teacher distribution to the fused prediction.
inline double distill_loss(const Tensor& y, const Tensor& y_hat, const Tensor& teacher) {
    require(teacher.same_shape(y_hat), "distill_loss: teacher shape mismatch");
    return cross_entropy(y, y_hat) + kl_divergence(teacher, y_hat);
}

}  // namespace goalcomp
