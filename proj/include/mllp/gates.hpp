#ifndef MLLP_GATES_HPP
#define MLLP_GATES_HPP

#include <cmath>
#include <span>
#include <vector>

#include "mllp/common.hpp"

namespace mllp {

/// Hard-concrete gate group: one gate per input neuron of a layer.
/// log_alpha is trainable; (beta, gamma, zeta) are fixed, with the
/// stretch (gamma, zeta) straddling [0,1] so that exact 0 and 1 carry
/// positive probability mass.
struct GateParams {
    std::vector<double> log_alpha;
    std::vector<int> group_sizes;
    double beta = 2.0 / 3.0;
    double gamma = -0.1;
    double zeta = 1.1;

    std::size_t groups() const { return log_alpha.size(); }

    void validate() const {
        require(beta > 0.0, "GateParams: beta must be positive");
        require(gamma < 0.0 && zeta > 1.0, "GateParams: stretch must straddle [0,1]");
        require(group_sizes.size() == log_alpha.size(),
                "GateParams: group_sizes misaligned with log_alpha");
        for (int s : group_sizes) require(s >= 1, "GateParams: group size < 1");
    }
};

/// One draw of every gate in a group vector; u and s are retained so the
/// backward pass can differentiate through the reparametrized sample.
struct GateSample {
    std::vector<double> z;
    std::vector<double> u;
    std::vector<double> s;
};

/// z = clamp(s (zeta - gamma) + gamma, 0, 1) with
/// s = sigmoid((log u - log(1-u) + log_alpha) / beta), u ~ U(0,1).
inline GateSample sample_gates(const GateParams& p, Rng& rng) {
    p.validate();
    const std::size_t n = p.groups();
    GateSample out;
    out.z.resize(n);
    out.u.resize(n);
    out.s.resize(n);
    for (std::size_t g = 0; g < n; ++g) {
        const double u = rng.uniform_open();
        const double s = sigmoid((std::log(u) - std::log1p(-u) + p.log_alpha[g]) / p.beta);
        const double sbar = s * (p.zeta - p.gamma) + p.gamma;
        out.u[g] = u;
        out.s[g] = s;
        out.z[g] = std::min(1.0, std::max(0.0, sbar));
    }
    return out;
}

/// Recomputes the transform for given uniform draws; used when the noise
/// is held fixed while log_alpha varies.
inline GateSample gates_from_uniform(const GateParams& p, std::vector<double> u) {
    require(u.size() == p.groups(), "gates_from_uniform: size mismatch");
    GateSample out;
    out.u = std::move(u);
    out.s.resize(p.groups());
    out.z.resize(p.groups());
    for (std::size_t g = 0; g < p.groups(); ++g) {
        const double s =
            sigmoid((std::log(out.u[g]) - std::log1p(-out.u[g]) + p.log_alpha[g]) / p.beta);
        out.s[g] = s;
        out.z[g] = std::min(1.0, std::max(0.0, s * (p.zeta - p.gamma) + p.gamma));
    }
    return out;
}

/// d z / d log_alpha for the retained sample. Zero wherever the
/// hard-sigmoid clamp was active.
inline std::vector<double> gate_backward(const GateParams& p, const GateSample& sample,
                                         std::span<const double> upstream) {
    require(upstream.size() == p.groups() && sample.s.size() == p.groups(),
            "gate_backward: size mismatch");
    std::vector<double> grad(p.groups(), 0.0);
    for (std::size_t g = 0; g < p.groups(); ++g) {
        const double s = sample.s[g];
        const double sbar = s * (p.zeta - p.gamma) + p.gamma;
        if (sbar <= 0.0 || sbar >= 1.0) continue;
        grad[g] = upstream[g] * (p.zeta - p.gamma) * s * (1.0 - s) / p.beta;
    }
    return grad;
}

/// Test-time estimator: zhat = clamp(sigmoid(log_alpha)(zeta-gamma)+gamma, 0, 1).
inline std::vector<double> deterministic_gates(const GateParams& p) {
    p.validate();
    std::vector<double> z(p.groups());
    for (std::size_t g = 0; g < p.groups(); ++g) {
        const double sbar = sigmoid(p.log_alpha[g]) * (p.zeta - p.gamma) + p.gamma;
        z[g] = std::min(1.0, std::max(0.0, sbar));
    }
    return z;
}

/// P(z > 0) in closed form: sigmoid(log_alpha - beta log(-gamma/zeta)).
inline double gate_active_prob(const GateParams& p, std::size_t g) {
    return sigmoid(p.log_alpha[g] - p.beta * std::log(-p.gamma / p.zeta));
}

/// Expected active-parameter count: sum_g |g| P(z_g > 0).
inline double l0_penalty(const GateParams& p) {
    p.validate();
    double total = 0.0;
    for (std::size_t g = 0; g < p.groups(); ++g)
        total += p.group_sizes[g] * gate_active_prob(p, g);
    return total;
}

inline std::vector<double> l0_penalty_grad(const GateParams& p) {
    std::vector<double> grad(p.groups());
    for (std::size_t g = 0; g < p.groups(); ++g) {
        const double q = gate_active_prob(p, g);
        grad[g] = p.group_sizes[g] * q * (1.0 - q);
    }
    return grad;
}

/// sum_g P(z_g > 0) * sum_{j in g} w_j^2, with the per-group squared
/// sums supplied by the caller.
inline double gated_l2_penalty(const GateParams& p, std::span<const double> group_sq_sums) {
    require(group_sq_sums.size() == p.groups(), "gated_l2_penalty: grouping mismatch");
    double total = 0.0;
    for (std::size_t g = 0; g < p.groups(); ++g)
        total += gate_active_prob(p, g) * group_sq_sums[g];
    return total;
}

inline std::vector<double> gated_l2_grad_log_alpha(const GateParams& p,
                                                   std::span<const double> group_sq_sums) {
    require(group_sq_sums.size() == p.groups(), "gated_l2_grad: grouping mismatch");
    std::vector<double> grad(p.groups());
    for (std::size_t g = 0; g < p.groups(); ++g) {
        const double q = gate_active_prob(p, g);
        grad[g] = q * (1.0 - q) * group_sq_sums[g];
    }
    return grad;
}

/// Location init: log((1-p)/p) plus small Gaussian noise, p the initial
/// drop rate.
inline std::vector<double> init_log_alpha(std::size_t groups, double drop_rate, Rng& rng) {
    require(drop_rate > 0.0 && drop_rate < 1.0, "init_log_alpha: drop rate outside (0,1)");
    std::vector<double> la(groups);
    const double base = std::log(1.0 - drop_rate) - std::log(drop_rate);
    for (auto& x : la) x = base + rng.normal(0.0, 0.01);
    return la;
}

} // namespace mllp

#endif
