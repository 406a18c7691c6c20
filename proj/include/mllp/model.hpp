#ifndef MLLP_MODEL_HPP
#define MLLP_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

#include "mllp/common.hpp"
#include "mllp/gates.hpp"
#include "mllp/logic_layers.hpp"

namespace mllp {

struct GateConfig {
    bool enabled = false;
    double input_drop_rate = 0.5;  // separate rate for the first layer's inputs
    double hidden_drop_rate = 0.2;
    bool gate_output_layer = true;
    double beta = 2.0 / 3.0;
    double gamma = -0.1;
    double zeta = 1.1;
};

/// Alternating conjunction/disjunction network. Layer l (1-based) is a
/// conjunction layer for odd l and a disjunction layer for even l; the
/// final layer is a disjunction layer of width |C|. No bias terms.
struct MllpModel {
    std::size_t input_width = 0;
    std::size_t class_count = 0;
    std::vector<LayerWeights> layers;
    std::vector<GateParams> gates; // empty when gates are disabled
    GateConfig gate_config;

    bool has_gates() const { return !gates.empty(); }
    std::size_t level_count() const { return layers.size() / 2; }
};

/// Builds the network for a hidden-width list. The list must have odd
/// length so the appended |C|-wide output layer lands on a disjunction
/// layer. Weights start at Uniform(0, 0.1).
inline MllpModel build_model(std::size_t input_width, const std::vector<std::size_t>& hidden_widths,
                             std::size_t class_count, const GateConfig& gate_config, Rng& rng) {
    require(input_width > 0 && class_count > 0, "build_model: empty input or class set");
    require(!hidden_widths.empty(), "build_model: at least one hidden layer is required");
    require(hidden_widths.size() % 2 == 1,
            "build_model: hidden width list must have odd length so the output layer is a disjunction");
    for (std::size_t w : hidden_widths) require(w > 0, "build_model: zero-width layer");

    MllpModel model;
    model.input_width = input_width;
    model.class_count = class_count;
    model.gate_config = gate_config;

    std::vector<std::size_t> widths = hidden_widths;
    widths.push_back(class_count);

    std::size_t fan_in = input_width;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        LayerWeights lw;
        lw.kind = (l % 2 == 0) ? LayerKind::Conjunction : LayerKind::Disjunction;
        lw.layer_index = static_cast<int>(l + 1);
        lw.w = Matrix(widths[l], fan_in);
        for (double& x : lw.w.data) x = rng.uniform(0.0, 0.1);
        model.layers.push_back(std::move(lw));
        fan_in = widths[l];
    }

    if (gate_config.enabled) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            const bool is_output = l + 1 == model.layers.size();
            if (is_output && !gate_config.gate_output_layer) {
                model.gates.push_back(GateParams{}); // placeholder, zero groups
                continue;
            }
            GateParams p;
            p.beta = gate_config.beta;
            p.gamma = gate_config.gamma;
            p.zeta = gate_config.zeta;
            const std::size_t groups = model.layers[l].w.cols;
            const double drop = (l == 0) ? gate_config.input_drop_rate : gate_config.hidden_drop_rate;
            p.log_alpha = init_log_alpha(groups, drop, rng);
            // each gate covers the whole column of weights reading that input
            p.group_sizes.assign(groups, static_cast<int>(model.layers[l].w.rows));
            model.gates.push_back(std::move(p));
        }
    }
    return model;
}

/// Per-batch forward state retained for the backward pass.
struct ForwardCache {
    std::vector<Matrix> activations;        // activations[0] = X, then one per layer
    std::vector<Matrix> effective_weights;  // post-gate, post-RB weights per layer
};

namespace detail {

inline void layer_forward(const Matrix& input, const Matrix& w_eff, LayerKind kind, Matrix& out) {
    out = Matrix(input.rows, w_eff.rows);
    for (std::size_t b = 0; b < input.rows; ++b) {
        const double* h = input.row(b);
        for (std::size_t i = 0; i < w_eff.rows; ++i) {
            const double* wi = w_eff.row(i);
            double p = 1.0;
            if (kind == LayerKind::Conjunction) {
                for (std::size_t j = 0; j < w_eff.cols; ++j) p *= 1.0 - wi[j] * (1.0 - h[j]);
                out(b, i) = p;
            } else {
                for (std::size_t j = 0; j < w_eff.cols; ++j) p *= 1.0 - wi[j] * h[j];
                out(b, i) = 1.0 - p;
            }
        }
    }
}

/// w_eff(i,j) = RB(w(i,j) * z_j): the gate multiplies first, binarization second.
inline Matrix effective_weights(const LayerWeights& lw, const std::vector<double>* z,
                                const RbMask* mask) {
    Matrix eff = lw.w;
    if (z) {
        require(z->size() == lw.w.cols, "effective_weights: gate vector shape mismatch");
        for (std::size_t i = 0; i < eff.rows; ++i)
            for (std::size_t j = 0; j < eff.cols; ++j) eff(i, j) *= (*z)[j];
    }
    if (mask && !mask->empty()) {
        require(mask->rows == eff.rows && mask->cols == eff.cols,
                "effective_weights: mask shape mismatch");
        for (std::size_t i = 0; i < eff.size(); ++i)
            if (mask->m[i]) eff.data[i] = eff.data[i] > mask->threshold ? 1.0 : 0.0;
    }
    return eff;
}

} // namespace detail

/// Training-mode forward: sampled gates and RB masks applied per layer.
/// Pass empty vectors to disable either mechanism.
inline Matrix forward_train(const MllpModel& model, const Matrix& X,
                            const std::vector<RbMask>& rb_masks,
                            const std::vector<GateSample>& gate_samples, ForwardCache* cache = nullptr) {
    require(X.cols == model.input_width, "forward_train: input width mismatch");
    require(rb_masks.empty() || rb_masks.size() == model.layers.size(),
            "forward_train: one RB mask per layer expected");
    require(gate_samples.empty() || gate_samples.size() == model.layers.size(),
            "forward_train: one gate sample per layer expected");

    Matrix current = X;
    if (cache) {
        cache->activations.clear();
        cache->effective_weights.clear();
        cache->activations.push_back(X);
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const std::vector<double>* z = nullptr;
        if (!gate_samples.empty() && !gate_samples[l].z.empty()) z = &gate_samples[l].z;
        const RbMask* mask = rb_masks.empty() ? nullptr : &rb_masks[l];
        Matrix eff = detail::effective_weights(model.layers[l], z, mask);
        Matrix next;
        detail::layer_forward(current, eff, model.layers[l].kind, next);
        if (cache) {
            cache->effective_weights.push_back(std::move(eff));
            cache->activations.push_back(next);
        }
        current = std::move(next);
    }
    return current;
}

/// Test-mode forward: deterministic gate estimator, no RB.
inline Matrix forward_eval(const MllpModel& model, const Matrix& X) {
    require(X.cols == model.input_width, "forward_eval: input width mismatch");
    Matrix current = X;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        std::optional<std::vector<double>> z;
        if (model.has_gates() && model.gates[l].groups() > 0)
            z = deterministic_gates(model.gates[l]);
        Matrix eff = detail::effective_weights(model.layers[l], z ? &*z : nullptr, nullptr);
        Matrix next;
        detail::layer_forward(current, eff, model.layers[l].kind, next);
        current = std::move(next);
    }
    return current;
}

struct ActiveWeightStats {
    std::size_t count = 0;
    double fraction = 0.0;
};

/// A weight counts as active when w (times its deterministic gate, if
/// gated) is strictly greater than 0.
inline ActiveWeightStats count_active_weights(const MllpModel& model) {
    ActiveWeightStats stats;
    std::size_t total = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Matrix& w = model.layers[l].w;
        total += w.size();
        std::optional<std::vector<double>> z;
        if (model.has_gates() && model.gates[l].groups() > 0)
            z = deterministic_gates(model.gates[l]);
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) {
                const double v = z ? w(i, j) * (*z)[j] : w(i, j);
                if (v > 0.0) ++stats.count;
            }
    }
    stats.fraction = total == 0 ? 0.0 : static_cast<double>(stats.count) / static_cast<double>(total);
    return stats;
}

} // namespace mllp

#endif
