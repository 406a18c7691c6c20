#ifndef MLLP_TRAIN_HPP
#define MLLP_TRAIN_HPP

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mllp/common.hpp"
#include "mllp/model.hpp"

namespace mllp {

struct TrainConfig {
    std::size_t epochs = 400;
    std::size_t batch_size = 128;
    double learning_rate = 5e-3;
    double lr_decay_factor = 0.75;
    std::size_t lr_decay_every_epochs = 100;
    double weight_decay = 1e-8; // lambda'
    double l0_lambda = 1e-3;    // lambda, ignored when the model has no gates
    double rb_rate = 0.0;       // P
    double rb_threshold = 0.5;  // T
    std::size_t rb_refresh_every_epochs = 1;
    std::uint64_t seed = 0;

    void validate() const {
        require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
        require(rb_rate >= 0.0 && rb_rate <= 1.0, "TrainConfig: rb_rate outside [0,1]");
        require(lr_decay_every_epochs >= 1, "TrainConfig: decay interval must be >= 1");
    }
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    std::size_t active_weight_count = 0;
    double active_weight_fraction = 0.0;
    double learning_rate = 0.0;
};

struct LossParts {
    double total = 0.0;
    double mse = 0.0;
    double l2 = 0.0; // includes its lambda' factor
    double l0 = 0.0; // includes its lambda factor
};

struct Grads {
    std::vector<Matrix> w;                       // one per layer
    std::vector<std::vector<double>> log_alpha;  // one per layer; empty vectors when ungated
};

namespace detail {

inline double column_sq_sums(const Matrix& w, std::vector<double>& out) {
    out.assign(w.cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.cols; ++j) {
            const double sq = w(i, j) * w(i, j);
            out[j] += sq;
            total += sq;
        }
    return total;
}

} // namespace detail

/// MSE is averaged over both the batch and the output components.
inline LossParts compute_loss(const Matrix& predictions, const Matrix& labels,
                              const MllpModel& model, const std::vector<GateSample>& gate_samples,
                              double l0_lambda, double weight_decay) {
    require(predictions.same_shape(labels), "compute_loss: prediction/label shape mismatch");
    LossParts parts;
    const double norm = 1.0 / static_cast<double>(predictions.rows * predictions.cols);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions.data[i] - labels.data[i];
        parts.mse += d * d;
    }
    parts.mse *= norm;

    std::vector<double> sq;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Matrix& w = model.layers[l].w;
        const double total_sq = detail::column_sq_sums(w, sq);
        if (model.has_gates() && model.gates[l].groups() > 0) {
            parts.l2 += weight_decay * gated_l2_penalty(model.gates[l], sq);
            parts.l0 += l0_lambda * l0_penalty(model.gates[l]);
        } else {
            parts.l2 += weight_decay * total_sq;
        }
    }
    (void)gate_samples;
    parts.total = parts.mse + parts.l2 + parts.l0;
    return parts;
}

/// Gradients of the full training loss for one batch. The forward cache
/// must come from forward_train on the same model/batch/masks/samples.
inline Grads backward_loss(const MllpModel& model, const ForwardCache& cache,
                           const Matrix& predictions, const Matrix& labels,
                           const std::vector<RbMask>& rb_masks,
                           const std::vector<GateSample>& gate_samples, double l0_lambda,
                           double weight_decay) {
    const std::size_t n_layers = model.layers.size();
    Grads grads;
    grads.w.resize(n_layers);
    grads.log_alpha.resize(n_layers);

    // dL/dpred for the mean-over-batch-and-outputs MSE
    Matrix grad_act(predictions.rows, predictions.cols);
    const double norm = 2.0 / static_cast<double>(predictions.rows * predictions.cols);
    for (std::size_t i = 0; i < predictions.size(); ++i)
        grad_act.data[i] = norm * (predictions.data[i] - labels.data[i]);

    std::vector<double> factors, loo, grad_z;
    for (std::size_t l = n_layers; l-- > 0;) {
        const LayerWeights& lw = model.layers[l];
        const Matrix& input = cache.activations[l];
        const Matrix& eff = cache.effective_weights[l];
        const RbMask* mask = rb_masks.empty() ? nullptr : &rb_masks[l];
        const bool gated = model.has_gates() && model.gates[l].groups() > 0;
        const bool need_input_grad = l > 0;

        Matrix grad_eff(eff.rows, eff.cols);
        Matrix grad_input;
        if (need_input_grad) grad_input = Matrix(input.rows, input.cols);
        factors.resize(eff.cols);
        loo.resize(eff.cols);

        for (std::size_t b = 0; b < input.rows; ++b) {
            const double* h = input.row(b);
            for (std::size_t i = 0; i < eff.rows; ++i) {
                const double up = grad_act(b, i);
                if (up == 0.0) continue;
                const double* wi = eff.row(i);
                if (lw.kind == LayerKind::Conjunction) {
                    for (std::size_t j = 0; j < eff.cols; ++j)
                        factors[j] = 1.0 - wi[j] * (1.0 - h[j]);
                } else {
                    for (std::size_t j = 0; j < eff.cols; ++j) factors[j] = 1.0 - wi[j] * h[j];
                }
                detail::leave_one_out(factors, loo);
                double* ge = grad_eff.row(i);
                if (lw.kind == LayerKind::Conjunction) {
                    for (std::size_t j = 0; j < eff.cols; ++j)
                        ge[j] += up * (h[j] - 1.0) * loo[j];
                } else {
                    for (std::size_t j = 0; j < eff.cols; ++j) ge[j] += up * h[j] * loo[j];
                }
                if (need_input_grad) {
                    double* gi = grad_input.row(b);
                    for (std::size_t j = 0; j < eff.cols; ++j) gi[j] += up * wi[j] * loo[j];
                }
            }
        }

        // route grad_eff to the raw weights and the gate values; frozen
        // (RB-masked) entries are constants and contribute nothing
        grads.w[l] = Matrix(lw.w.rows, lw.w.cols);
        if (gated) grad_z.assign(eff.cols, 0.0);
        for (std::size_t i = 0; i < eff.rows; ++i)
            for (std::size_t j = 0; j < eff.cols; ++j) {
                if (mask && !mask->empty() && mask->at(i, j)) continue;
                const double ge = grad_eff(i, j);
                if (gated) {
                    grads.w[l](i, j) = ge * gate_samples[l].z[j];
                    grad_z[j] += ge * lw.w(i, j);
                } else {
                    grads.w[l](i, j) = ge;
                }
            }

        // regularizer contributions
        std::vector<double> sq;
        detail::column_sq_sums(lw.w, sq);
        if (gated) {
            const GateParams& gp = model.gates[l];
            grads.log_alpha[l] = gate_backward(gp, gate_samples[l], grad_z);
            const std::vector<double> l0g = l0_penalty_grad(gp);
            const std::vector<double> l2g = gated_l2_grad_log_alpha(gp, sq);
            for (std::size_t g = 0; g < gp.groups(); ++g)
                grads.log_alpha[l][g] += l0_lambda * l0g[g] + weight_decay * l2g[g];
            for (std::size_t i = 0; i < lw.w.rows; ++i)
                for (std::size_t j = 0; j < lw.w.cols; ++j)
                    grads.w[l](i, j) += weight_decay * 2.0 * gate_active_prob(gp, j) * lw.w(i, j);
        } else {
            for (std::size_t i = 0; i < lw.w.size(); ++i)
                grads.w[l].data[i] += weight_decay * 2.0 * lw.w.data[i];
        }

        if (need_input_grad) grad_act = std::move(grad_input);
    }
    return grads;
}

/// Adam optimizer over layer weights and gate locations.
class AdamOptimizer {
public:
    AdamOptimizer(const MllpModel& model, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& lw : model.layers) {
            m_w_.emplace_back(lw.w.rows, lw.w.cols);
            v_w_.emplace_back(lw.w.rows, lw.w.cols);
        }
        for (const auto& gp : model.gates) {
            m_a_.emplace_back(gp.groups(), 0.0);
            v_a_.emplace_back(gp.groups(), 0.0);
        }
    }

    /// One update; RB-frozen entries keep both their value and their
    /// moment estimates untouched for the epoch.
    void step(MllpModel& model, const Grads& grads, const std::vector<RbMask>& rb_masks,
              double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            Matrix& w = model.layers[l].w;
            const RbMask* mask = rb_masks.empty() ? nullptr : &rb_masks[l];
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (mask && !mask->empty() && mask->m[i]) continue;
                const double g = grads.w[l].data[i];
                double& m = m_w_[l].data[i];
                double& v = v_w_[l].data[i];
                m = beta1_ * m + (1.0 - beta1_) * g;
                v = beta2_ * v + (1.0 - beta2_) * g * g;
                w.data[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
            }
        }
        for (std::size_t l = 0; l < model.gates.size(); ++l) {
            GateParams& gp = model.gates[l];
            if (gp.groups() == 0) continue;
            for (std::size_t g = 0; g < gp.groups(); ++g) {
                const double grad = grads.log_alpha[l][g];
                double& m = m_a_[l][g];
                double& v = v_a_[l][g];
                m = beta1_ * m + (1.0 - beta1_) * grad;
                v = beta2_ * v + (1.0 - beta2_) * grad * grad;
                gp.log_alpha[g] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
            }
        }
    }

private:
    double beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<Matrix> m_w_, v_w_;
    std::vector<std::vector<double>> m_a_, v_a_;
};

/// Full training loop: minibatch Adam on the MSE + regularizer loss,
/// one gate sample per minibatch, RB masks refreshed on their epoch
/// cadence, weights clipped to [0,1] after every step.
inline std::vector<EpochMetrics> train(MllpModel& model, const Matrix& X, const Matrix& Y,
                                       const TrainConfig& config) {
    config.validate();
    require(X.rows == Y.rows, "train: X/Y row mismatch");
    require(X.cols == model.input_width && Y.cols == model.class_count,
            "train: dataset does not match model shape");

    std::vector<EpochMetrics> metrics;
    if (config.epochs == 0) return metrics;

    Rng rng(config.seed);
    Rng mask_rng = rng.child(0xB1A5);
    Rng gate_rng = rng.child(0x6A7E);
    Rng order_rng = rng.child(0x5897);

    AdamOptimizer opt(model);
    // With gates the regularizers are scaled by the training-set size, as
    // in the reference grouped-sparsity implementation; the raw sum at
    // lambda = 1e-3 crushes every gate before the data term can respond.
    const double reg_scale =
        model.has_gates() ? 1.0 / static_cast<double>(X.rows) : 1.0;
    const double l0_lambda = config.l0_lambda * reg_scale;
    const double weight_decay = config.weight_decay * reg_scale;
    std::vector<RbMask> masks;
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.learning_rate *
                          std::pow(config.lr_decay_factor,
                                   static_cast<double>(epoch / config.lr_decay_every_epochs));
        if (config.rb_rate > 0.0 && epoch % config.rb_refresh_every_epochs == 0) {
            masks.clear();
            for (const auto& lw : model.layers)
                masks.push_back(sample_rb_mask(lw.w.rows, lw.w.cols, config.rb_rate,
                                               config.rb_threshold, mask_rng));
        }
        order_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < X.rows; start += config.batch_size) {
            const std::size_t end = std::min(X.rows, start + config.batch_size);
            Matrix bx(end - start, X.cols), by(end - start, Y.cols);
            for (std::size_t r = start; r < end; ++r) {
                const std::size_t src = order[r];
                std::copy(X.row(src), X.row(src) + X.cols, bx.row(r - start));
                std::copy(Y.row(src), Y.row(src) + Y.cols, by.row(r - start));
            }

            std::vector<GateSample> samples;
            if (model.has_gates())
                for (const auto& gp : model.gates) samples.push_back(sample_gates(gp, gate_rng));

            ForwardCache cache;
            const Matrix pred = forward_train(model, bx, masks, samples, &cache);
            const LossParts loss =
                compute_loss(pred, by, model, samples, l0_lambda, weight_decay);
            if (!std::isfinite(loss.total))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            loss_sum += loss.total;
            ++batches;

            const Grads grads = backward_loss(model, cache, pred, by, masks, samples,
                                              l0_lambda, weight_decay);
            opt.step(model, grads, masks, lr);
            for (auto& lw : model.layers) clip_weights_inplace(lw.w);
        }

        const ActiveWeightStats active = count_active_weights(model);
        EpochMetrics em;
        em.epoch = epoch;
        em.mean_loss = loss_sum / static_cast<double>(batches);
        em.active_weight_count = active.count;
        em.active_weight_fraction = active.fraction;
        em.learning_rate = lr;
        metrics.push_back(em);
    }
    return metrics;
}

} // namespace mllp

#endif
