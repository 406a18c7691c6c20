#ifndef MLLP_LOGIC_LAYERS_HPP
#define MLLP_LOGIC_LAYERS_HPP

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "mllp/common.hpp"

namespace mllp {

enum class LayerKind { Conjunction, Disjunction };

/// Continuous weights of one logical layer, every entry in [0,1].
struct LayerWeights {
    LayerKind kind = LayerKind::Conjunction;
    Matrix w;          // n_l x n_{l-1}
    int layer_index = 0;
};

/// Random Binarization mask: entries with m=1 are frozen at their
/// thresholded binary value for the forward/backward of the epoch.
struct RbMask {
    std::vector<std::uint8_t> m; // row-major, same shape as the weight matrix
    std::size_t rows = 0, cols = 0;
    double rate = 0.0;
    double threshold = 0.5;

    std::uint8_t at(std::size_t i, std::size_t j) const { return m[i * cols + j]; }
    bool empty() const { return m.empty(); }
};

namespace detail {

inline void check_unit_interval(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error(std::string(what) + " entry outside [0,1]");
}

/// Leave-one-out products of `factors`, written into `out`.
/// Computed with prefix/suffix products: exact with zero factors and
/// never divides, so a 0/0 cannot arise.
inline void leave_one_out(std::span<const double> factors, std::span<double> out) {
    const std::size_t n = factors.size();
    double acc = 1.0;
    for (std::size_t j = 0; j < n; ++j) { // prefix pass
        out[j] = acc;
        acc *= factors[j];
    }
    acc = 1.0;
    for (std::size_t j = n; j-- > 0;) { // suffix pass
        out[j] *= acc;
        acc *= factors[j];
    }
}

} // namespace detail

/// Product-form conjunction: prod_j (1 - w_j (1 - h_j)). Empty input gives 1.
inline double conj_forward(std::span<const double> h, std::span<const double> w) {
    require(h.size() == w.size(), "conj_forward: h and w length mismatch");
    detail::check_unit_interval(h, "conj_forward input");
    detail::check_unit_interval(w, "conj_forward weight");
    double p = 1.0;
    for (std::size_t j = 0; j < h.size(); ++j) p *= 1.0 - w[j] * (1.0 - h[j]);
    return p;
}

/// De Morgan dual: 1 - prod_j (1 - h_j w_j). Empty input gives 0.
inline double disj_forward(std::span<const double> h, std::span<const double> w) {
    require(h.size() == w.size(), "disj_forward: h and w length mismatch");
    detail::check_unit_interval(h, "disj_forward input");
    detail::check_unit_interval(w, "disj_forward weight");
    double p = 1.0;
    for (std::size_t j = 0; j < h.size(); ++j) p *= 1.0 - h[j] * w[j];
    return 1.0 - p;
}

struct VectorGrads {
    std::vector<double> grad_h;
    std::vector<double> grad_w;
};

inline VectorGrads conj_backward(std::span<const double> h, std::span<const double> w,
                                 double upstream) {
    require(h.size() == w.size(), "conj_backward: h and w length mismatch");
    const std::size_t n = h.size();
    std::vector<double> factors(n), loo(n);
    for (std::size_t j = 0; j < n; ++j) factors[j] = 1.0 - w[j] * (1.0 - h[j]);
    detail::leave_one_out(factors, loo);
    VectorGrads g{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        g.grad_w[j] = upstream * (h[j] - 1.0) * loo[j];
        g.grad_h[j] = upstream * w[j] * loo[j];
    }
    return g;
}

inline VectorGrads disj_backward(std::span<const double> h, std::span<const double> w,
                                 double upstream) {
    require(h.size() == w.size(), "disj_backward: h and w length mismatch");
    const std::size_t n = h.size();
    std::vector<double> factors(n), loo(n);
    for (std::size_t j = 0; j < n; ++j) factors[j] = 1.0 - h[j] * w[j];
    detail::leave_one_out(factors, loo);
    VectorGrads g{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        g.grad_w[j] = upstream * h[j] * loo[j];
        g.grad_h[j] = upstream * w[j] * loo[j];
    }
    return g;
}

/// Clamp every entry to [0,1]; idempotent.
inline void clip_weights_inplace(Matrix& w) {
    for (double& x : w.data) x = std::max(0.0, std::min(1.0, x));
}

inline LayerWeights clip_weights(LayerWeights lw) {
    clip_weights_inplace(lw.w);
    return lw;
}

/// Each entry is independently 1 with probability `rate`.
inline RbMask sample_rb_mask(std::size_t rows, std::size_t cols, double rate,
                             double threshold, Rng& rng) {
    require(rate >= 0.0 && rate <= 1.0, "sample_rb_mask: rate outside [0,1]");
    RbMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.rate = rate;
    mask.threshold = threshold;
    mask.m.resize(rows * cols);
    for (auto& e : mask.m) e = rng.uniform_open() < rate ? 1 : 0;
    return mask;
}

/// Effective weights after RB: frozen entries become I(w > T), strict.
/// Gradient freezing is the caller's concern (the mask is kept alongside).
inline Matrix apply_rb(const Matrix& w, const RbMask& mask) {
    require(w.rows == mask.rows && w.cols == mask.cols, "apply_rb: shape mismatch");
    Matrix out = w;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (mask.m[i]) out.data[i] = w.data[i] > mask.threshold ? 1.0 : 0.0;
    return out;
}

} // namespace mllp

#endif
