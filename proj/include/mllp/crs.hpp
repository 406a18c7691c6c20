#ifndef MLLP_CRS_HPP
#define MLLP_CRS_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mllp/common.hpp"
#include "mllp/model.hpp"

namespace mllp {

/// Discrete rule graph. Layer l holds one index set per node: the
/// children in layer l-1 it connects to. Odd layers (1-based) are rules
/// (conjunctions), even layers are rule sets (disjunctions); the last
/// layer has one rule set per class.
struct CrsModel {
    std::size_t input_width = 0;
    std::vector<std::vector<std::vector<std::size_t>>> layers;
    std::vector<std::string> feature_names; // optional, size input_width
    std::vector<std::string> class_names;   // optional, size of last layer

    std::size_t class_count() const { return layers.empty() ? 0 : layers.back().size(); }
    LayerKind kind_of(std::size_t layer) const {
        return layer % 2 == 0 ? LayerKind::Conjunction : LayerKind::Disjunction;
    }
};

struct ComplexityReport {
    std::size_t total_literals = 0;            // c_F: sum of all fan-ins
    std::vector<std::size_t> per_layer_literals;
    std::size_t node_count = 0;
    bool after_pruning = false;
};

/// Binarizes a trained model: edge kept iff w > T and, when gated, the
/// deterministic gate of its input neuron exceeds T'. Both strict.
inline CrsModel extract_crs(const MllpModel& model, double threshold = 0.5,
                            double gate_threshold = 0.5) {
    require(threshold > 0.0 && threshold < 1.0 && gate_threshold > 0.0 && gate_threshold < 1.0,
            "extract_crs: thresholds must lie in (0,1)");
    CrsModel crs;
    crs.input_width = model.input_width;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Matrix& w = model.layers[l].w;
        std::optional<std::vector<double>> z;
        if (model.has_gates() && model.gates[l].groups() > 0)
            z = deterministic_gates(model.gates[l]);
        std::vector<std::vector<std::size_t>> nodes(w.rows);
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) {
                if (w(i, j) <= threshold) continue;
                if (z && (*z)[j] <= gate_threshold) continue;
                nodes[i].push_back(j);
            }
        crs.layers.push_back(std::move(nodes));
    }
    return crs;
}

/// Boolean layer-by-layer evaluation. Empty conjunction -> 1, empty
/// disjunction -> 0.
inline std::vector<std::uint8_t> crs_predict(const CrsModel& crs,
                                             const std::vector<std::uint8_t>& x) {
    require(x.size() == crs.input_width, "crs_predict: input length mismatch");
    std::vector<std::uint8_t> current = x;
    for (std::size_t l = 0; l < crs.layers.size(); ++l) {
        std::vector<std::uint8_t> next(crs.layers[l].size());
        const bool conj = crs.kind_of(l) == LayerKind::Conjunction;
        for (std::size_t i = 0; i < next.size(); ++i) {
            bool value = conj;
            for (std::size_t child : crs.layers[l][i]) {
                if (conj) {
                    if (!current[child]) { value = false; break; }
                } else {
                    if (current[child]) { value = true; break; }
                }
            }
            next[i] = value ? 1 : 0;
        }
        current = std::move(next);
    }
    return current;
}

/// Class decision: argmax over the binary output vector, ties broken by
/// the lowest class index.
inline std::size_t crs_predict_class(const CrsModel& crs, const std::vector<std::uint8_t>& x) {
    const std::vector<std::uint8_t> out = crs_predict(crs, x);
    for (std::size_t c = 0; c < out.size(); ++c)
        if (out[c]) return c;
    return 0;
}

inline ComplexityReport complexity(const CrsModel& crs, bool after_pruning = false) {
    ComplexityReport report;
    report.after_pruning = after_pruning;
    for (const auto& layer : crs.layers) {
        std::size_t literals = 0;
        for (const auto& node : layer) literals += node.size();
        report.per_layer_literals.push_back(literals);
        report.total_literals += literals;
        report.node_count += layer.size();
    }
    return report;
}

namespace detail {

enum class NodeStatus { Var, Const0, Const1 };

struct PruneNode {
    NodeStatus status = NodeStatus::Var;
    std::vector<std::size_t> children;
};

} // namespace detail

/// Semantics-preserving structural pruning, run to fixpoint:
///  - fold constants (empty rule = 1, empty rule set = 0) through parents
///  - drop hidden nodes unreachable from any output
///  - merge duplicate nodes within a layer and redirect their parents
inline CrsModel prune(const CrsModel& crs) {
    using detail::NodeStatus;
    using detail::PruneNode;

    const std::size_t n_layers = crs.layers.size();
    std::vector<std::vector<PruneNode>> work(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        work[l].resize(crs.layers[l].size());
        for (std::size_t i = 0; i < crs.layers[l].size(); ++i)
            work[l][i].children = crs.layers[l][i];
    }

    bool changed = true;
    while (changed) {
        changed = false;

        // constant folding, bottom-up
        for (std::size_t l = 0; l < n_layers; ++l) {
            const bool conj = crs.kind_of(l) == LayerKind::Conjunction;
            for (auto& node : work[l]) {
                if (node.status != NodeStatus::Var) continue;
                std::vector<std::size_t> kept;
                bool forced = false;
                for (std::size_t child : node.children) {
                    NodeStatus cs = l == 0 ? NodeStatus::Var : work[l - 1][child].status;
                    if (cs == NodeStatus::Var) {
                        kept.push_back(child);
                    } else if (conj && cs == NodeStatus::Const0) {
                        forced = true; // AND with false
                        break;
                    } else if (!conj && cs == NodeStatus::Const1) {
                        forced = true; // OR with true
                        break;
                    } // neutral constants are dropped
                }
                if (forced) {
                    node.status = conj ? NodeStatus::Const0 : NodeStatus::Const1;
                    node.children.clear();
                    changed = true;
                } else {
                    if (kept.size() != node.children.size()) changed = true;
                    node.children = std::move(kept);
                    if (node.children.empty()) {
                        node.status = conj ? NodeStatus::Const1 : NodeStatus::Const0;
                        changed = true;
                    }
                }
            }
        }

        // merge duplicates within each hidden layer (same status + children)
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
            std::map<std::pair<int, std::vector<std::size_t>>, std::size_t> canon;
            std::vector<std::size_t> remap(work[l].size());
            for (std::size_t i = 0; i < work[l].size(); ++i) {
                std::vector<std::size_t> key_children = work[l][i].children;
                std::sort(key_children.begin(), key_children.end());
                auto key = std::make_pair(static_cast<int>(work[l][i].status), key_children);
                auto [it, inserted] = canon.emplace(key, i);
                remap[i] = it->second;
            }
            for (auto& parent : work[l + 1]) {
                std::set<std::size_t> redirected;
                for (std::size_t child : parent.children) redirected.insert(remap[child]);
                if (redirected.size() != parent.children.size() ||
                    !std::equal(redirected.begin(), redirected.end(), parent.children.begin())) {
                    // only an actual redirect counts as progress
                    std::vector<std::size_t> next(redirected.begin(), redirected.end());
                    if (next != parent.children) changed = true;
                    parent.children = std::move(next);
                }
            }
        }
    }

    // reachability from the outputs
    std::vector<std::vector<bool>> reach(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) reach[l].assign(work[l].size(), false);
    if (n_layers > 0) {
        reach[n_layers - 1].assign(work[n_layers - 1].size(), true);
        for (std::size_t l = n_layers - 1; l > 0; --l)
            for (std::size_t i = 0; i < work[l].size(); ++i)
                if (reach[l][i])
                    for (std::size_t child : work[l][i].children) reach[l - 1][child] = true;
    }

    // materialize: keep reachable Var nodes; constant outputs get their
    // boolean value back through the empty-node conventions
    CrsModel out;
    out.input_width = crs.input_width;
    out.feature_names = crs.feature_names;
    out.class_names = crs.class_names;
    out.layers.resize(n_layers);

    std::vector<std::vector<std::size_t>> new_index(n_layers);
    std::size_t prev_kept = crs.input_width;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const bool is_output = l + 1 == n_layers;
        new_index[l].assign(work[l].size(), SIZE_MAX);

        // a constant-1 output rule set needs one empty rule to point at
        std::optional<std::size_t> true_rule;
        if (is_output && l > 0) {
            for (std::size_t i = 0; i < work[l].size(); ++i) {
                if (work[l][i].status == NodeStatus::Const1) {
                    true_rule = out.layers[l - 1].size();
                    out.layers[l - 1].push_back({});
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < work[l].size(); ++i) {
            if (!is_output && (!reach[l][i] || work[l][i].status != NodeStatus::Var)) continue;
            new_index[l][i] = out.layers[l].size();
            std::vector<std::size_t> children;
            if (work[l][i].status == NodeStatus::Var) {
                for (std::size_t child : work[l][i].children)
                    children.push_back(l == 0 ? child : new_index[l - 1][child]);
                std::sort(children.begin(), children.end());
            } else if (is_output && work[l][i].status == NodeStatus::Const1) {
                children.push_back(*true_rule);
            } // Const0 output keeps an empty child set
            out.layers[l].push_back(std::move(children));
        }
        prev_kept = out.layers[l].size();
    }
    (void)prev_kept;
    return out;
}

namespace detail {

inline std::string literal_name(const CrsModel& crs, std::size_t j) {
    if (j < crs.feature_names.size() && !crs.feature_names[j].empty())
        return crs.feature_names[j];
    return "x" + std::to_string(j);
}

inline std::string node_name(std::size_t layer, std::size_t i) {
    const char* prefix = layer % 2 == 0 ? "r" : "s";
    return prefix + std::to_string(layer + 1) + "_" + std::to_string(i);
}

inline std::string render_conjunction(const std::vector<std::string>& parts) {
    if (parts.empty()) return "TRUE";
    std::string s = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += " ∧ ";
        s += parts[i];
    }
    return s + ")";
}

} // namespace detail

/// Human-readable listing. With a single level, each class is printed as
/// one DNF line; deeper models additionally list the intermediate rule
/// and rule-set definitions. Rules are ordered by descending length,
/// then lexicographically, so output is diff-stable.
inline std::string export_rules(const CrsModel& crs) {
    std::ostringstream os;
    const std::size_t n_layers = crs.layers.size();
    const bool deep = n_layers > 2;

    auto rule_text = [&](std::size_t layer, const std::vector<std::size_t>& children) {
        std::vector<std::string> parts;
        for (std::size_t child : children)
            parts.push_back(layer == 0 ? detail::literal_name(crs, child)
                                       : detail::node_name(layer - 1, child));
        return detail::render_conjunction(parts);
    };

    if (deep) {
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
            const bool conj = crs.kind_of(l) == LayerKind::Conjunction;
            for (std::size_t i = 0; i < crs.layers[l].size(); ++i) {
                os << detail::node_name(l, i) << " := ";
                if (conj) {
                    os << rule_text(l, crs.layers[l][i]);
                } else if (crs.layers[l][i].empty()) {
                    os << "FALSE";
                } else {
                    for (std::size_t k = 0; k < crs.layers[l][i].size(); ++k) {
                        if (k) os << " ∨ ";
                        os << detail::node_name(l - 1, crs.layers[l][i][k]);
                    }
                }
                os << "\n";
            }
        }
    }

    for (std::size_t c = 0; c < crs.class_count(); ++c) {
        const std::string cname =
            c < crs.class_names.size() && !crs.class_names[c].empty()
                ? crs.class_names[c]
                : "class" + std::to_string(c);
        os << cname << " ← ";
        const auto& children = crs.layers.back()[c];
        if (children.empty()) {
            os << "FALSE\n";
            continue;
        }
        if (deep) {
            std::vector<std::string> names;
            for (std::size_t child : children)
                names.push_back(detail::node_name(n_layers - 2, child));
            std::sort(names.begin(), names.end());
            for (std::size_t k = 0; k < names.size(); ++k) {
                if (k) os << " ∨ ";
                os << names[k];
            }
        } else {
            std::vector<std::pair<std::size_t, std::string>> rendered;
            for (std::size_t child : children) {
                const auto& rule = crs.layers[n_layers - 2][child];
                rendered.emplace_back(rule.size(), rule_text(n_layers - 2, rule));
            }
            std::sort(rendered.begin(), rendered.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (std::size_t k = 0; k < rendered.size(); ++k) {
                if (k) os << " ∨ ";
                os << rendered[k].second;
            }
        }
        os << "\n";
    }
    return os.str();
}

} // namespace mllp

#endif
