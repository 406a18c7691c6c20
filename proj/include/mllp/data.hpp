#ifndef MLLP_DATA_HPP
#define MLLP_DATA_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mllp/common.hpp"

namespace mllp {

enum class FeatureKind { Categorical, Continuous, Label };

struct FeatureSpec {
    struct Column {
        std::string name;
        FeatureKind kind = FeatureKind::Categorical;
        std::vector<std::string> vocabulary;  // categorical / label
        std::vector<double> cut_points;       // continuous, strictly increasing
    };
    std::vector<Column> columns;

    std::size_t label_index() const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].kind == FeatureKind::Label) return i;
        throw std::invalid_argument("FeatureSpec: no label column");
    }

    void validate() const {
        std::size_t labels = 0;
        for (const auto& c : columns) {
            if (c.kind == FeatureKind::Label) ++labels;
            for (std::size_t i = 1; i < c.cut_points.size(); ++i)
                require(c.cut_points[i - 1] < c.cut_points[i],
                        "FeatureSpec: cut points must be strictly increasing");
        }
        require(labels == 1, "FeatureSpec: exactly one label column required");
    }
};

/// Typed table. Categorical and label columns are string vectors,
/// continuous columns are numeric; rows with missing continuous values
/// are dropped at load (dropped_rows reports how many).
struct Table {
    std::size_t n_rows = 0;
    std::vector<std::vector<std::string>> text_cols; // empty vector for continuous columns
    std::vector<std::vector<double>> num_cols;       // empty vector for categorical columns
    std::size_t dropped_rows = 0;
};

struct BinaryDataset {
    Matrix X; // n x |J|, entries in {0,1}
    Matrix Y; // n x |C|, one-hot
    std::vector<std::size_t> labels;
    std::vector<std::string> feature_names; // rendered literals, e.g. "odor = f"
    std::vector<std::string> class_names;
    struct Provenance {
        std::size_t source_column = 0;
        std::string value;        // categorical value, empty for intervals
        double lo = 0.0, hi = 0.0; // interval bounds (open-ended via +-inf)
        bool is_interval = false;
    };
    std::vector<Provenance> provenance;
    std::vector<std::string> warnings;
    FeatureSpec fitted_spec; // spec with learned cut points filled in
};

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> test_indices;
    std::vector<std::string> warnings;

    std::vector<std::size_t> train_indices(std::size_t fold, std::size_t n) const {
        std::vector<bool> in_test(n, false);
        for (std::size_t i : test_indices[fold]) in_test[i] = true;
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n; ++i)
            if (!in_test[i]) out.push_back(i);
        return out;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool is_missing(const std::string& v) { return v.empty() || v == "?"; }

inline double entropy(const std::map<std::string, std::size_t>& counts, std::size_t total) {
    double e = 0.0;
    for (const auto& [_, c] : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        e -= p * std::log2(p);
    }
    return e;
}

/// Fayyad-Irani MDL criterion, applied recursively over the sorted
/// (value, label) pairs of one continuous feature.
inline void mdlp_recurse(const std::vector<std::pair<double, std::string>>& sorted,
                         std::size_t lo, std::size_t hi, std::vector<double>& cuts) {
    const std::size_t n = hi - lo;
    if (n < 2) return;

    std::map<std::string, std::size_t> all;
    for (std::size_t i = lo; i < hi; ++i) ++all[sorted[i].second];
    if (all.size() < 2) return;
    const double e_all = entropy(all, n);

    // scan boundary candidates, tracking left/right class counts
    std::map<std::string, std::size_t> left;
    std::map<std::string, std::size_t> right = all;
    double best_we = 1e300;
    std::size_t best_split = 0;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
        ++left[sorted[i].second];
        if (--right[sorted[i].second] == 0) right.erase(sorted[i].second);
        if (sorted[i].first == sorted[i + 1].first) continue; // not a value boundary
        const std::size_t nl = i + 1 - lo, nr = hi - i - 1;
        const double we = (nl * entropy(left, nl) + nr * entropy(right, nr)) / n;
        if (we < best_we) {
            best_we = we;
            best_split = i + 1;
        }
    }
    if (best_split == 0) return;

    // recompute entropies of the winning split for the MDL test
    std::map<std::string, std::size_t> lcnt, rcnt;
    for (std::size_t i = lo; i < best_split; ++i) ++lcnt[sorted[i].second];
    for (std::size_t i = best_split; i < hi; ++i) ++rcnt[sorted[i].second];
    const double e1 = entropy(lcnt, best_split - lo);
    const double e2 = entropy(rcnt, hi - best_split);
    const double gain = e_all - best_we;
    const double k = static_cast<double>(all.size());
    const double k1 = static_cast<double>(lcnt.size());
    const double k2 = static_cast<double>(rcnt.size());
    const double delta =
        std::log2(std::pow(3.0, k) - 2.0) - (k * e_all - k1 * e1 - k2 * e2);
    const double threshold = (std::log2(static_cast<double>(n) - 1.0) + delta) / n;
    if (gain <= threshold) return;

    const double cut = 0.5 * (sorted[best_split - 1].first + sorted[best_split].first);
    mdlp_recurse(sorted, lo, best_split, cuts);
    cuts.push_back(cut);
    mdlp_recurse(sorted, best_split, hi, cuts);
}

inline std::vector<double> quantile_cuts(std::vector<double> values, std::size_t bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> cuts;
    for (std::size_t b = 1; b < bins; ++b) {
        const std::size_t idx = b * values.size() / bins;
        if (idx == 0 || idx >= values.size()) continue;
        const double c = 0.5 * (values[idx - 1] + values[idx]);
        if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
    }
    // drop cuts that fall outside the observed value range
    std::vector<double> valid;
    for (double c : cuts)
        if (c > values.front() && c < values.back()) valid.push_back(c);
    return valid;
}

} // namespace detail

/// Parses the spec sidecar: one "name,kind[,value,value,...]" line per
/// column; kind is categorical, continuous, or label.
inline FeatureSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    FeatureSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto parts = detail::split_csv_line(line);
        if (parts.size() < 2)
            throw std::runtime_error("spec parse failure at line " + std::to_string(line_no) +
                                     ": expected name,kind");
        FeatureSpec::Column col;
        col.name = parts[0];
        if (parts[1] == "categorical") col.kind = FeatureKind::Categorical;
        else if (parts[1] == "continuous") col.kind = FeatureKind::Continuous;
        else if (parts[1] == "label") col.kind = FeatureKind::Label;
        else
            throw std::runtime_error("spec parse failure at line " + std::to_string(line_no) +
                                     ": unknown kind '" + parts[1] + "'");
        for (std::size_t i = 2; i < parts.size(); ++i)
            if (!parts[i].empty()) col.vocabulary.push_back(parts[i]);
        spec.columns.push_back(std::move(col));
    }
    spec.validate();
    return spec;
}

/// Loads a CSV against a spec. A leading header row matching the column
/// names is skipped. Unseen categorical values extend the vocabulary;
/// missing markers ("" or "?") become an explicit "missing" entry for
/// categoricals, while rows with missing continuous values are dropped.
inline Table load_table(const std::string& data_path, FeatureSpec& spec) {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open data file: " + data_path);

    Table table;
    table.text_cols.resize(spec.columns.size());
    table.num_cols.resize(spec.columns.size());

    std::string line;
    std::size_t line_no = 0;
    bool saw_any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (!saw_any) {
            saw_any = true;
            bool is_header = cells.size() == spec.columns.size();
            for (std::size_t i = 0; is_header && i < cells.size(); ++i)
                is_header = cells[i] == spec.columns[i].name;
            if (is_header) continue;
        }
        if (cells.size() != spec.columns.size())
            throw std::runtime_error("row " + std::to_string(line_no) + ": expected " +
                                     std::to_string(spec.columns.size()) + " columns, got " +
                                     std::to_string(cells.size()));

        // first pass: reject the row if any continuous cell is missing
        bool drop = false;
        std::vector<double> nums(cells.size(), 0.0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (spec.columns[c].kind != FeatureKind::Continuous) continue;
            if (detail::is_missing(cells[c])) {
                drop = true;
                break;
            }
            try {
                std::size_t pos = 0;
                nums[c] = std::stod(cells[c], &pos);
                if (pos != cells[c].size()) throw std::invalid_argument("");
            } catch (...) {
                throw std::runtime_error("row " + std::to_string(line_no) + ", column '" +
                                         spec.columns[c].name + "': cannot parse '" + cells[c] +
                                         "' as a number");
            }
        }
        if (drop) {
            ++table.dropped_rows;
            continue;
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (spec.columns[c].kind == FeatureKind::Continuous) {
                table.num_cols[c].push_back(nums[c]);
            } else {
                std::string v = detail::is_missing(cells[c]) ? "missing" : cells[c];
                table.text_cols[c].push_back(std::move(v));
            }
        }
        ++table.n_rows;
    }
    if (table.n_rows == 0) throw std::runtime_error("empty data file: " + data_path);

    // complete vocabularies from the data
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
        auto& col = spec.columns[c];
        if (col.kind == FeatureKind::Continuous) continue;
        std::set<std::string> seen(col.vocabulary.begin(), col.vocabulary.end());
        std::set<std::string> extra;
        for (const auto& v : table.text_cols[c])
            if (!seen.count(v)) extra.insert(v);
        for (const auto& v : extra) col.vocabulary.push_back(v);
    }
    return table;
}

struct BinarizeConfig {
    std::size_t fallback_quantile_bins = 5;
};

/// One-hot binarization. Categorical columns expand over their
/// vocabulary; continuous columns are discretized by entropy-based
/// recursive partitioning fit on `train_indices` only (all rows when
/// empty), with an equal-frequency fallback when no split is accepted.
/// First/last intervals are open-ended, so unseen test values always
/// land in a bin.
inline BinaryDataset binarize(const Table& table, const FeatureSpec& spec,
                              const BinarizeConfig& config = {},
                              const std::vector<std::size_t>& train_indices = {}) {
    spec.validate();
    BinaryDataset ds;
    ds.fitted_spec = spec;
    const std::size_t label_col = spec.label_index();
    const std::size_t n = table.n_rows;

    ds.class_names = spec.columns[label_col].vocabulary;
    require(!ds.class_names.empty(), "binarize: empty label vocabulary");
    std::map<std::string, std::size_t> class_of;
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) class_of[ds.class_names[c]] = c;

    std::vector<std::size_t> fit_rows = train_indices;
    if (fit_rows.empty()) {
        fit_rows.resize(n);
        std::iota(fit_rows.begin(), fit_rows.end(), 0);
    }

    // plan columns
    struct Block {
        std::size_t column;
        bool categorical;
        std::vector<std::string> values;
        std::vector<double> cuts;
    };
    std::vector<Block> blocks;
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
        const auto& col = spec.columns[c];
        if (col.kind == FeatureKind::Label) continue;
        Block block;
        block.column = c;
        if (col.kind == FeatureKind::Categorical) {
            block.categorical = true;
            block.values = col.vocabulary;
            require(!block.values.empty(), "binarize: empty vocabulary for " + col.name);
        } else {
            block.categorical = false;
            if (!col.cut_points.empty()) {
                block.cuts = col.cut_points;
            } else {
                std::vector<std::pair<double, std::string>> pairs;
                pairs.reserve(fit_rows.size());
                for (std::size_t r : fit_rows)
                    pairs.emplace_back(table.num_cols[c][r], table.text_cols[label_col][r]);
                std::sort(pairs.begin(), pairs.end());
                std::set<double> distinct;
                for (const auto& p : pairs) distinct.insert(p.first);
                if (distinct.size() < 2) {
                    ds.warnings.push_back("column '" + col.name +
                                          "' has fewer than 2 distinct values; single constant bin");
                } else {
                    detail::mdlp_recurse(pairs, 0, pairs.size(), block.cuts);
                    std::sort(block.cuts.begin(), block.cuts.end());
                    if (block.cuts.empty()) {
                        std::vector<double> vals;
                        for (const auto& p : pairs) vals.push_back(p.first);
                        block.cuts =
                            detail::quantile_cuts(std::move(vals), config.fallback_quantile_bins);
                    }
                }
                ds.fitted_spec.columns[c].cut_points = block.cuts;
            }
        }
        blocks.push_back(std::move(block));
    }

    // lay out binary columns and provenance
    std::size_t total_bits = 0;
    for (const auto& b : blocks)
        total_bits += b.categorical ? b.values.size() : b.cuts.size() + 1;
    ds.X = Matrix(n, total_bits);
    ds.Y = Matrix(n, ds.class_names.size());
    ds.labels.resize(n);

    std::size_t bit = 0;
    for (const auto& b : blocks) {
        const auto& col = spec.columns[b.column];
        if (b.categorical) {
            std::map<std::string, std::size_t> value_bit;
            for (std::size_t v = 0; v < b.values.size(); ++v) {
                value_bit[b.values[v]] = bit + v;
                BinaryDataset::Provenance p;
                p.source_column = b.column;
                p.value = b.values[v];
                ds.provenance.push_back(p);
                ds.feature_names.push_back(col.name + " = " + b.values[v]);
            }
            for (std::size_t r = 0; r < n; ++r) {
                auto it = value_bit.find(table.text_cols[b.column][r]);
                require(it != value_bit.end(),
                        "binarize: value outside vocabulary for " + col.name);
                ds.X(r, it->second) = 1.0;
            }
            bit += b.values.size();
        } else {
            const std::size_t bins = b.cuts.size() + 1;
            for (std::size_t v = 0; v < bins; ++v) {
                const double lo = v == 0 ? -HUGE_VAL : b.cuts[v - 1];
                const double hi = v == b.cuts.size() ? HUGE_VAL : b.cuts[v];
                BinaryDataset::Provenance p;
                p.source_column = b.column;
                p.is_interval = true;
                p.lo = lo;
                p.hi = hi;
                ds.provenance.push_back(p);
                std::ostringstream name;
                if (bins == 1) name << col.name << " = any";
                else if (v == 0) name << col.name << " <= " << b.cuts[0];
                else if (v == b.cuts.size()) name << col.name << " > " << b.cuts.back();
                else name << b.cuts[v - 1] << " < " << col.name << " <= " << b.cuts[v];
                ds.feature_names.push_back(name.str());
            }
            for (std::size_t r = 0; r < n; ++r) {
                const double x = table.num_cols[b.column][r];
                std::size_t v = 0;
                while (v < b.cuts.size() && x > b.cuts[v]) ++v;
                ds.X(r, bit + v) = 1.0;
            }
            bit += bins;
        }
    }

    for (std::size_t r = 0; r < n; ++r) {
        auto it = class_of.find(table.text_cols[label_col][r]);
        require(it != class_of.end(), "binarize: label outside vocabulary");
        ds.labels[r] = it->second;
        ds.Y(r, it->second) = 1.0;
    }
    return ds;
}

/// Stratified k-fold split. Classes with fewer than k instances are
/// spread as far as they go, with a warning.
inline FoldPlan make_folds(const std::vector<std::size_t>& labels, std::size_t k,
                           std::uint64_t seed) {
    require(k >= 2, "make_folds: k must be >= 2");
    require(labels.size() >= k, "make_folds: fewer instances than folds");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.test_indices.resize(k);

    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    std::size_t offset = 0;
    for (auto& [cls, idx] : by_class) {
        if (idx.size() < k)
            plan.warnings.push_back("class " + std::to_string(cls) + " has fewer than " +
                                    std::to_string(k) + " instances; not stratifiable");
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            plan.test_indices[(offset + i) % k].push_back(idx[i]);
        offset += idx.size(); // rotate so small classes do not pile onto fold 0
    }
    for (auto& fold : plan.test_indices) std::sort(fold.begin(), fold.end());
    return plan;
}

/// Row subset of a binarized dataset.
inline BinaryDataset subset(const BinaryDataset& ds, const std::vector<std::size_t>& rows) {
    BinaryDataset out;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    out.provenance = ds.provenance;
    out.fitted_spec = ds.fitted_spec;
    out.X = Matrix(rows.size(), ds.X.cols);
    out.Y = Matrix(rows.size(), ds.Y.cols);
    out.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(ds.X.row(rows[r]), ds.X.row(rows[r]) + ds.X.cols, out.X.row(r));
        std::copy(ds.Y.row(rows[r]), ds.Y.row(rows[r]) + ds.Y.cols, out.Y.row(r));
        out.labels[r] = ds.labels[rows[r]];
    }
    return out;
}

} // namespace mllp

#endif
