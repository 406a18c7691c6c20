#ifndef MLLP_EXPERIMENT_HPP
#define MLLP_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mllp/crs.hpp"
#include "mllp/data.hpp"
#include "mllp/metrics.hpp"
#include "mllp/serialize.hpp"
#include "mllp/train.hpp"

namespace mllp {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// "64" -> {64}; "256x3" -> {256, 256, 256}. The expanded list must have
/// odd length (the output layer is always a disjunction layer).
inline std::vector<std::size_t> parse_arch(const std::string& arch) {
    std::size_t width = 0, repeat = 1;
    const auto xpos = arch.find('x');
    try {
        width = std::stoul(arch.substr(0, xpos));
        if (xpos != std::string::npos) repeat = std::stoul(arch.substr(xpos + 1));
    } catch (...) {
        throw std::invalid_argument("unparseable architecture: " + arch);
    }
    require(width > 0 && repeat > 0, "unparseable architecture: " + arch);
    return std::vector<std::size_t>(repeat, width);
}

struct ExperimentConfig {
    std::string data_path;
    std::string spec_path;
    std::string dataset_name;
    std::string arch = "64";
    TrainConfig train;
    bool use_l0 = false;
    GateConfig gates; // rates/constants; `enabled` follows use_l0
    double threshold = 0.5;      // T, weight binarization
    double gate_threshold = 0.5; // T'
    std::size_t folds = 5;
    std::string output_dir = ".";
    std::uint64_t seed = 0;

    std::string variant() const { return use_l0 ? "l0" : "baseline"; }
    std::string label() const {
        std::ostringstream os;
        os << dataset_name << "_" << variant() << "_arch" << arch << "_P" << train.rb_rate;
        return os.str();
    }
};

struct FoldResult {
    double mllp_f1 = 0.0;
    double crs_f1_raw = 0.0;
    double crs_f1_pruned = 0.0;
    std::size_t complexity = 0; // after pruning
    std::vector<EpochMetrics> epochs;
    std::string rules;
};

struct ExperimentRecord {
    ExperimentConfig config;
    std::vector<FoldResult> folds;
    double mean_mllp_f1 = 0.0, std_mllp_f1 = 0.0;
    double mean_crs_f1 = 0.0, std_crs_f1 = 0.0;
    double mean_complexity = 0.0, std_complexity = 0.0;
    double wall_seconds = 0.0;
    std::string code_version = kLibraryVersion;
    std::string error; // nonempty when a grid point failed
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

inline std::vector<std::size_t> mllp_predictions(const MllpModel& model, const Matrix& X) {
    const Matrix pred = forward_eval(model, X);
    std::vector<std::size_t> out(pred.rows);
    for (std::size_t r = 0; r < pred.rows; ++r) out[r] = argmax_class(pred.row(r), pred.cols);
    return out;
}

inline std::vector<std::size_t> crs_predictions(const CrsModel& crs, const Matrix& X) {
    std::vector<std::size_t> out(X.rows);
    std::vector<std::uint8_t> x(X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t j = 0; j < X.cols; ++j) x[j] = X(r, j) > 0.5 ? 1 : 0;
        out[r] = crs_predict_class(crs, x);
    }
    return out;
}

} // namespace detail

/// One cross-validated experiment on an already loaded table. Per fold:
/// discretizer fit on the training split, MLLP trained, CRS extracted,
/// pruned, and scored.
inline ExperimentRecord run_cv(const Table& table, const FeatureSpec& spec,
                               const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRecord record;
    record.config = config;

    // label indices for the stratified plan, straight from the table
    const std::size_t label_col = spec.label_index();
    std::map<std::string, std::size_t> class_of;
    for (std::size_t c = 0; c < spec.columns[label_col].vocabulary.size(); ++c)
        class_of[spec.columns[label_col].vocabulary[c]] = c;
    std::vector<std::size_t> labels(table.n_rows);
    for (std::size_t r = 0; r < table.n_rows; ++r)
        labels[r] = class_of.at(table.text_cols[label_col][r]);

    const FoldPlan plan = make_folds(labels, config.folds, config.seed);
    const std::vector<std::size_t> widths = parse_arch(config.arch);
    Rng base_rng(config.seed);

    for (std::size_t fold = 0; fold < config.folds; ++fold) {
        const std::vector<std::size_t> train_rows = plan.train_indices(fold, table.n_rows);
        const BinaryDataset full = binarize(table, spec, {}, train_rows);
        const BinaryDataset train_ds = subset(full, train_rows);
        const BinaryDataset test_ds = subset(full, plan.test_indices[fold]);

        Rng fold_rng = base_rng.child(fold + 1);
        GateConfig gc = config.gates;
        gc.enabled = config.use_l0;
        MllpModel model =
            build_model(full.X.cols, widths, full.class_names.size(), gc, fold_rng);

        TrainConfig tc = config.train;
        tc.seed = splitmix64(config.seed ^ splitmix64(fold + 0x0F0F));
        if (!config.use_l0) tc.l0_lambda = 0.0;

        FoldResult result;
        result.epochs = train(model, train_ds.X, train_ds.Y, tc);

        result.mllp_f1 = macro_f1(detail::mllp_predictions(model, test_ds.X), test_ds.labels,
                                  full.class_names.size());
        CrsModel crs = extract_crs(model, config.threshold, config.gate_threshold);
        crs.feature_names = full.feature_names;
        crs.class_names = full.class_names;
        result.crs_f1_raw = macro_f1(detail::crs_predictions(crs, test_ds.X), test_ds.labels,
                                     full.class_names.size());
        const CrsModel pruned = prune(crs);
        result.crs_f1_pruned = macro_f1(detail::crs_predictions(pruned, test_ds.X),
                                        test_ds.labels, full.class_names.size());
        result.complexity = complexity(pruned, true).total_literals;
        result.rules = export_rules(pruned);
        record.folds.push_back(std::move(result));
    }

    std::vector<double> mllp_f1s, crs_f1s, compl_vals;
    for (const auto& f : record.folds) {
        mllp_f1s.push_back(f.mllp_f1);
        crs_f1s.push_back(f.crs_f1_pruned);
        compl_vals.push_back(static_cast<double>(f.complexity));
    }
    std::tie(record.mean_mllp_f1, record.std_mllp_f1) = detail::mean_std(mllp_f1s);
    std::tie(record.mean_crs_f1, record.std_crs_f1) = detail::mean_std(crs_f1s);
    std::tie(record.mean_complexity, record.std_complexity) = detail::mean_std(compl_vals);
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

/// Loads the dataset named by the config, then delegates to run_cv.
inline ExperimentRecord run_experiment(const ExperimentConfig& config) {
    FeatureSpec spec = load_spec(config.spec_path);
    const Table table = load_table(config.data_path, spec);
    return run_cv(table, spec, config);
}

struct GridAxes {
    std::vector<std::string> archs = {"64"};
    std::vector<double> rb_rates = {0.0};
    std::vector<double> l0_lambdas = {1e-3};
};

struct GridOutcome {
    std::vector<ExperimentRecord> records;
    std::vector<std::size_t> pareto; // indices into records
};

/// Non-dominated subset under (maximize F1, minimize complexity).
inline std::vector<std::size_t> pareto_front(const std::vector<ExperimentRecord>& records) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].error.empty()) continue;
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j) {
            if (i == j || !records[j].error.empty()) continue;
            const bool no_worse = records[j].mean_crs_f1 >= records[i].mean_crs_f1 &&
                                  records[j].mean_complexity <= records[i].mean_complexity;
            const bool better = records[j].mean_crs_f1 > records[i].mean_crs_f1 ||
                                records[j].mean_complexity < records[i].mean_complexity;
            dominated = no_worse && better;
        }
        if (!dominated) front.push_back(i);
    }
    return front;
}

/// Runs every grid point; a failing point is recorded with its error and
/// the grid continues.
inline GridOutcome grid_run(const Table& table, const FeatureSpec& spec,
                            const ExperimentConfig& tmpl, const GridAxes& axes) {
    require(!axes.archs.empty() && !axes.rb_rates.empty(), "grid_run: empty grid");
    require(!tmpl.use_l0 || !axes.l0_lambdas.empty(), "grid_run: empty grid");
    GridOutcome outcome;
    const std::vector<double> lambdas = tmpl.use_l0 ? axes.l0_lambdas : std::vector<double>{0.0};
    for (const auto& arch : axes.archs)
        for (double p : axes.rb_rates)
            for (double lambda : lambdas) {
                ExperimentConfig cfg = tmpl;
                cfg.arch = arch;
                cfg.train.rb_rate = p;
                cfg.train.l0_lambda = lambda;
                try {
                    outcome.records.push_back(run_cv(table, spec, cfg));
                } catch (const std::exception& e) {
                    ExperimentRecord failed;
                    failed.config = cfg;
                    failed.error = e.what();
                    outcome.records.push_back(std::move(failed));
                }
            }
    outcome.pareto = pareto_front(outcome.records);
    return outcome;
}

inline json record_to_json(const ExperimentRecord& r) {
    const ExperimentConfig& c = r.config;
    json folds = json::array();
    for (const auto& f : r.folds) {
        json epochs = json::array();
        for (const auto& e : f.epochs)
            epochs.push_back({{"epoch", e.epoch},
                              {"mean_loss", e.mean_loss},
                              {"active_weight_count", e.active_weight_count},
                              {"active_weight_fraction", e.active_weight_fraction},
                              {"learning_rate", e.learning_rate}});
        folds.push_back({{"mllp_f1", f.mllp_f1},
                         {"crs_f1_raw", f.crs_f1_raw},
                         {"crs_f1_pruned", f.crs_f1_pruned},
                         {"complexity", f.complexity},
                         {"epochs", epochs},
                         {"rules", f.rules}});
    }
    return json{{"config",
                 {{"data_path", c.data_path},
                  {"spec_path", c.spec_path},
                  {"dataset_name", c.dataset_name},
                  {"arch", c.arch},
                  {"use_l0", c.use_l0},
                  {"threshold", c.threshold},
                  {"gate_threshold", c.gate_threshold},
                  {"folds", c.folds},
                  {"output_dir", c.output_dir},
                  {"seed", c.seed},
                  {"train",
                   {{"epochs", c.train.epochs},
                    {"batch_size", c.train.batch_size},
                    {"learning_rate", c.train.learning_rate},
                    {"lr_decay_factor", c.train.lr_decay_factor},
                    {"lr_decay_every_epochs", c.train.lr_decay_every_epochs},
                    {"weight_decay", c.train.weight_decay},
                    {"l0_lambda", c.train.l0_lambda},
                    {"rb_rate", c.train.rb_rate},
                    {"rb_threshold", c.train.rb_threshold},
                    {"rb_refresh_every_epochs", c.train.rb_refresh_every_epochs}}},
                  {"gates",
                   {{"input_drop_rate", c.gates.input_drop_rate},
                    {"hidden_drop_rate", c.gates.hidden_drop_rate},
                    {"gate_output_layer", c.gates.gate_output_layer},
                    {"beta", c.gates.beta},
                    {"gamma", c.gates.gamma},
                    {"zeta", c.gates.zeta}}}}},
                {"folds", folds},
                {"mean_mllp_f1", r.mean_mllp_f1},
                {"std_mllp_f1", r.std_mllp_f1},
                {"mean_crs_f1", r.mean_crs_f1},
                {"std_crs_f1", r.std_crs_f1},
                {"mean_complexity", r.mean_complexity},
                {"std_complexity", r.std_complexity},
                {"wall_seconds", r.wall_seconds},
                {"code_version", r.code_version},
                {"error", r.error}};
}

inline ExperimentRecord record_from_json(const json& j) {
    ExperimentRecord r;
    const json& jc = j.at("config");
    r.config.data_path = jc.at("data_path").get<std::string>();
    r.config.spec_path = jc.at("spec_path").get<std::string>();
    r.config.dataset_name = jc.at("dataset_name").get<std::string>();
    r.config.arch = jc.at("arch").get<std::string>();
    r.config.use_l0 = jc.at("use_l0").get<bool>();
    r.config.threshold = jc.at("threshold").get<double>();
    r.config.gate_threshold = jc.at("gate_threshold").get<double>();
    r.config.folds = jc.at("folds").get<std::size_t>();
    r.config.output_dir = jc.at("output_dir").get<std::string>();
    r.config.seed = jc.at("seed").get<std::uint64_t>();
    const json& jt = jc.at("train");
    r.config.train.epochs = jt.at("epochs").get<std::size_t>();
    r.config.train.batch_size = jt.at("batch_size").get<std::size_t>();
    r.config.train.learning_rate = jt.at("learning_rate").get<double>();
    r.config.train.lr_decay_factor = jt.at("lr_decay_factor").get<double>();
    r.config.train.lr_decay_every_epochs = jt.at("lr_decay_every_epochs").get<std::size_t>();
    r.config.train.weight_decay = jt.at("weight_decay").get<double>();
    r.config.train.l0_lambda = jt.at("l0_lambda").get<double>();
    r.config.train.rb_rate = jt.at("rb_rate").get<double>();
    r.config.train.rb_threshold = jt.at("rb_threshold").get<double>();
    r.config.train.rb_refresh_every_epochs = jt.at("rb_refresh_every_epochs").get<std::size_t>();
    const json& jg = jc.at("gates");
    r.config.gates.enabled = r.config.use_l0;
    r.config.gates.input_drop_rate = jg.at("input_drop_rate").get<double>();
    r.config.gates.hidden_drop_rate = jg.at("hidden_drop_rate").get<double>();
    r.config.gates.gate_output_layer = jg.at("gate_output_layer").get<bool>();
    r.config.gates.beta = jg.at("beta").get<double>();
    r.config.gates.gamma = jg.at("gamma").get<double>();
    r.config.gates.zeta = jg.at("zeta").get<double>();
    for (const auto& jf : j.at("folds")) {
        FoldResult f;
        f.mllp_f1 = jf.at("mllp_f1").get<double>();
        f.crs_f1_raw = jf.at("crs_f1_raw").get<double>();
        f.crs_f1_pruned = jf.at("crs_f1_pruned").get<double>();
        f.complexity = jf.at("complexity").get<std::size_t>();
        for (const auto& je : jf.at("epochs")) {
            EpochMetrics e;
            e.epoch = je.at("epoch").get<std::size_t>();
            e.mean_loss = je.at("mean_loss").get<double>();
            e.active_weight_count = je.at("active_weight_count").get<std::size_t>();
            e.active_weight_fraction = je.at("active_weight_fraction").get<double>();
            e.learning_rate = je.at("learning_rate").get<double>();
            f.epochs.push_back(e);
        }
        f.rules = jf.at("rules").get<std::string>();
        r.folds.push_back(std::move(f));
    }
    r.mean_mllp_f1 = j.at("mean_mllp_f1").get<double>();
    r.std_mllp_f1 = j.at("std_mllp_f1").get<double>();
    r.mean_crs_f1 = j.at("mean_crs_f1").get<double>();
    r.std_crs_f1 = j.at("std_crs_f1").get<double>();
    r.mean_complexity = j.at("mean_complexity").get<double>();
    r.std_complexity = j.at("std_complexity").get<double>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.code_version = j.at("code_version").get<std::string>();
    r.error = j.at("error").get<std::string>();
    return r;
}

/// Line-delimited record store, one JSON object per run.
inline void append_record(const std::string& path, const ExperimentRecord& record) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << record_to_json(record).dump() << "\n";
}

inline std::vector<ExperimentRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<ExperimentRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(json::parse(line)));
    }
    return records;
}

/// Writes the summary table (best model per dataset/variant by mean CRS
/// F1, ties to lower complexity), the per-epoch active-weight series,
/// the Pareto plot data, and one rule file per record.
inline void export_report(const std::vector<ExperimentRecord>& records,
                          const std::string& out_dir) {
    require(!records.empty(), "export_report: no records");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::map<std::pair<std::string, std::string>, const ExperimentRecord*> best;
    for (const auto& r : records) {
        if (!r.error.empty()) continue;
        const auto key = std::make_pair(r.config.dataset_name, r.config.variant());
        auto it = best.find(key);
        if (it == best.end() || r.mean_crs_f1 > it->second->mean_crs_f1 ||
            (r.mean_crs_f1 == it->second->mean_crs_f1 &&
             r.mean_complexity < it->second->mean_complexity))
            best[key] = &r;
    }
    {
        std::ofstream out(fs::path(out_dir) / "summary.csv");
        out << "dataset,variant,f1,f1_std,complexity,complexity_std,rb_rate,arch\n";
        for (const auto& [key, r] : best)
            out << key.first << "," << key.second << "," << r->mean_crs_f1 << ","
                << r->std_crs_f1 << "," << r->mean_complexity << "," << r->std_complexity << ","
                << r->config.train.rb_rate << "," << r->config.arch << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "active_weights.csv");
        out << "run,fold,epoch,active_weight_count,active_weight_fraction\n";
        for (const auto& r : records)
            for (std::size_t f = 0; f < r.folds.size(); ++f)
                for (const auto& e : r.folds[f].epochs)
                    out << r.config.label() << "," << f << "," << e.epoch << ","
                        << e.active_weight_count << "," << e.active_weight_fraction << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "pareto.csv");
        out << "run,complexity,f1,variant,on_front\n";
        const auto front = pareto_front(records);
        std::vector<bool> on(records.size(), false);
        for (std::size_t i : front) on[i] = true;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!records[i].error.empty()) continue;
            out << records[i].config.label() << "," << records[i].mean_complexity << ","
                << records[i].mean_crs_f1 << "," << records[i].config.variant() << ","
                << (on[i] ? 1 : 0) << "\n";
        }
    }
    for (const auto& r : records) {
        if (r.folds.empty()) continue;
        std::ofstream out(fs::path(out_dir) / (r.config.label() + ".rules.txt"));
        out << r.folds.front().rules;
    }
}

} // namespace mllp

#endif
