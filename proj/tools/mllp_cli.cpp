// mllp command-line front end: dataset prep, training, cross-validated
// experiments, grids, rule extraction, and report generation.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "mllp/mllp.hpp"

using namespace mllp;

namespace {

namespace fs = std::filesystem;

/// Options shared by every experiment-shaped subcommand.
struct CommonOpts {
    ExperimentConfig config;
    std::string output_root = ".";
};

void add_train_flags(CLI::App* cmd, CommonOpts& opts) {
    auto& c = opts.config;
    cmd->add_option("--data", c.data_path, "CSV data file")->required();
    cmd->add_option("--spec", c.spec_path, "feature spec sidecar")->required();
    cmd->add_option("--name", c.dataset_name, "dataset name used in outputs");
    cmd->add_option("--arch", c.arch, "architecture, e.g. 64 or 256x3");
    cmd->add_option("--epochs", c.train.epochs, "training epochs");
    cmd->add_option("--batch-size", c.train.batch_size, "minibatch size");
    cmd->add_option("--lr", c.train.learning_rate, "learning rate");
    cmd->add_option("--lr-decay", c.train.lr_decay_factor, "learning-rate decay factor");
    cmd->add_option("--lr-decay-every", c.train.lr_decay_every_epochs,
                    "epochs between decays");
    cmd->add_option("--weight-decay", c.train.weight_decay, "L2 coefficient (lambda')");
    cmd->add_option("--rb-rate", c.train.rb_rate, "random binarization rate P");
    cmd->add_flag("--l0", c.use_l0, "enable hard-concrete L0 gates");
    cmd->add_option("--l0-lambda", c.train.l0_lambda, "L0 coefficient (lambda)");
    cmd->add_option("--threshold", c.threshold, "weight binarization threshold T");
    cmd->add_option("--gate-threshold", c.gate_threshold, "gate threshold T'");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", opts.output_root, "output directory")
        ->envname("MLLP_OUTPUT_ROOT");
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.output_root);
    return (fs::path(opts.output_root) / name).string();
}

void print_record(const ExperimentRecord& rec) {
    std::cout << rec.config.label() << ": mllp_f1 " << rec.mean_mllp_f1 << " +- "
              << rec.std_mllp_f1 << ", crs_f1 " << rec.mean_crs_f1 << " +- "
              << rec.std_crs_f1 << ", complexity " << rec.mean_complexity << " +- "
              << rec.std_complexity << " (" << rec.wall_seconds << "s)\n";
}

int cmd_binarize(const CommonOpts& opts) {
    FeatureSpec spec = load_spec(opts.config.spec_path);
    const Table table = load_table(opts.config.data_path, spec);
    const BinaryDataset ds = binarize(table, spec);
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    if (table.dropped_rows)
        std::cerr << "warning: dropped " << table.dropped_rows
                  << " rows with missing continuous values\n";
    const std::string path = out_path(opts, opts.config.dataset_name + ".dataset.json");
    write_json_file(path, dataset_to_json(ds));
    std::cout << "wrote " << path << " (" << ds.X.rows << " rows, " << ds.X.cols
              << " binary features, " << ds.class_names.size() << " classes)\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    FeatureSpec spec = load_spec(opts.config.spec_path);
    const Table table = load_table(opts.config.data_path, spec);
    const BinaryDataset ds = binarize(table, spec);

    GateConfig gc = opts.config.gates;
    gc.enabled = opts.config.use_l0;
    Rng rng(opts.config.seed);
    MllpModel model = build_model(ds.X.cols, parse_arch(opts.config.arch),
                                  ds.class_names.size(), gc, rng);
    TrainConfig tc = opts.config.train;
    tc.seed = opts.config.seed;
    if (!opts.config.use_l0) tc.l0_lambda = 0.0;

    const auto metrics = train(model, ds.X, ds.Y, tc);
    if (!metrics.empty())
        std::cout << "final loss " << metrics.back().mean_loss << ", active weights "
                  << metrics.back().active_weight_count << "\n";

    const std::string path = out_path(opts, opts.config.label() + ".model.json");
    nlohmann::json j = model_to_json(model);
    j["feature_names"] = ds.feature_names;
    j["class_names"] = ds.class_names;
    write_json_file(path, j);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_cv(const CommonOpts& opts, std::size_t folds) {
    CommonOpts o = opts;
    o.config.folds = folds;
    const ExperimentRecord rec = run_experiment(o.config);
    print_record(rec);
    append_record(out_path(o, "records.jsonl"), rec);
    return 0;
}

int cmd_grid(const CommonOpts& opts, std::size_t folds, const GridAxes& axes) {
    CommonOpts o = opts;
    o.config.folds = folds;
    FeatureSpec spec = load_spec(o.config.spec_path);
    const Table table = load_table(o.config.data_path, spec);
    const GridOutcome outcome = grid_run(table, spec, o.config, axes);
    const std::string path = out_path(o, "records.jsonl");
    for (std::size_t i = 0; i < outcome.records.size(); ++i) {
        const auto& rec = outcome.records[i];
        if (!rec.error.empty()) {
            std::cerr << rec.config.label() << ": failed: " << rec.error << "\n";
            continue;
        }
        print_record(rec);
        append_record(path, rec);
    }
    std::cout << "pareto front:\n";
    for (std::size_t i : outcome.pareto) {
        const auto& r = outcome.records[i];
        std::cout << "  " << r.config.label() << " f1 " << r.mean_crs_f1
                  << " complexity " << r.mean_complexity << "\n";
    }
    return 0;
}

int cmd_extract(const std::string& model_path, double threshold, double gate_threshold,
                const CommonOpts& opts) {
    const nlohmann::json j = read_json_file(model_path);
    const MllpModel model = model_from_json(j);
    CrsModel crs = extract_crs(model, threshold, gate_threshold);
    if (j.contains("feature_names"))
        crs.feature_names = j["feature_names"].get<std::vector<std::string>>();
    if (j.contains("class_names"))
        crs.class_names = j["class_names"].get<std::vector<std::string>>();
    const CrsModel pruned = prune(crs);

    const std::string stem = fs::path(model_path).stem().stem().string();
    const std::string crs_path = out_path(opts, stem + ".crs.json");
    write_json_file(crs_path, crs_to_json(pruned));
    const std::string rules_path = out_path(opts, stem + ".rules.txt");
    std::ofstream rules(rules_path);
    rules << export_rules(pruned);
    std::cout << "complexity " << complexity(pruned, true).total_literals << "\n"
              << "wrote " << crs_path << " and " << rules_path << "\n";
    return 0;
}

int cmd_report(const std::string& records_path, const CommonOpts& opts) {
    const auto records = read_records(records_path);
    export_report(records, opts.output_root);
    std::cout << "wrote report for " << records.size() << " record(s) to "
              << opts.output_root << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-layer Logical Perceptron trainer and Concept Rule Set extractor"};
    app.require_subcommand(1);
    app.set_config("--config", "", "config file supplying flag defaults");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    CommonOpts opts;
    std::size_t folds = 5;

    auto* binarize_cmd =
        app.add_subcommand("binarize", "binarize a CSV dataset and cache it");
    binarize_cmd->add_option("--data", opts.config.data_path, "CSV data file")->required();
    binarize_cmd->add_option("--spec", opts.config.spec_path, "feature spec sidecar")
        ->required();
    binarize_cmd->add_option("--name", opts.config.dataset_name, "dataset name");
    binarize_cmd->add_option("--out", opts.output_root, "output directory")
        ->envname("MLLP_OUTPUT_ROOT");

    auto* train_cmd = app.add_subcommand("train", "train one model on the full dataset");
    add_train_flags(train_cmd, opts);

    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validated experiment");
    add_train_flags(cv_cmd, opts);
    cv_cmd->add_option("--folds", folds, "number of folds");

    GridAxes axes;
    auto* grid_cmd = app.add_subcommand("grid", "grid over {arch, P, lambda} with Pareto front");
    add_train_flags(grid_cmd, opts);
    grid_cmd->add_option("--folds", folds, "number of folds");
    grid_cmd->add_option("--archs", axes.archs, "architectures to sweep");
    grid_cmd->add_option("--rb-rates", axes.rb_rates, "RB rates to sweep");
    grid_cmd->add_option("--l0-lambdas", axes.l0_lambdas, "L0 lambdas to sweep");

    std::string model_path;
    double threshold = 0.5, gate_threshold = 0.5;
    auto* extract_cmd =
        app.add_subcommand("extract", "extract and prune a rule set from a saved model");
    extract_cmd->add_option("--model", model_path, "model JSON file")->required();
    extract_cmd->add_option("--threshold", threshold, "weight binarization threshold T");
    extract_cmd->add_option("--gate-threshold", gate_threshold, "gate threshold T'");
    extract_cmd->add_option("--out", opts.output_root, "output directory")
        ->envname("MLLP_OUTPUT_ROOT");

    std::string records_path;
    auto* report_cmd = app.add_subcommand("report", "summary tables from saved records");
    report_cmd->add_option("--records", records_path, "records.jsonl file")->required();
    report_cmd->add_option("--out", opts.output_root, "output directory")
        ->envname("MLLP_OUTPUT_ROOT");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors -> 1, --help -> 0
    }

    try {
        if (binarize_cmd->parsed()) return cmd_binarize(opts);
        if (train_cmd->parsed()) return cmd_train(opts);
        if (cv_cmd->parsed()) return cmd_cv(opts, folds);
        if (grid_cmd->parsed()) return cmd_grid(opts, folds, axes);
        if (extract_cmd->parsed())
            return cmd_extract(model_path, threshold, gate_threshold, opts);
        if (report_cmd->parsed()) return cmd_report(records_path, opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
