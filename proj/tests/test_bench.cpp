#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mllp/experiment.hpp"
#include "oracles.hpp"

using namespace mllp;

namespace {

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("/tmp/mllp_bench_" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

/// Tiny noise-free two-class problem: class is (x0 AND x1) OR x3.
void write_toy(const std::string& dir, std::string& data_path, std::string& spec_path) {
    spec_path = dir + "/toy.spec";
    data_path = dir + "/toy.csv";
    std::ofstream spec(spec_path);
    spec << "a,categorical,0,1\nb,categorical,0,1\nc,categorical,0,1\n"
            "d,categorical,0,1\nclass,label,neg,pos\n";
    std::ofstream data(data_path);
    for (int bits = 0; bits < 16; ++bits) {
        const int a = bits & 1, b = (bits >> 1) & 1, c = (bits >> 2) & 1, d = (bits >> 3) & 1;
        const bool pos = (a && b) || d;
        // repeat each pattern so every fold sees every pattern
        for (int rep = 0; rep < 3; ++rep)
            data << a << ',' << b << ',' << c << ',' << d << ','
                 << (pos ? "pos" : "neg") << '\n';
    }
}

} // namespace

TEST_CASE("parse_arch") {
    CHECK(parse_arch("64") == std::vector<std::size_t>{64});
    CHECK(parse_arch("256x3") == std::vector<std::size_t>(3, 256));
    CHECK(parse_arch("8x1") == std::vector<std::size_t>{8});
    CHECK_THROWS_AS((void)parse_arch(""), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_arch("x3"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_arch("64x"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_arch("abc"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_arch("0"), std::invalid_argument);
}

TEST_CASE("macro F1 reference values") {
    // perfect prediction
    CHECK(macro_f1({0, 1, 0, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(1.0));
    // all predictions one class on balanced 2-class data:
    // class 0 F1 = 2/3, class 1 F1 = 0 -> macro 1/3
    CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}, 2) == doctest::Approx(1.0 / 3.0));
    // class absent from both truth and predictions is skipped
    CHECK(macro_f1({0, 1}, {0, 1}, 3) == doctest::Approx(1.0));
    // class with support but never predicted contributes 0
    CHECK(macro_f1({0, 0, 0}, {0, 0, 2}, 3) ==
          doctest::Approx(0.5 * (2.0 * 2 / (2.0 * 2 + 1))));

    CHECK_THROWS_AS((void)macro_f1({}, {}, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)macro_f1({0}, {0, 1}, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)macro_f1({5}, {0}, 2), std::invalid_argument);
}

TEST_CASE("macro F1 matches confusion-matrix oracle on random inputs") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_u64() % 40;
        const std::size_t classes = 2 + rng.next_u64() % 4;
        std::vector<std::size_t> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.next_u64() % classes;
            truth[i] = rng.next_u64() % classes;
        }
        CHECK(macro_f1(pred, truth, classes) ==
              doctest::Approx(oracles::brute_force_macro_f1(pred, truth, classes))
                  .epsilon(1e-12));
    }
}

TEST_CASE("argmax ties break to the lowest index") {
    const double row[] = {0.5, 0.5, 0.2};
    CHECK(argmax_class(row, 3) == 0);
    const double row2[] = {0.1, 0.9, 0.9};
    CHECK(argmax_class(row2, 3) == 1);
}

TEST_CASE("pareto front matches brute-force dominance") {
    Rng rng(53);
    auto make = [](double f1, double complexity) {
        ExperimentRecord r;
        r.mean_crs_f1 = f1;
        r.mean_complexity = complexity;
        return r;
    };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ExperimentRecord> records;
        const std::size_t n = 1 + rng.next_u64() % 12;
        for (std::size_t i = 0; i < n; ++i)
            records.push_back(make(rng.uniform_open(), 1 + rng.next_u64() % 40));
        const auto front = pareto_front(records);

        for (std::size_t i = 0; i < n; ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                if (records[j].mean_crs_f1 >= records[i].mean_crs_f1 &&
                    records[j].mean_complexity <= records[i].mean_complexity &&
                    (records[j].mean_crs_f1 > records[i].mean_crs_f1 ||
                     records[j].mean_complexity < records[i].mean_complexity))
                    dominated = true;
            }
            const bool on_front =
                std::find(front.begin(), front.end(), i) != front.end();
            CHECK(on_front == !dominated);
        }
    }
}

TEST_CASE("pareto front skips failed grid points") {
    ExperimentRecord good;
    good.mean_crs_f1 = 0.5;
    good.mean_complexity = 10;
    ExperimentRecord failed;
    failed.mean_crs_f1 = 1.0;
    failed.mean_complexity = 1;
    failed.error = "diverged";
    const auto front = pareto_front({good, failed});
    CHECK(front == std::vector<std::size_t>{0});
}

TEST_CASE("cross-validated run on a small noise-free task") {
    TempDir dir("cv");
    std::string data_path, spec_path;
    write_toy(dir.path, data_path, spec_path);

    ExperimentConfig config;
    config.data_path = data_path;
    config.spec_path = spec_path;
    config.dataset_name = "toy";
    config.arch = "16";
    config.folds = 3;
    config.seed = 5;
    config.train.epochs = 400;
    config.train.batch_size = 16;
    config.output_dir = dir.path;

    const ExperimentRecord rec = run_experiment(config);
    REQUIRE(rec.folds.size() == 3);
    CHECK(rec.error.empty());
    CHECK(rec.mean_mllp_f1 > 0.9);
    CHECK(rec.mean_crs_f1 > 0.9);
    CHECK(rec.mean_complexity > 0.0);
    CHECK(rec.wall_seconds > 0.0);
    for (const auto& fold : rec.folds) {
        CHECK(fold.epochs.size() == 400);
        CHECK_FALSE(fold.rules.empty());
    }

    // aggregates recomputable from per-fold entries
    double mean = 0.0;
    for (const auto& f : rec.folds) mean += f.crs_f1_pruned;
    mean /= static_cast<double>(rec.folds.size());
    CHECK(rec.mean_crs_f1 == doctest::Approx(mean));

    // same seed reproduces every per-fold number exactly
    const ExperimentRecord again = run_experiment(config);
    for (std::size_t f = 0; f < rec.folds.size(); ++f) {
        CHECK(again.folds[f].mllp_f1 == rec.folds[f].mllp_f1);
        CHECK(again.folds[f].crs_f1_pruned == rec.folds[f].crs_f1_pruned);
        CHECK(again.folds[f].complexity == rec.folds[f].complexity);
    }
}

TEST_CASE("record JSONL round trip") {
    TempDir dir("jsonl");
    ExperimentRecord rec;
    rec.config.dataset_name = "toy";
    rec.config.arch = "16";
    rec.config.use_l0 = true;
    rec.config.train.l0_lambda = 1e-3;
    rec.config.seed = 9;
    FoldResult fold;
    fold.mllp_f1 = 0.75;
    fold.crs_f1_raw = 0.5;
    fold.crs_f1_pruned = 0.5;
    fold.complexity = 12;
    EpochMetrics em;
    em.epoch = 0;
    em.mean_loss = 0.25;
    em.active_weight_fraction = 0.5;
    fold.epochs.push_back(em);
    rec.folds.push_back(fold);
    rec.mean_crs_f1 = 0.5;
    rec.mean_complexity = 12;

    const std::string path = dir.path + "/records.jsonl";
    append_record(path, rec);
    append_record(path, rec);
    const auto records = read_records(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].config.dataset_name == "toy");
    CHECK(records[0].config.arch == "16");
    CHECK(records[0].config.use_l0);
    CHECK(records[0].config.train.l0_lambda == doctest::Approx(1e-3));
    CHECK(records[1].folds.size() == 1);
    CHECK(records[1].folds[0].complexity == 12);
    CHECK(records[1].folds[0].epochs.size() == 1);
    CHECK(records[1].folds[0].epochs[0].mean_loss == doctest::Approx(0.25));

    CHECK_THROWS_AS((void)read_records(dir.path + "/nope.jsonl"), std::runtime_error);
}

TEST_CASE("grid run covers the axes and reports a pareto front") {
    TempDir dir("grid");
    std::string data_path, spec_path;
    write_toy(dir.path, data_path, spec_path);

    FeatureSpec spec = load_spec(spec_path);
    const Table table = load_table(data_path, spec);

    ExperimentConfig tmpl;
    tmpl.dataset_name = "toy";
    tmpl.folds = 2;
    tmpl.seed = 3;
    tmpl.train.epochs = 30;
    tmpl.train.batch_size = 16;

    GridAxes axes;
    axes.archs = {"4", "8"};
    axes.rb_rates = {0.0, 0.5};

    const GridOutcome outcome = grid_run(table, spec, tmpl, axes);
    REQUIRE(outcome.records.size() == 4);
    std::set<std::pair<std::string, double>> points;
    for (const auto& r : outcome.records)
        points.emplace(r.config.arch, r.config.train.rb_rate);
    CHECK(points.size() == 4);
    CHECK_FALSE(outcome.pareto.empty());
    CHECK(outcome.pareto == pareto_front(outcome.records));
}

TEST_CASE("report export writes the expected files") {
    TempDir dir("report");
    std::string data_path, spec_path;
    write_toy(dir.path, data_path, spec_path);

    ExperimentConfig config;
    config.data_path = data_path;
    config.spec_path = spec_path;
    config.dataset_name = "toy";
    config.arch = "4";
    config.folds = 2;
    config.seed = 1;
    config.train.epochs = 20;
    config.train.batch_size = 16;

    const ExperimentRecord rec = run_experiment(config);
    export_report({rec}, dir.path + "/report");

    for (const char* name : {"summary.csv", "active_weights.csv", "pareto.csv"}) {
        const std::string p = dir.path + "/report/" + name;
        std::ifstream in(p);
        REQUIRE_MESSAGE(bool(in), name);
        std::string header;
        std::getline(in, header);
        CHECK_FALSE(header.empty());
        std::string row;
        CHECK(bool(std::getline(in, row)));
    }
    bool found_rules = false;
    for (const auto& entry :
         std::filesystem::directory_iterator(dir.path + "/report"))
        if (entry.path().string().ends_with(".rules.txt")) found_rules = true;
    CHECK(found_rules);

    CHECK_THROWS_AS(export_report({}, dir.path + "/empty"), std::invalid_argument);
}
