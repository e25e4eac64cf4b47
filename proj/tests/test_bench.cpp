#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "digitbench/bench.hpp"
#include "digitbench/report.hpp"
#include "digitbench/synthetic.hpp"
#include "digitbench/visualize.hpp"

using namespace digitbench;
namespace fs = std::filesystem;

namespace {

// The full grid with lighter ensembles so the suite stays fast.
RunConfig quick_grid(std::uint64_t seed = 1) {
    RunConfig cfg = RunConfig::default_grid();
    for (auto& c : cfg.classifiers) {
        c.rf.n_trees = 30;
        c.gbdt.n_rounds = 15;
        c.gbdt.max_depth = 3;
    }
    cfg.set_seed(seed);
    return cfg;
}

RawDataset squares(std::size_t n, std::uint64_t seed) {
    const auto g = synthetic::filled_vs_hollow_squares(n, seed);
    RawDataset ds;
    ds.name = "squares";
    ds.images = g.images;
    ds.labels = g.labels;
    ds.digest = 1;
    return ds;
}

RawDataset glyphs(std::size_t n, std::uint64_t seed) {
    const auto g = synthetic::digit_glyphs(n, seed);
    RawDataset ds;
    ds.name = "glyphs";
    ds.images = g.images;
    ds.labels = g.labels;
    ds.digest = 2;
    return ds;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("digitbench_bench_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Bench, GridHasTwelveCellsFeatureMajor) {
    const auto res = run_grid(quick_grid(), squares(60, 3));
    ASSERT_EQ(res.cells.size(), 12u);
    EXPECT_TRUE(res.all_ok());
    const std::vector<std::string> feats{"hog", "lbp", "gabor"}, clfs{"knn", "svm", "rf", "gbdt"};
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(res.cells[i].feature, feats[i / 4]);
        EXPECT_EQ(res.cells[i].classifier, clfs[i % 4]);
        EXPECT_FALSE(res.cells[i].baseline);
    }
    EXPECT_EQ(res.n_train + res.n_test, 60u);
    EXPECT_EQ(res.n_classes, 2u);
}

TEST(Bench, SquaresAreSeparatedByEveryCell) {
    const auto res = run_grid(quick_grid(5), squares(200, 11));
    ASSERT_TRUE(res.all_ok());
    for (const auto& c : res.cells)
        EXPECT_GE(c.report->accuracy, 0.95) << c.feature << '+' << c.classifier;
}

TEST(Bench, SameSeedGivesByteIdenticalReports) {
    const auto data = glyphs(120, 4);
    RunConfig cfg = quick_grid(9);
    const auto a = run_grid(cfg, data);
    cfg.jobs = 3;
    const auto b = run_grid(cfg, data);
    const auto da = scratch("det_a"), db = scratch("det_b");
    emit_report(a, da.string());
    emit_report(b, db.string());
    for (const char* f : {"cells.csv", "per_class.csv", "best_models.csv", "plot_data.csv"})
        EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
    // report.md differs only if jobs leaks into it, which it must not
    EXPECT_EQ(slurp(da / "report.md"), slurp(db / "report.md"));
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        EXPECT_EQ(a.cells[i].report->confusion, b.cells[i].report->confusion);
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST(Bench, ReportFilesMatchCells) {
    const auto res = run_grid(quick_grid(2), glyphs(100, 8));
    const auto dir = scratch("report");
    const auto written = emit_report(res, dir.string());
    EXPECT_EQ(written.size(), 6u);
    for (const auto& p : written) EXPECT_TRUE(fs::exists(p)) << p;

    const auto cells = lines(slurp(dir / "cells.csv"));
    ASSERT_EQ(cells.size(), res.cells.size() + 1);
    EXPECT_EQ(lines(slurp(dir / "plot_data.csv")).size(), res.cells.size() + 1);
    EXPECT_EQ(lines(slurp(dir / "per_class.csv")).size(), res.cells.size() * res.n_classes + 1);

    // best_models.csv names the argmax of the accuracy column, earliest on ties
    std::string best_model;
    double best_acc = -1;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const auto f = fields(cells[i]);
        const double acc = std::stod(f[5]);
        if (acc > best_acc) {
            best_acc = acc;
            best_model = f[1] + "+" + f[2];
        }
    }
    const auto best = lines(slurp(dir / "best_models.csv"));
    ASSERT_EQ(best.size(), 2u);
    EXPECT_EQ(fields(best[1])[1], best_model);

    const std::string md = slurp(dir / "report.md");
    for (const char* name : {"knn", "svm", "rf", "gbdt"})
        EXPECT_NE(md.find(std::string("## Performance of ") + name), std::string::npos);
    EXPECT_NE(md.find("## Best performing model"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Bench, RawBaselineAddsCellsAndTable) {
    RunConfig cfg = quick_grid(3);
    cfg.features = {FeatureSpec::defaults(FeatureMethod::Hog)};
    cfg.include_raw_baseline = true;
    const auto res = run_grid(cfg, squares(60, 1));
    ASSERT_EQ(res.cells.size(), 8u);
    for (std::size_t i = 4; i < 8; ++i) {
        EXPECT_TRUE(res.cells[i].baseline);
        EXPECT_EQ(res.cells[i].feature, "raw");
    }
    const auto best = best_cell(res);
    ASSERT_TRUE(best.has_value());
    EXPECT_FALSE(res.cells[*best].baseline);
    const auto dir = scratch("baseline");
    emit_report(res, dir.string(), {true, false});
    EXPECT_NE(slurp(dir / "report.md").find("Without features"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "cells.csv"));
    fs::remove_all(dir);
}

TEST(Bench, FailedCellIsRecordedAndRunContinues) {
    RunConfig cfg = quick_grid(4);
    cfg.features = {FeatureSpec::defaults(FeatureMethod::Hog)};
    cfg.classifiers = {TrainConfig::defaults(ClassifierKind::Knn)};
    cfg.classifiers[0].knn.k = 1000;  // more neighbours than training samples
    cfg.classifiers.push_back(TrainConfig::defaults(ClassifierKind::Svm));
    const auto res = run_grid(cfg, squares(40, 2));
    ASSERT_EQ(res.cells.size(), 2u);
    EXPECT_FALSE(res.cells[0].ok);
    EXPECT_FALSE(res.cells[0].error.empty());
    EXPECT_TRUE(res.cells[1].ok);
    EXPECT_FALSE(res.all_ok());
    const auto dir = scratch("failed");
    emit_report(res, dir.string());
    const auto cells = lines(slurp(dir / "cells.csv"));
    EXPECT_NE(cells[1].find("failed"), std::string::npos);
    EXPECT_NE(slurp(dir / "report.md").find("## Failed cells"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Bench, FixedTestSetSkipsSplit) {
    RunConfig cfg = quick_grid();
    cfg.features = {FeatureSpec::defaults(FeatureMethod::Hog)};
    cfg.classifiers = {TrainConfig::defaults(ClassifierKind::Knn)};
    const auto train = squares(40, 1), test = squares(10, 2);
    const auto res = run_grid(cfg, train, &test);
    EXPECT_EQ(res.n_train, 40u);
    EXPECT_EQ(res.n_test, 10u);
    EXPECT_TRUE(res.all_ok());
}

TEST(Bench, FeatureCacheIsReused) {
    RunConfig cfg = quick_grid();
    cfg.features = {FeatureSpec::defaults(FeatureMethod::Lbp)};
    cfg.classifiers = {TrainConfig::defaults(ClassifierKind::Knn)};
    const auto dir = scratch("cache");
    cfg.cache_dir = dir.string();
    const auto data = squares(40, 6);
    const auto a = run_grid(cfg, data);
    ASSERT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
    const auto b = run_grid(cfg, data);
    EXPECT_EQ(a.cells[0].report->confusion, b.cells[0].report->confusion);
    fs::remove_all(dir);
}

TEST(Bench, SaveModelsWritesOnePerCell) {
    RunConfig cfg = quick_grid();
    cfg.features = {FeatureSpec::defaults(FeatureMethod::Gabor)};
    const auto dir = scratch("models");
    cfg.out_dir = dir.string();
    cfg.save_models = true;
    const auto res = run_grid(cfg, squares(40, 7));
    for (const char* name : {"gabor_knn", "gabor_svm", "gabor_rf", "gabor_gbdt"})
        EXPECT_TRUE(fs::exists(dir / "models" / (std::string(name) + ".model"))) << name;
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, DefaultsAreTheFullGrid) {
    const RunConfig c = RunConfig::default_grid();
    EXPECT_EQ(c.features.size(), 3u);
    EXPECT_EQ(c.classifiers.size(), 4u);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeysAndLists) {
    const auto c = parse_run_config(
        "# comment\n"
        "dataset.path = data/x.csv\n"
        "features = lbp, hog\n"
        "classifiers = svm\n"
        "svm.c = 2.5\n"
        "svm.gamma = 0.125\n"
        "lbp.output = histogram\n"
        "split.seed = 17\n"
        "run.jobs = 2\n");
    EXPECT_EQ(c.dataset_path, "data/x.csv");
    ASSERT_EQ(c.features.size(), 2u);
    EXPECT_EQ(c.features[0].method, FeatureMethod::Lbp);
    EXPECT_EQ(std::get<LbpParams>(c.features[0].params).output, LbpOutput::Histogram);
    EXPECT_EQ(c.features[1].method, FeatureMethod::Hog);
    ASSERT_EQ(c.classifiers.size(), 1u);
    EXPECT_EQ(c.classifiers[0].svm.C, 2.5);
    EXPECT_EQ(c.classifiers[0].svm.gamma, 0.125);
    EXPECT_EQ(c.split.seed, 17u);
    EXPECT_EQ(c.jobs, 2u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_run_config("svm.kernel = linear\n"), ParameterError);
    EXPECT_THROW(parse_run_config("knn.k = three\n"), ParameterError);
    EXPECT_THROW(parse_run_config("features = sift\n"), ParameterError);
    EXPECT_THROW(parse_run_config("no equals sign\n"), ParseError);
    RunConfig empty = RunConfig::default_grid();
    empty.classifiers.clear();
    EXPECT_THROW(empty.validate(), ParameterError);
}

TEST(Config, SetSeedReachesSeededLearners) {
    RunConfig c = RunConfig::default_grid();
    c.set_seed(99);
    EXPECT_EQ(c.split.seed, 99u);
    for (const auto& t : c.classifiers) {
        EXPECT_EQ(t.rf.seed, 99u);
        EXPECT_EQ(t.gbdt.seed, 99u);
    }
}

// ---------------------------------------------------------------------------
// Visualize

TEST(Visualize, WritesThreeImages) {
    const auto dir = scratch("vis");
    const auto g = synthetic::digit_glyphs(1, 3);
    for (auto m : {FeatureMethod::Hog, FeatureMethod::Lbp, FeatureMethod::Gabor}) {
        const auto paths = visualize(g.images[0], FeatureSpec::defaults(m), {}, dir.string(), "d");
        ASSERT_EQ(paths.size(), 3u);
        for (const auto& p : paths) EXPECT_NO_THROW(read_pgm(p)) << p;
    }
    fs::remove_all(dir);
}

TEST(Visualize, ConstantImageRendersFlatMaps) {
    const GrayImage flat(28, 28, 0.5);
    const GrayImage lbp = render_feature(flat, FeatureSpec::defaults(FeatureMethod::Lbp));
    // cropped to the pixels whose circle fits; every code is 1023, so all white
    ASSERT_EQ(lbp.height(), 22u);
    ASSERT_EQ(lbp.width(), 22u);
    for (double v : lbp.pixels()) EXPECT_EQ(v, 1.0);
    const GrayImage hog = render_feature(flat, FeatureSpec::defaults(FeatureMethod::Hog));
    EXPECT_EQ(hog.total(), 0.0);
}
