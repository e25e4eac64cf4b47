#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "digitbench/classifier.hpp"
#include "digitbench/datasets.hpp"
#include "digitbench/error.hpp"
#include "digitbench/features.hpp"
#include "digitbench/imaging.hpp"
#include "digitbench/metrics.hpp"
#include "digitbench/model_io.hpp"
#include "digitbench/parallel.hpp"

namespace digitbench {

struct RunConfig {
    std::string dataset_path;
    std::string test_path;  // optional: a fixed test file instead of a split
    std::string dataset_name;
    CsvOptions csv;
    PreprocessConfig preprocess;
    std::vector<FeatureSpec> features;
    std::vector<TrainConfig> classifiers;
    SplitSpec split;
    std::string out_dir = "out";
    std::string cache_dir;
    std::size_t jobs = 1;
    bool include_raw_baseline = false;
    bool save_models = false;

    /// The grid the benchmark runs when nothing else is configured:
    /// HOG, LBP and Gabor against KNN, SVM, RF and GBDT.
    static RunConfig default_grid() {
        RunConfig c;
        for (auto m : {FeatureMethod::Hog, FeatureMethod::Lbp, FeatureMethod::Gabor})
            c.features.push_back(FeatureSpec::defaults(m));
        for (auto k : {ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Rf, ClassifierKind::Gbdt})
            c.classifiers.push_back(TrainConfig::defaults(k));
        return c;
    }

    /// Seeds the split and every seeded learner.
    void set_seed(std::uint64_t seed) {
        split.seed = seed;
        for (auto& c : classifiers) {
            c.rf.seed = seed;
            c.gbdt.seed = seed;
        }
    }

    void validate() const {
        if (features.empty()) throw ParameterError("config: feature list is empty");
        if (classifiers.empty()) throw ParameterError("config: classifier list is empty");
        preprocess.validate();
        split.validate();
        for (const auto& c : classifiers) c.validate();
    }
};

// ---------------------------------------------------------------------------
// Config file
//
// One "key = value" per line, '#' starts a comment, keys are dotted
// "section.name". Lists are comma separated. See README for every key.

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ParameterError("config: " + key + " expects a number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ParameterError("config: " + key + " expects a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_flag(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParameterError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace detail

/// Key/value pairs in file order; later duplicates override earlier ones.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        std::string key = detail::trim(std::string_view(t).substr(0, eq));
        std::string value = detail::trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

/// Applies key/value settings on top of `base`.
inline RunConfig apply_config(RunConfig cfg, const std::vector<std::pair<std::string, std::string>>& kv) {
    using namespace detail;
    HogParams hog;
    LbpParams lbp;
    GaborParams gab;
    std::optional<std::vector<std::string>> feature_names, classifier_names;
    TrainConfig knn = TrainConfig::defaults(ClassifierKind::Knn), svm = TrainConfig::defaults(ClassifierKind::Svm),
                rf = TrainConfig::defaults(ClassifierKind::Rf), gbdt = TrainConfig::defaults(ClassifierKind::Gbdt);
    // Start from the blocks already in cfg so overlays keep earlier settings.
    for (const auto& f : cfg.features) {
        if (auto* p = std::get_if<HogParams>(&f.params)) hog = *p;
        if (auto* p = std::get_if<LbpParams>(&f.params)) lbp = *p;
        if (auto* p = std::get_if<GaborParams>(&f.params)) gab = *p;
    }
    for (const auto& c : cfg.classifiers) {
        switch (c.kind) {
            case ClassifierKind::Knn: knn = c; break;
            case ClassifierKind::Svm: svm = c; break;
            case ClassifierKind::Rf: rf = c; break;
            case ClassifierKind::Gbdt: gbdt = c; break;
        }
    }

    for (const auto& [key, v] : kv) {
        if (key == "dataset.path") cfg.dataset_path = v;
        else if (key == "dataset.test_path") cfg.test_path = v;
        else if (key == "dataset.name") cfg.dataset_name = v;
        else if (key == "dataset.schema") cfg.csv.schema = csv_schema_from_string(v);
        else if (key == "dataset.side") cfg.csv.side = parse_count(key, v);
        else if (key == "dataset.skip_header") cfg.csv.skip_header = parse_flag(key, v);
        else if (key == "preprocess.target_side") cfg.preprocess.target_side = parse_count(key, v);
        else if (key == "preprocess.gaussian_sigma") cfg.preprocess.gaussian_sigma = parse_real(key, v);
        else if (key == "preprocess.deskew") cfg.preprocess.deskew_enabled = parse_flag(key, v);
        else if (key == "features") feature_names = split_list(v);
        else if (key == "hog.cell_side") hog.cell_side = parse_count(key, v);
        else if (key == "hog.block_side") hog.block_side = parse_count(key, v);
        else if (key == "hog.n_bins") hog.n_bins = parse_count(key, v);
        else if (key == "hog.block_stride") hog.block_stride = parse_count(key, v);
        else if (key == "hog.signed") hog.signed_gradients = parse_flag(key, v);
        else if (key == "lbp.neighbors") lbp.neighbors = parse_count(key, v);
        else if (key == "lbp.radius") lbp.radius = parse_count(key, v);
        else if (key == "lbp.output") {
            if (v == "flat_image") lbp.output = LbpOutput::FlatImage;
            else if (v == "histogram") lbp.output = LbpOutput::Histogram;
            else throw ParameterError("config: lbp.output must be flat_image or histogram");
        }
        else if (key == "gabor.frequency") gab.frequency = parse_real(key, v);
        else if (key == "gabor.theta") gab.theta = parse_real(key, v);
        else if (key == "gabor.bandwidth") gab.bandwidth = parse_real(key, v);
        else if (key == "gabor.n_stds") gab.n_stds = parse_real(key, v);
        else if (key == "classifiers") classifier_names = split_list(v);
        else if (key == "knn.k") knn.knn.k = parse_count(key, v);
        else if (key == "knn.p") knn.knn.minkowski_p = parse_real(key, v);
        else if (key == "svm.c") svm.svm.C = parse_real(key, v);
        else if (key == "svm.gamma") {
            if (v == "auto_scale") svm.svm.gamma.reset();
            else svm.svm.gamma = parse_real(key, v);
        }
        else if (key == "svm.tol") svm.svm.tol = parse_real(key, v);
        else if (key == "svm.max_passes") svm.svm.max_passes = parse_count(key, v);
        else if (key == "svm.cache_mb") svm.svm.cache_mb = parse_count(key, v);
        else if (key == "rf.n_trees") rf.rf.n_trees = parse_count(key, v);
        else if (key == "rf.max_depth") rf.rf.max_depth = parse_count(key, v);
        else if (key == "rf.features_per_split") rf.rf.features_per_split = v == "sqrt" ? 0 : parse_count(key, v);
        else if (key == "rf.bootstrap") rf.rf.bootstrap = parse_flag(key, v);
        else if (key == "rf.seed") rf.rf.seed = parse_count(key, v);
        else if (key == "gbdt.n_rounds") gbdt.gbdt.n_rounds = parse_count(key, v);
        else if (key == "gbdt.max_depth") gbdt.gbdt.max_depth = parse_count(key, v);
        else if (key == "gbdt.learning_rate") gbdt.gbdt.learning_rate = parse_real(key, v);
        else if (key == "gbdt.row_subsample") gbdt.gbdt.row_subsample = parse_real(key, v);
        else if (key == "gbdt.col_subsample") gbdt.gbdt.col_subsample = parse_real(key, v);
        else if (key == "gbdt.lambda") gbdt.gbdt.lambda = parse_real(key, v);
        else if (key == "gbdt.seed") gbdt.gbdt.seed = parse_count(key, v);
        else if (key == "split.train_fraction") cfg.split.train_fraction = parse_real(key, v);
        else if (key == "split.seed") cfg.split.seed = parse_count(key, v);
        else if (key == "split.stratified") cfg.split.stratified = parse_flag(key, v);
        else if (key == "run.out") cfg.out_dir = v;
        else if (key == "run.jobs") cfg.jobs = parse_count(key, v);
        else if (key == "run.raw_baseline") cfg.include_raw_baseline = parse_flag(key, v);
        else if (key == "run.cache_dir") cfg.cache_dir = v;
        else if (key == "run.save_models") cfg.save_models = parse_flag(key, v);
        else throw ParameterError("config: unknown key '" + key + "'");
    }

    std::vector<std::string> fnames, cnames;
    if (feature_names) fnames = *feature_names;
    else for (const auto& f : cfg.features) fnames.emplace_back(to_string(f.method));
    if (classifier_names) cnames = *classifier_names;
    else for (const auto& c : cfg.classifiers) cnames.emplace_back(to_string(c.kind));

    cfg.features.clear();
    for (const auto& name : fnames) {
        switch (feature_method_from_string(name)) {
            case FeatureMethod::Hog: cfg.features.push_back({FeatureMethod::Hog, hog}); break;
            case FeatureMethod::Lbp: cfg.features.push_back({FeatureMethod::Lbp, lbp}); break;
            case FeatureMethod::Gabor: cfg.features.push_back({FeatureMethod::Gabor, gab}); break;
            case FeatureMethod::Raw: cfg.features.push_back(FeatureSpec::defaults(FeatureMethod::Raw)); break;
        }
    }
    cfg.classifiers.clear();
    for (const auto& name : cnames) {
        switch (classifier_kind_from_string(name)) {
            case ClassifierKind::Knn: cfg.classifiers.push_back(knn); break;
            case ClassifierKind::Svm: cfg.classifiers.push_back(svm); break;
            case ClassifierKind::Rf: cfg.classifiers.push_back(rf); break;
            case ClassifierKind::Gbdt: cfg.classifiers.push_back(gbdt); break;
        }
    }
    return cfg;
}

inline RunConfig parse_run_config(std::string_view text, RunConfig base = RunConfig::default_grid()) {
    return apply_config(std::move(base), parse_key_values(text));
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = RunConfig::default_grid()) {
    return parse_run_config(read_file(path), std::move(base));
}

// ---------------------------------------------------------------------------
// Grid execution

struct CellResult {
    std::string feature;
    std::string classifier;
    bool baseline = false;  // raw-pixel cell
    bool ok = false;
    std::string error;
    std::optional<EvaluationReport> report;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct GridResult {
    std::string dataset;
    std::uint64_t dataset_digest = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_classes = 0;
    RunConfig config;
    std::vector<CellResult> cells;  // feature-major, config order; baselines last
    std::vector<StageTiming> timings;

    bool all_ok() const {
        return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
    }
};

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Runs preprocess -> extract -> fit -> evaluate for every (feature,
/// classifier) cell. With `test` empty the data is split per cfg.split;
/// otherwise `data` is the training set and `test` the evaluation set.
/// Cell failures are recorded, never thrown.
inline GridResult run_grid(const RunConfig& cfg, const RawDataset& data, const RawDataset* test = nullptr) {
    cfg.validate();
    GridResult res;
    res.config = cfg;
    res.dataset = cfg.dataset_name.empty() ? data.name : cfg.dataset_name;
    res.dataset_digest = data.digest;

    detail::Stopwatch sw;
    std::vector<GrayImage> images = preprocess_all(data.images, cfg.preprocess, cfg.jobs);
    std::vector<Label> labels = data.labels;
    SplitIndices idx;
    if (test) {
        const auto test_images = preprocess_all(test->images, cfg.preprocess, cfg.jobs);
        idx.train.resize(images.size());
        std::iota(idx.train.begin(), idx.train.end(), std::size_t{0});
        for (std::size_t i = 0; i < test_images.size(); ++i) idx.test.push_back(images.size() + i);
        images.insert(images.end(), test_images.begin(), test_images.end());
        labels.insert(labels.end(), test->labels.begin(), test->labels.end());
    } else {
        idx = split_indices(labels, cfg.split);
    }
    res.timings.push_back({"preprocess", sw.seconds()});
    res.n_train = idx.train.size();
    res.n_test = idx.test.size();
    res.n_classes = infer_n_classes(labels);

    std::vector<FeatureSpec> specs = cfg.features;
    std::vector<bool> is_baseline(specs.size(), false);
    if (cfg.include_raw_baseline) {
        specs.push_back(FeatureSpec::defaults(FeatureMethod::Raw));
        is_baseline.push_back(true);
    }

    struct Extracted {
        std::optional<LabeledDataset> train, test;
        std::string error;
    };
    std::vector<Extracted> extracted(specs.size());
    const std::uint64_t digest = test ? fnv1a64(hex64(data.digest) + hex64(test->digest)) : data.digest;
    for (std::size_t f = 0; f < specs.size(); ++f) {
        detail::Stopwatch fsw;
        try {
            LabeledDataset full;
            const std::string key = feature_cache_key(digest, cfg.preprocess, specs[f]);
            std::string cache_path;
            if (!cfg.cache_dir.empty()) {
                cache_path = (std::filesystem::path(cfg.cache_dir) / (hex64(fnv1a64(key)) + ".feat")).string();
                if (auto cached = load_feature_cache(cache_path, key); cached && cached->labels == labels) full = std::move(*cached);
            }
            if (full.features.empty()) {
                full.features = extract_batch(images, specs[f], cfg.jobs);
                full.labels = labels;
                if (!cache_path.empty()) {
                    std::filesystem::create_directories(cfg.cache_dir);
                    save_feature_cache(cache_path, key, full.features, full.labels);
                }
            }
            full.source_name = res.dataset;
            full.source_digest = digest;
            full.feature_method = std::string(to_string(specs[f].method));
            extracted[f].train = full.subset(idx.train);
            extracted[f].test = full.subset(idx.test);
        } catch (const std::exception& e) {
            extracted[f].error = e.what();
        }
        res.timings.push_back({"extract:" + std::string(to_string(specs[f].method)), fsw.seconds()});
    }

    for (std::size_t f = 0; f < specs.size(); ++f)
        for (const auto& c : cfg.classifiers) {
            CellResult cell;
            cell.feature = std::string(to_string(specs[f].method));
            cell.classifier = std::string(to_string(c.kind));
            cell.baseline = is_baseline[f];
            res.cells.push_back(std::move(cell));
        }

    const std::size_t n_cls = cfg.classifiers.size();
    std::vector<std::optional<TrainedModel>> models(res.cells.size());
    parallel_for(res.cells.size(), cfg.jobs, [&](std::size_t i) {
        CellResult& cell = res.cells[i];
        const Extracted& ex = extracted[i / n_cls];
        const TrainConfig& tc = cfg.classifiers[i % n_cls];
        if (!ex.error.empty()) {
            cell.error = "extract: " + ex.error;
            return;
        }
        try {
            detail::Stopwatch fit_sw;
            TrainedModel model = fit(tc, ex.train->features, ex.train->labels, res.n_classes);
            cell.fit_seconds = fit_sw.seconds();
            detail::Stopwatch pred_sw;
            const auto preds = predict(model, ex.test->features);
            cell.predict_seconds = pred_sw.seconds();
            const auto cm = confusion(ex.test->labels, labels_of(preds), res.n_classes);
            cell.report = report(cm, {res.dataset, cell.feature, cell.classifier, cfg.split.seed});
            cell.ok = true;
            if (cfg.save_models) models[i] = std::move(model);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    if (cfg.save_models) {
        const auto dir = std::filesystem::path(cfg.out_dir) / "models";
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < models.size(); ++i)
            if (models[i])
                save_model((dir / (res.cells[i].feature + "_" + res.cells[i].classifier + ".model")).string(), *models[i]);
    }
    for (const auto& cell : res.cells)
        res.timings.push_back({"fit:" + cell.feature + "+" + cell.classifier, cell.fit_seconds});
    return res;
}

inline RawDataset load_dataset(const RunConfig& cfg, const std::string& path) {
    if (path.empty()) throw ParameterError("no dataset path configured");
    return load_csv(path, cfg.csv);
}

inline GridResult run_grid(const RunConfig& cfg) {
    const RawDataset data = load_dataset(cfg, cfg.dataset_path);
    if (!cfg.test_path.empty()) {
        const RawDataset test = load_dataset(cfg, cfg.test_path);
        return run_grid(cfg, data, &test);
    }
    return run_grid(cfg, data);
}

}  // namespace digitbench
