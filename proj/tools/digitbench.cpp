// digitbench command line: bench, extract, visualize, inspect-model, synth.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "digitbench/digitbench.hpp"

namespace db = digitbench;

namespace {

struct CommonOptions {
    std::string config;
    std::string dataset;
    std::string test_dataset;
    std::string schema;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out;
    bool raw_baseline = false;
    std::vector<std::string> features;
    std::vector<std::string> classifiers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Run configuration file (key = value)");
    cmd->add_option("--dataset", o.dataset, "CSV dataset (MNIST-style rows)");
    cmd->add_option("--test-dataset", o.test_dataset, "Fixed test CSV; disables the train/test split");
    cmd->add_option("--schema", o.schema, "label_first or label_last");
    cmd->add_option("--seed", o.seed, "Seed for the split and the seeded learners");
    cmd->add_option("--jobs", o.jobs, "Parallelism degree");
    cmd->add_option("--out", o.out, "Output directory");
}

db::RunConfig resolve(const CommonOptions& o) {
    db::RunConfig cfg = db::RunConfig::default_grid();
    if (!o.config.empty()) cfg = db::load_run_config(o.config, cfg);
    std::vector<std::pair<std::string, std::string>> kv;
    if (!o.features.empty()) {
        std::string joined;
        for (const auto& f : o.features) joined += (joined.empty() ? "" : ",") + f;
        kv.emplace_back("features", joined);
    }
    if (!o.classifiers.empty()) {
        std::string joined;
        for (const auto& c : o.classifiers) joined += (joined.empty() ? "" : ",") + c;
        kv.emplace_back("classifiers", joined);
    }
    if (!kv.empty()) cfg = db::apply_config(cfg, kv);
    if (!o.dataset.empty()) cfg.dataset_path = o.dataset;
    if (!o.test_dataset.empty()) cfg.test_path = o.test_dataset;
    if (!o.schema.empty()) cfg.csv.schema = db::csv_schema_from_string(o.schema);
    if (o.seed) cfg.set_seed(*o.seed);
    if (o.jobs) cfg.jobs = std::max<std::size_t>(1, *o.jobs);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.raw_baseline) cfg.include_raw_baseline = true;
    return cfg;
}

int run_bench(const CommonOptions& o, const std::string& format, bool save_models) {
    db::RunConfig cfg = resolve(o);
    if (save_models) cfg.save_models = true;
    db::ReportFormats formats{format == "all" || format == "markdown", format == "all" || format == "csv"};
    const db::GridResult res = db::run_grid(cfg);
    const auto files = db::emit_report(res, cfg.out_dir, formats);

    std::cout << "dataset " << res.dataset << ": " << res.n_train << " train / " << res.n_test << " test\n";
    for (const auto& c : res.cells) {
        std::cout << "  " << c.feature << '+' << c.classifier << ": ";
        if (c.ok) std::cout << db::detail::pct(c.report->accuracy) << "% accuracy\n";
        else std::cout << "FAILED (" << c.error << ")\n";
    }
    if (const auto best = db::best_cell(res))
        std::cout << "best: " << res.cells[*best].feature << '+' << res.cells[*best].classifier << '\n';
    for (const auto& f : files) std::cout << "wrote " << f << '\n';
    return res.all_ok() ? 0 : 1;
}

int run_extract(const CommonOptions& o) {
    db::RunConfig cfg = resolve(o);
    const std::string dir = o.out.empty() ? "feature_cache" : o.out;
    const db::RawDataset raw = db::load_dataset(cfg, cfg.dataset_path);
    const auto images = db::preprocess_all(raw.images, cfg.preprocess, cfg.jobs);
    std::filesystem::create_directories(dir);
    for (const auto& spec : cfg.features) {
        const std::string key = db::feature_cache_key(raw.digest, cfg.preprocess, spec);
        const auto path = (std::filesystem::path(dir) / (db::hex64(db::fnv1a64(key)) + ".feat")).string();
        const db::Matrix x = db::extract_batch(images, spec, cfg.jobs);
        db::save_feature_cache(path, key, x, raw.labels);
        std::cout << db::to_string(spec.method) << ": " << x.rows() << " x " << x.cols() << " -> " << path << '\n';
    }
    return 0;
}

int run_visualize(const CommonOptions& o, const std::string& image, std::optional<std::size_t> index,
                  const std::string& method) {
    db::RunConfig cfg = resolve(o);
    db::GrayImage img;
    std::string stem;
    if (!image.empty()) {
        img = db::read_pgm(image);
        stem = std::filesystem::path(image).stem().string();
    } else {
        if (cfg.dataset_path.empty() || !index) throw db::ParameterError("visualize needs --image or --dataset with --index");
        const db::RawDataset raw = db::load_dataset(cfg, cfg.dataset_path);
        if (*index >= raw.images.size()) throw db::ParameterError("visualize: --index out of range");
        img = raw.images[*index];
        stem = "sample" + std::to_string(*index);
    }
    const db::FeatureMethod m = db::feature_method_from_string(method);
    db::FeatureSpec spec = db::FeatureSpec::defaults(m);
    for (const auto& f : cfg.features)
        if (f.method == m) spec = f;
    const auto paths = db::visualize(img, spec, cfg.preprocess, o.out.empty() ? "." : o.out, stem);
    for (const auto& p : paths) std::cout << "wrote " << p << '\n';
    return 0;
}

int run_synth(const std::string& out, std::size_t count, std::uint64_t seed) {
    const auto set = db::synthetic::digit_glyphs(count, seed);
    std::ofstream os(out);
    if (!os) throw db::IoError("cannot open " + out + " for writing");
    db::write_csv(os, set.images, set.labels);
    std::cout << "wrote " << count << " glyphs to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"digitbench: handcrafted-feature digit recognition benchmark"};
    app.require_subcommand(1);

    CommonOptions bench_opts;
    std::string format = "all";
    bool save_models = false;
    auto* bench = app.add_subcommand("bench", "Run the feature x classifier grid and write reports");
    add_common(bench, bench_opts);
    bench->add_flag("--raw-baseline", bench_opts.raw_baseline, "Add raw-pixel baseline cells");
    bench->add_option("--features", bench_opts.features, "Feature methods (hog, lbp, gabor)")->delimiter(',');
    bench->add_option("--classifiers", bench_opts.classifiers, "Classifiers (knn, svm, rf, gbdt)")->delimiter(',');
    bench->add_option("--format", format, "Report formats")->check(CLI::IsMember({"all", "markdown", "csv"}));
    bench->add_flag("--save-models", save_models, "Serialize every fitted model under <out>/models");

    CommonOptions extract_opts;
    auto* extract = app.add_subcommand("extract", "Preprocess and extract features into cache files");
    add_common(extract, extract_opts);
    extract->add_option("--features", extract_opts.features, "Feature methods")->delimiter(',');

    CommonOptions vis_opts;
    std::string image, method = "hog";
    std::optional<std::size_t> index;
    auto* vis = app.add_subcommand("visualize", "Write original, preprocessed and feature-space PGM images");
    add_common(vis, vis_opts);
    vis->add_option("--image", image, "Input PGM image");
    vis->add_option("--index", index, "Sample index within --dataset");
    vis->add_option("--method", method, "hog, lbp, gabor or raw");

    std::string model_path;
    auto* inspect = app.add_subcommand("inspect-model", "Print a summary of a serialized model");
    inspect->add_option("model", model_path, "Model file")->required();

    std::string synth_out = "synthetic_digits.csv";
    std::size_t synth_count = 2000;
    std::uint64_t synth_seed = 2024;
    auto* synth = app.add_subcommand("synth", "Generate the synthetic glyph dataset as CSV");
    synth->add_option("--out", synth_out, "Output CSV path");
    synth->add_option("--count", synth_count, "Number of samples");
    synth->add_option("--seed", synth_seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bench) return run_bench(bench_opts, format, save_models);
        if (*extract) return run_extract(extract_opts);
        if (*vis) return run_visualize(vis_opts, image, index, method);
        if (*inspect) {
            std::cout << db::summarize(db::load_model(model_path));
            return 0;
        }
        if (*synth) return run_synth(synth_out, synth_count, synth_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
