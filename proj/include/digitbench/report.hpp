#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "digitbench/bench.hpp"
#include "digitbench/error.hpp"

namespace digitbench {

struct ReportFormats {
    bool markdown = true;
    bool csv = true;
};

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pct(double v) { return fixed(100.0 * v, 2); }

/// Commas and quotes in free text (error messages) must not break CSV rows.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open " + p.string() + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + p.string());
}

}  // namespace detail

/// Highest-accuracy feature cell (baselines excluded); ties keep the earliest
/// cell, i.e. the first feature in config order.
inline std::optional<std::size_t> best_cell(const GridResult& res) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        const auto& c = res.cells[i];
        if (!c.ok || c.baseline) continue;
        if (!best || c.report->accuracy > res.cells[*best].report->accuracy) best = i;
    }
    return best;
}

/// Writes the report files into `out_dir` and returns their paths.
///   csv:      cells.csv, per_class.csv, best_models.csv, plot_data.csv, timings.csv
///   markdown: report.md
/// Everything except timings.csv is a pure function of the grid result.
inline std::vector<std::string> emit_report(const GridResult& res, const std::string& out_dir,
                                            ReportFormats formats = {}) {
    using detail::csv_field;
    using detail::fixed;
    using detail::pct;
    if (res.cells.empty()) throw InputError("emit_report: empty grid result");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    std::vector<std::string> written;
    const auto best = best_cell(res);
    const std::string seed = std::to_string(res.config.split.seed);

    if (formats.csv) {
        {
            std::ostringstream f;  // cells.csv
            f << "dataset,feature,classifier,baseline,status,accuracy,macro_precision,macro_recall,macro_f1,split_seed,error\n";
            for (const auto& c : res.cells) {
                f << csv_field(res.dataset) << ',' << c.feature << ',' << c.classifier << ',' << (c.baseline ? 1 : 0)
                  << ',' << (c.ok ? "ok" : "failed") << ',';
                if (c.ok)
                    f << fixed(c.report->accuracy, 6) << ',' << fixed(c.report->macro_precision, 6) << ','
                      << fixed(c.report->macro_recall, 6) << ',' << fixed(c.report->macro_f1, 6);
                else
                    f << ",,,";
                f << ',' << seed << ',' << csv_field(c.error) << '\n';
            }
            detail::write_text(dir / "cells.csv", f.str());
        }
        written.push_back((dir / "cells.csv").string());
        {
            std::ostringstream f;  // per_class.csv
            f << "feature,classifier,class,precision,recall,f1,support\n";
            for (const auto& c : res.cells) {
                if (!c.ok) continue;
                const auto& r = *c.report;
                for (std::size_t k = 0; k < r.precision.size(); ++k) {
                    std::uint64_t support = 0;
                    for (std::size_t p = 0; p < r.confusion.n_classes(); ++p) support += r.confusion(k, p);
                    f << c.feature << ',' << c.classifier << ',' << k << ',' << fixed(r.precision[k], 6) << ','
                      << fixed(r.recall[k], 6) << ',' << fixed(r.f1[k], 6) << ',' << support << '\n';
                }
            }
            detail::write_text(dir / "per_class.csv", f.str());
        }
        written.push_back((dir / "per_class.csv").string());
        {
            std::ostringstream f;  // best_models.csv
            f << "dataset,model,accuracy,macro_precision,macro_recall,macro_f1\n";
            if (best) {
                const auto& c = res.cells[*best];
                f << csv_field(res.dataset) << ',' << c.feature << '+' << c.classifier << ','
                  << fixed(c.report->accuracy, 6) << ',' << fixed(c.report->macro_precision, 6) << ','
                  << fixed(c.report->macro_recall, 6) << ',' << fixed(c.report->macro_f1, 6) << '\n';
            }
            detail::write_text(dir / "best_models.csv", f.str());
        }
        written.push_back((dir / "best_models.csv").string());
        {
            std::ostringstream f;  // plot_data.csv
            f << "feature,classifier,accuracy\n";
            for (const auto& c : res.cells)
                f << c.feature << ',' << c.classifier << ',' << (c.ok ? fixed(c.report->accuracy, 6) : "") << '\n';
            detail::write_text(dir / "plot_data.csv", f.str());
        }
        written.push_back((dir / "plot_data.csv").string());
        {
            std::ostringstream f;  // timings.csv
            f << "stage,seconds\n";
            for (const auto& t : res.timings) f << t.stage << ',' << fixed(t.seconds, 3) << '\n';
            detail::write_text(dir / "timings.csv", f.str());
        }
        written.push_back((dir / "timings.csv").string());
    }

    if (formats.markdown) {
        std::ostringstream f;  // report.md
        f << "# Benchmark report: " << res.dataset << "\n\n";
        f << "- dataset digest: `" << hex64(res.dataset_digest) << "`\n";
        f << "- train / test samples: " << res.n_train << " / " << res.n_test << "\n";
        f << "- classes: " << res.n_classes << "\n";
        f << "- split seed: " << seed << ", train fraction " << fixed(res.config.split.train_fraction, 2)
          << (res.config.split.stratified ? " (stratified)" : "") << "\n";
        f << "- precision, recall and F1 are macro averages over classes\n\n";

        for (const auto& tc : res.config.classifiers) {
            const std::string name(to_string(tc.kind));
            f << "## Performance of " << name << "\n\n";
            f << "Parameters: `" << describe(tc) << "`\n\n";
            f << "| Dataset | Feature | Accuracy (%) | Precision (%) | Recall (%) | F1-Score (%) |\n";
            f << "|---|---|---|---|---|---|\n";
            for (const auto& c : res.cells) {
                if (c.classifier != name) continue;
                f << "| " << res.dataset << " | " << c.feature << (c.baseline ? " (baseline)" : "") << " | ";
                if (c.ok)
                    f << pct(c.report->accuracy) << " | " << pct(c.report->macro_precision) << " | "
                      << pct(c.report->macro_recall) << " | " << pct(c.report->macro_f1) << " |\n";
                else
                    f << "failed | | | |\n";
            }
            f << '\n';
        }

        f << "## Best performing model\n\n";
        f << "| Dataset | Model | Accuracy (%) | Precision (%) | Recall (%) | F1-Score (%) |\n";
        f << "|---|---|---|---|---|---|\n";
        if (best) {
            const auto& c = res.cells[*best];
            f << "| " << res.dataset << " | " << c.feature << '+' << c.classifier << " | " << pct(c.report->accuracy)
              << " | " << pct(c.report->macro_precision) << " | " << pct(c.report->macro_recall) << " | "
              << pct(c.report->macro_f1) << " |\n";
        }
        f << '\n';

        if (res.config.include_raw_baseline) {
            f << "## Accuracy with and without feature extraction\n\n";
            f << "| Dataset | Classifier | Without features (raw pixels) (%) | With features (%) | Best feature |\n";
            f << "|---|---|---|---|---|\n";
            for (const auto& tc : res.config.classifiers) {
                const std::string name(to_string(tc.kind));
                const CellResult* raw = nullptr;
                const CellResult* top = nullptr;
                for (const auto& c : res.cells) {
                    if (c.classifier != name || !c.ok) continue;
                    if (c.baseline) raw = &c;
                    else if (!top || c.report->accuracy > top->report->accuracy) top = &c;
                }
                f << "| " << res.dataset << " | " << name << " | " << (raw ? pct(raw->report->accuracy) : "n/a")
                  << " | " << (top ? pct(top->report->accuracy) : "n/a") << " | " << (top ? top->feature : "n/a")
                  << " |\n";
            }
            f << '\n';
        }

        bool any_failed = false;
        for (const auto& c : res.cells)
            if (!c.ok) {
                if (!any_failed) f << "## Failed cells\n\n";
                any_failed = true;
                f << "- " << c.feature << '+' << c.classifier << ": " << c.error << '\n';
            }
        detail::write_text(dir / "report.md", f.str());
    }
    if (formats.markdown) written.push_back((dir / "report.md").string());
    return written;
}

}  // namespace digitbench
