#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/features.hpp"
#include "digitbench/image.hpp"
#include "digitbench/imaging.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench {

enum class CsvSchema { LabelFirst, LabelLast };

inline CsvSchema csv_schema_from_string(std::string_view s) {
    if (s == "label_first") return CsvSchema::LabelFirst;
    if (s == "label_last") return CsvSchema::LabelLast;
    throw ParameterError("unknown CSV schema '" + std::string(s) + "' (expected label_first or label_last)");
}

inline std::string_view to_string(CsvSchema s) { return s == CsvSchema::LabelFirst ? "label_first" : "label_last"; }

/// 64-bit FNV-1a; identifies dataset contents in reports and cache keys.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    auto res = std::to_chars(buf, buf + 16, v, 16);
    std::string s(buf, res.ptr);
    return std::string(16 - s.size(), '0') + s;
}

/// Images and labels as read from disk, before preprocessing.
struct RawDataset {
    std::string name;
    std::uint64_t digest = 0;
    std::vector<GrayImage> images;
    std::vector<Label> labels;
};

struct CsvOptions {
    CsvSchema schema = CsvSchema::LabelFirst;
    std::size_t side = 28;
    bool skip_header = false;
};

/// Parses MNIST-style rows of side*side pixels plus one label in [0, 9].
/// Pixels are treated as 8-bit (divided by 255) when any value in the file
/// exceeds 1, otherwise as [0, 1] intensities. Row numbers in errors are
/// 1-based file lines.
inline RawDataset parse_csv(std::string_view text, const CsvOptions& opt, std::string name = "inline") {
    if (opt.side == 0) throw ParameterError("load_csv: side must be >= 1");
    const std::size_t n_pixels = opt.side * opt.side;
    RawDataset ds;
    ds.name = std::move(name);
    ds.digest = fnv1a64(text);

    std::vector<std::vector<double>> rows;
    double max_value = 0.0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<double> fields;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (line_no == 1 && opt.skip_header) continue;

        fields.clear();
        std::size_t fpos = 0;
        while (true) {
            std::size_t comma = line.find(',', fpos);
            std::string_view f = line.substr(fpos, comma == std::string_view::npos ? std::string_view::npos : comma - fpos);
            while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
            while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
            double v = 0.0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size())
                throw ParseError(line_no, "non-numeric field '" + std::string(f) + "'");
            fields.push_back(v);
            if (comma == std::string_view::npos) break;
            fpos = comma + 1;
        }
        if (fields.size() != n_pixels + 1)
            throw ParseError(line_no, "expected " + std::to_string(n_pixels + 1) + " fields, found " +
                                          std::to_string(fields.size()));

        const double label = opt.schema == CsvSchema::LabelFirst ? fields.front() : fields.back();
        if (label != std::floor(label) || label < 0 || label > 9)
            throw ParseError(line_no, "label must be an integer in [0, 9]");
        ds.labels.push_back(static_cast<Label>(label));

        std::vector<double> px(fields.begin() + (opt.schema == CsvSchema::LabelFirst ? 1 : 0),
                               fields.end() - (opt.schema == CsvSchema::LabelFirst ? 0 : 1));
        for (double v : px) {
            if (v < 0 || v > 255) throw ParseError(line_no, "pixel value outside [0, 255]");
            max_value = std::max(max_value, v);
        }
        rows.push_back(std::move(px));
    }

    const double scale = max_value > 1.0 ? 1.0 / 255.0 : 1.0;
    ds.images.reserve(rows.size());
    for (auto& px : rows) {
        for (double& v : px) v = std::min(1.0, v * scale);
        ds.images.emplace_back(opt.side, opt.side, std::move(px));
    }
    return ds;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RawDataset load_csv(const std::string& path, const CsvOptions& opt) {
    const std::string text = read_file(path);
    std::string name = path;
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    return parse_csv(text, opt, name);
}

/// Writes images as 8-bit rows (label first by default).
inline void write_csv(std::ostream& os, const std::vector<GrayImage>& images, std::span<const Label> labels,
                      CsvSchema schema = CsvSchema::LabelFirst) {
    if (images.size() != labels.size()) throw ShapeError("write_csv: images and labels differ in length");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (schema == CsvSchema::LabelFirst) os << labels[i];
        bool first = schema != CsvSchema::LabelFirst;
        for (double v : images[i].pixels()) {
            if (!first) os << ',';
            first = false;
            os << std::lround(v * 255.0);
        }
        if (schema == CsvSchema::LabelLast) os << ',' << labels[i];
        os << '\n';
    }
}

/// resize(target_side) -> gaussian_blur(sigma) -> deskew (when enabled), per
/// image, output order matching input order.
inline std::vector<GrayImage> preprocess_all(const std::vector<GrayImage>& images, const PreprocessConfig& cfg,
                                             std::size_t jobs = 1) {
    cfg.validate();
    std::vector<GrayImage> out(images.size());
    parallel_for(images.size(), jobs, [&](std::size_t i) {
        try {
            out[i] = preprocess(images[i], cfg);
        } catch (const Error& e) {
            throw DimensionError("preprocess image " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

/// Feature matrix with labels and provenance.
struct LabeledDataset {
    Matrix features;
    std::vector<Label> labels;
    std::string source_name;
    std::uint64_t source_digest = 0;
    std::string feature_method = "raw";

    std::size_t size() const noexcept { return labels.size(); }

    void validate() const {
        if (features.rows() != labels.size()) throw ShapeError("dataset: feature rows and labels differ in length");
    }

    LabeledDataset subset(std::span<const std::size_t> idx) const {
        LabeledDataset out;
        out.features = features.select_rows(idx);
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) out.labels.push_back(labels[i]);
        out.source_name = source_name;
        out.source_digest = source_digest;
        out.feature_method = feature_method;
        return out;
    }
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const {
        if (!(train_fraction > 0 && train_fraction < 1)) throw ParameterError("split: train_fraction must lie in (0, 1)");
    }
};

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

/// Seeded partition of 0..n-1. Stratified: each class (ascending label
/// order) is shuffled from one shared RNG and floor(f * n_c + 0.5) of it goes
/// to train, clamped so both sides keep at least one sample.
inline SplitIndices split_indices(std::span<const Label> labels, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = labels.size();
    std::mt19937_64 rng(spec.seed);
    SplitIndices out;
    auto take = [&](std::vector<std::size_t>& pool, std::size_t n_train) {
        std::shuffle(pool.begin(), pool.end(), rng);
        out.train.insert(out.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
    };
    auto train_count = [&spec](std::size_t m) {
        return static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(m) + 0.5));
    };

    if (spec.stratified) {
        const std::size_t k = infer_n_classes(labels);
        std::vector<std::vector<std::size_t>> by_class(k);
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
        for (std::size_t c = 0; c < k; ++c) {
            auto& pool = by_class[c];
            if (pool.empty()) continue;
            if (pool.size() < 2)
                throw SplitError("split: class " + std::to_string(c) + " has fewer than 2 samples");
            take(pool, std::clamp<std::size_t>(train_count(pool.size()), 1, pool.size() - 1));
        }
    } else {
        if (n < 2) throw SplitError("split: need at least 2 samples");
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        take(pool, std::clamp<std::size_t>(train_count(n), 1, n - 1));
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, const SplitSpec& spec) {
    ds.validate();
    const SplitIndices idx = split_indices(ds.labels, spec);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

// ---------------------------------------------------------------------------
// Feature cache
//
// Binary layout, version 1 (host byte order):
//   8 bytes  magic "DBFEAT01"
//   u32      format version (1)
//   u32      key length, then key bytes
//   u64      rows, u64 cols
//   rows x i32 labels
//   rows*cols x f64 features, row-major
// The key names the dataset digest, preprocessing and extractor parameters.

inline std::string feature_spec_key(const FeatureSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << to_string(spec.method);
    std::visit(
        [&os](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, HogParams>)
                os << "(cell=" << p.cell_side << ",block=" << p.block_side << ",bins=" << p.n_bins
                   << ",stride=" << p.block_stride << ",signed=" << p.signed_gradients << ')';
            else if constexpr (std::is_same_v<P, LbpParams>)
                os << "(P=" << p.neighbors << ",R=" << p.radius
                   << ",mode=" << (p.output == LbpOutput::FlatImage ? "flat_image" : "histogram") << ')';
            else if constexpr (std::is_same_v<P, GaborParams>)
                os << "(f=" << p.frequency << ",theta=" << p.theta << ",b=" << p.bandwidth << ",nstds=" << p.n_stds
                   << ')';
        },
        spec.params);
    return os.str();
}

inline std::string preprocess_key(const PreprocessConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "side=" << cfg.target_side << ",sigma=" << cfg.gaussian_sigma << ",deskew=" << cfg.deskew_enabled;
    return os.str();
}

inline std::string feature_cache_key(std::uint64_t digest, const PreprocessConfig& pre, const FeatureSpec& spec) {
    return "digest=" + hex64(digest) + ";pre=" + preprocess_key(pre) + ";feature=" + feature_spec_key(spec);
}

inline constexpr char kFeatureCacheMagic[8] = {'D', 'B', 'F', 'E', 'A', 'T', '0', '1'};

inline void save_feature_cache(const std::string& path, const std::string& key, const Matrix& x,
                               std::span<const Label> labels) {
    if (x.rows() != labels.size()) throw ShapeError("feature cache: rows and labels differ in length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    auto put = [&out](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); };
    put(kFeatureCacheMagic, 8);
    const std::uint32_t version = 1, klen = static_cast<std::uint32_t>(key.size());
    put(&version, 4);
    put(&klen, 4);
    put(key.data(), key.size());
    const std::uint64_t rows = x.rows(), cols = x.cols();
    put(&rows, 8);
    put(&cols, 8);
    for (Label l : labels) {
        const auto v = static_cast<std::int32_t>(l);
        put(&v, 4);
    }
    put(x.data().data(), x.data().size() * sizeof(double));
    if (!out) throw IoError("write failed: " + path);
}

/// Returns nothing when the file is missing or was written for another key.
inline std::optional<LabeledDataset> load_feature_cache(const std::string& path, const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    auto get = [&in, &path](void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw IoError("truncated feature cache: " + path);
    };
    char magic[8];
    get(magic, 8);
    if (std::memcmp(magic, kFeatureCacheMagic, 8) != 0) throw IoError("not a feature cache file: " + path);
    std::uint32_t version = 0, klen = 0;
    get(&version, 4);
    if (version != 1) throw IoError("unsupported feature cache version in " + path);
    get(&klen, 4);
    std::string stored(klen, '\0');
    get(stored.data(), klen);
    if (stored != key) return std::nullopt;
    std::uint64_t rows = 0, cols = 0;
    get(&rows, 8);
    get(&cols, 8);
    LabeledDataset ds;
    ds.labels.resize(rows);
    for (auto& l : ds.labels) {
        std::int32_t v = 0;
        get(&v, 4);
        l = v;
    }
    std::vector<double> data(rows * cols);
    get(data.data(), data.size() * sizeof(double));
    ds.features = Matrix(rows, cols, std::move(data));
    return ds;
}

}  // namespace digitbench
