#pragma once

// Model file format, version 1 (text, whitespace separated tokens):
//
//   digitbench-model 1
//   kind <knn|svm|rf|gbdt>
//   n_classes <N>
//   <kind-specific body>
//   end
//
// Reals are written as hexadecimal floating point (std::to_chars hex form,
// e.g. "1.4p+3"), so a save/load cycle reproduces every value bit for bit.
// Matrices are "matrix <rows> <cols>" followed by rows*cols reals.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "digitbench/classifier.hpp"
#include "digitbench/error.hpp"

namespace digitbench {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

class TokenWriter {
public:
    explicit TokenWriter(std::ostream& os) : os_(os) {}

    TokenWriter& word(std::string_view w) { os_ << w << ' '; return *this; }
    TokenWriter& count(std::size_t v) { os_ << v << ' '; return *this; }
    TokenWriter& integer(long long v) { os_ << v << ' '; return *this; }
    TokenWriter& real(double v) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
        os_.write(buf, res.ptr - buf);
        os_ << ' ';
        return *this;
    }
    TokenWriter& reals(std::span<const double> v) {
        count(v.size());
        for (double x : v) real(x);
        return *this;
    }
    TokenWriter& matrix(const Matrix& m) {
        word("matrix").count(m.rows()).count(m.cols());
        for (double x : m.data()) real(x);
        return newline();
    }
    TokenWriter& newline() { os_ << '\n'; return *this; }

private:
    std::ostream& os_;
};

class TokenReader {
public:
    explicit TokenReader(std::istream& is) : is_(is) {}

    std::string word() {
        std::string t;
        if (!(is_ >> t)) throw IoError("model file truncated");
        return t;
    }
    void expect(std::string_view w) {
        const std::string t = word();
        if (t != w) throw IoError("model file: expected '" + std::string(w) + "', found '" + t + "'");
    }
    std::size_t count() {
        const std::string t = word();
        std::size_t v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw IoError("model file: bad count '" + t + "'");
        return v;
    }
    long long integer() {
        const std::string t = word();
        long long v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw IoError("model file: bad integer '" + t + "'");
        return v;
    }
    double real() {
        const std::string t = word();
        double v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v, std::chars_format::hex);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw IoError("model file: bad real '" + t + "'");
        return v;
    }
    std::vector<double> reals() {
        std::vector<double> v(count());
        for (double& x : v) x = real();
        return v;
    }
    Matrix matrix() {
        expect("matrix");
        const std::size_t r = count(), c = count();
        std::vector<double> data(r * c);
        for (double& x : data) x = real();
        return Matrix(r, c, std::move(data));
    }

private:
    std::istream& is_;
};

}  // namespace detail

inline void save_model(std::ostream& os, const TrainedModel& model) {
    detail::TokenWriter w(os);
    w.word("digitbench-model").integer(kModelFormatVersion).newline();
    w.word("kind").word(to_string(model.kind())).newline();
    w.word("n_classes").count(model.n_classes()).newline();

    std::visit(
        [&w](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KnnModel>) {
                w.word("k").count(m.params.k).word("p").real(m.params.minkowski_p).newline();
                w.matrix(m.train);
                w.word("labels").count(m.labels.size());
                for (Label l : m.labels) w.integer(l);
                w.newline();
            } else if constexpr (std::is_same_v<M, SvmModel>) {
                w.word("C").real(m.params.C).word("gamma_auto").integer(m.params.gamma ? 0 : 1);
                w.word("tol").real(m.params.tol).word("max_passes").count(m.params.max_passes);
                w.word("cache_mb").count(m.params.cache_mb).word("gamma").real(m.gamma).newline();
                w.matrix(m.support_vectors);
                for (const auto& mc : m.machines) {
                    w.word("machine").real(mc.bias).integer(mc.converged ? 1 : 0).count(mc.support.size());
                    for (std::size_t i = 0; i < mc.support.size(); ++i)
                        w.count(mc.support[i]).real(mc.alpha[i]).real(mc.y[i]);
                    w.newline();
                }
            } else if constexpr (std::is_same_v<M, ForestModel>) {
                w.word("n_trees").count(m.params.n_trees).word("max_depth").count(m.params.max_depth);
                w.word("features_per_split").count(m.params.features_per_split);
                w.word("bootstrap").integer(m.params.bootstrap ? 1 : 0).word("seed").count(m.params.seed);
                w.word("n_features").count(m.n_features).newline();
                for (const auto& t : m.trees) {
                    w.word("tree").count(t.nodes.size()).newline();
                    for (const auto& n : t.nodes) {
                        w.integer(n.feature).real(n.threshold).integer(n.left).integer(n.right).reals(n.counts);
                        w.newline();
                    }
                }
            } else {
                const auto& p = m.params;
                w.word("n_rounds").count(p.n_rounds).word("max_depth").count(p.max_depth);
                w.word("learning_rate").real(p.learning_rate).word("row_subsample").real(p.row_subsample);
                w.word("col_subsample").real(p.col_subsample).word("lambda").real(p.lambda);
                w.word("seed").count(p.seed).word("n_features").count(m.n_features).newline();
                w.word("initial").reals(m.initial_scores).newline();
                w.word("train_loss").reals(m.train_loss).newline();
                w.word("rounds").count(m.rounds.size()).newline();
                for (const auto& round : m.rounds)
                    for (const auto& t : round) {
                        w.word("tree").count(t.nodes.size());
                        for (const auto& n : t.nodes)
                            w.integer(n.feature).real(n.threshold).integer(n.left).integer(n.right).real(n.value);
                        w.newline();
                    }
            }
        },
        model.state);
    w.word("end").newline();
    if (!os) throw IoError("failed to write model");
}

inline TrainedModel load_model(std::istream& is) {
    detail::TokenReader r(is);
    r.expect("digitbench-model");
    const long long version = r.integer();
    if (version != kModelFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(version));
    r.expect("kind");
    const ClassifierKind kind = classifier_kind_from_string(r.word());
    r.expect("n_classes");
    const std::size_t n_classes = r.count();

    TrainedModel out;
    switch (kind) {
        case ClassifierKind::Knn: {
            KnnModel m;
            m.n_classes = n_classes;
            r.expect("k");
            m.params.k = r.count();
            r.expect("p");
            m.params.minkowski_p = r.real();
            m.train = r.matrix();
            r.expect("labels");
            m.labels.resize(r.count());
            for (auto& l : m.labels) l = static_cast<Label>(r.integer());
            out.state = std::move(m);
            break;
        }
        case ClassifierKind::Svm: {
            SvmModel m;
            m.n_classes = n_classes;
            r.expect("C");
            m.params.C = r.real();
            r.expect("gamma_auto");
            const bool gamma_auto = r.integer() != 0;
            r.expect("tol");
            m.params.tol = r.real();
            r.expect("max_passes");
            m.params.max_passes = r.count();
            r.expect("cache_mb");
            m.params.cache_mb = r.count();
            r.expect("gamma");
            m.gamma = r.real();
            if (!gamma_auto) m.params.gamma = m.gamma;
            m.support_vectors = r.matrix();
            m.machines.resize(n_classes);
            for (auto& mc : m.machines) {
                r.expect("machine");
                mc.bias = r.real();
                mc.converged = r.integer() != 0;
                const std::size_t n = r.count();
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t s = r.count();
                    if (s >= m.support_vectors.rows()) throw IoError("model file: support index out of range");
                    mc.support.push_back(s);
                    mc.alpha.push_back(r.real());
                    mc.y.push_back(r.real());
                }
            }
            out.state = std::move(m);
            break;
        }
        case ClassifierKind::Rf: {
            ForestModel m;
            m.n_classes = n_classes;
            r.expect("n_trees");
            m.params.n_trees = r.count();
            r.expect("max_depth");
            m.params.max_depth = r.count();
            r.expect("features_per_split");
            m.params.features_per_split = r.count();
            r.expect("bootstrap");
            m.params.bootstrap = r.integer() != 0;
            r.expect("seed");
            m.params.seed = r.count();
            r.expect("n_features");
            m.n_features = r.count();
            m.trees.resize(m.params.n_trees);
            for (auto& t : m.trees) {
                r.expect("tree");
                t.nodes.resize(r.count());
                for (auto& n : t.nodes) {
                    n.feature = static_cast<int>(r.integer());
                    n.threshold = r.real();
                    n.left = static_cast<int>(r.integer());
                    n.right = static_cast<int>(r.integer());
                    n.counts = r.reals();
                }
            }
            out.state = std::move(m);
            break;
        }
        case ClassifierKind::Gbdt: {
            GbdtModel m;
            m.n_classes = n_classes;
            auto& p = m.params;
            r.expect("n_rounds");
            p.n_rounds = r.count();
            r.expect("max_depth");
            p.max_depth = r.count();
            r.expect("learning_rate");
            p.learning_rate = r.real();
            r.expect("row_subsample");
            p.row_subsample = r.real();
            r.expect("col_subsample");
            p.col_subsample = r.real();
            r.expect("lambda");
            p.lambda = r.real();
            r.expect("seed");
            p.seed = r.count();
            r.expect("n_features");
            m.n_features = r.count();
            r.expect("initial");
            m.initial_scores = r.reals();
            r.expect("train_loss");
            m.train_loss = r.reals();
            r.expect("rounds");
            m.rounds.resize(r.count());
            for (auto& round : m.rounds) {
                round.resize(n_classes);
                for (auto& t : round) {
                    r.expect("tree");
                    t.nodes.resize(r.count());
                    for (auto& n : t.nodes) {
                        n.feature = static_cast<int>(r.integer());
                        n.threshold = r.real();
                        n.left = static_cast<int>(r.integer());
                        n.right = static_cast<int>(r.integer());
                        n.value = r.real();
                    }
                }
            }
            out.state = std::move(m);
            break;
        }
    }
    r.expect("end");
    return out;
}

inline void save_model(const std::string& path, const TrainedModel& model) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    save_model(os, model);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return load_model(is);
}

/// Multi-line human-readable summary used by `inspect-model`.
inline std::string summarize(const TrainedModel& model) {
    std::ostringstream os;
    os << "kind: " << to_string(model.kind()) << "\nn_classes: " << model.n_classes() << '\n';
    std::visit(
        [&os](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KnnModel>) {
                os << "k: " << m.params.k << "\nminkowski_p: " << m.params.minkowski_p
                   << "\ntraining rows: " << m.train.rows() << "\nfeature dim: " << m.train.cols() << '\n';
            } else if constexpr (std::is_same_v<M, SvmModel>) {
                os << "C: " << m.params.C << "\ngamma: " << m.gamma << (m.params.gamma ? "" : " (auto_scale)")
                   << "\nsupport vectors (pooled): " << m.support_vectors.rows()
                   << "\nfeature dim: " << m.support_vectors.cols() << '\n';
                for (std::size_t c = 0; c < m.machines.size(); ++c)
                    os << "  class " << c << ": " << m.machines[c].support.size() << " SVs, bias "
                       << m.machines[c].bias << (m.machines[c].converged ? "" : " (not converged)") << '\n';
            } else if constexpr (std::is_same_v<M, ForestModel>) {
                std::size_t max_depth = 0, nodes = 0;
                for (const auto& t : m.trees) {
                    max_depth = std::max(max_depth, t.depth());
                    nodes += t.nodes.size();
                }
                os << "trees: " << m.trees.size() << "\nmax_depth (limit): " << m.params.max_depth
                   << "\nmax_depth (observed): " << max_depth << "\ntotal nodes: " << nodes
                   << "\nfeature dim: " << m.n_features << "\nseed: " << m.params.seed << '\n';
            } else {
                std::size_t nodes = 0;
                for (const auto& round : m.rounds)
                    for (const auto& t : round) nodes += t.nodes.size();
                os << "rounds: " << m.rounds.size() << "\nmax_depth: " << m.params.max_depth
                   << "\nlearning_rate: " << m.params.learning_rate << "\ntotal nodes: " << nodes
                   << "\nfeature dim: " << m.n_features << "\nseed: " << m.params.seed << '\n';
                if (!m.train_loss.empty())
                    os << "train log-loss: " << m.train_loss.front() << " -> " << m.train_loss.back() << '\n';
            }
        },
        model.state);
    return os.str();
}

}  // namespace digitbench
