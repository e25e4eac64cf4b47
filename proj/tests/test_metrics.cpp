#include <gtest/gtest.h>

#include <random>

#include "digitbench/metrics.hpp"
#include "support/oracles.hpp"

using namespace digitbench;

namespace {

using Rows = std::vector<std::vector<std::uint64_t>>;

Rows random_rows(std::mt19937_64& rng, std::size_t n, std::uint64_t max_count) {
    std::uniform_int_distribution<std::uint64_t> d(0, max_count);
    Rows m(n, std::vector<std::uint64_t>(n));
    for (auto& row : m)
        for (auto& v : row) v = d(rng);
    m[0][0] += 1;  // never empty
    return m;
}

}  // namespace

TEST(Metrics, TwoClassWorkedExample) {
    const auto r = report(ConfusionMatrix::from_rows({{2, 1}, {0, 3}}));
    EXPECT_DOUBLE_EQ(r.accuracy, 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(r.precision[0], 1.0);
    EXPECT_DOUBLE_EQ(r.precision[1], 0.75);
    EXPECT_DOUBLE_EQ(r.recall[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.recall[1], 1.0);
    EXPECT_DOUBLE_EQ(r.f1[0], 0.8);
    EXPECT_DOUBLE_EQ(r.f1[1], 6.0 / 7.0);
    EXPECT_DOUBLE_EQ(r.macro_f1, (0.8 + 6.0 / 7.0) / 2);
}

TEST(Metrics, ConfusionCountsPairs) {
    const std::vector<Label> t{0, 0, 0, 1, 1, 1}, p{0, 0, 1, 1, 1, 1};
    EXPECT_EQ(confusion(t, p, 2), ConfusionMatrix::from_rows({{2, 1}, {0, 3}}));
    const std::vector<Label> all{0, 1, 2};
    const auto cm = confusion(all, all, 3);
    EXPECT_EQ(cm.trace(), 3u);
    EXPECT_DOUBLE_EQ(report(cm).accuracy, 1.0);
}

TEST(Metrics, ConfusionTotalsEqualPairCount) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> d(0, 9);
    std::vector<Label> t(1000), p(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        t[i] = d(rng);
        p[i] = d(rng);
    }
    const auto cm = confusion(t, p, 10);
    EXPECT_EQ(cm.total(), 1000u);
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < 1000; ++i) agree += t[i] == p[i];
    EXPECT_EQ(cm.trace(), agree);
}

TEST(Metrics, ConfusionErrors) {
    const std::vector<Label> a{0, 1}, b{0};
    EXPECT_THROW(confusion(a, b, 2), InputError);
    const std::vector<Label> out{0, 2};
    EXPECT_THROW(confusion(a, out, 2), InputError);
    const std::vector<Label> neg{0, -1};
    EXPECT_THROW(confusion(neg, a, 2), InputError);
    EXPECT_THROW(report(ConfusionMatrix(3)), InputError);
    EXPECT_THROW(report(ConfusionMatrix(0)), InputError);
    EXPECT_THROW(ConfusionMatrix::from_rows({{1, 2}, {3}}), InputError);
}

TEST(Metrics, ZeroDenominatorsGiveZero) {
    // class 1 never predicted and never true; class 2 predicted but never true
    const auto r = report(ConfusionMatrix::from_rows({{3, 0, 1}, {0, 0, 0}, {0, 0, 0}}));
    EXPECT_EQ(r.precision[1], 0.0);
    EXPECT_EQ(r.recall[1], 0.0);
    EXPECT_EQ(r.f1[1], 0.0);
    EXPECT_EQ(r.precision[2], 0.0);
    EXPECT_EQ(r.recall[2], 0.0);
    EXPECT_EQ(r.f1[2], 0.0);
    for (double v : r.f1) EXPECT_FALSE(std::isnan(v));
}

TEST(Metrics, PerfectDiagonal) {
    const auto r = report(ConfusionMatrix::from_rows({{4, 0, 0}, {0, 7, 0}, {0, 0, 1}}));
    EXPECT_EQ(r.accuracy, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(r.precision[c], 1.0);
        EXPECT_EQ(r.recall[c], 1.0);
        EXPECT_EQ(r.f1[c], 1.0);
    }
}

TEST(Metrics, MatchesDirectFormulasOnRandomMatrices) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const auto rows = random_rows(rng, 2 + static_cast<std::size_t>(t % 9), t % 4 == 0 ? 2 : 50);
        const auto r = report(ConfusionMatrix::from_rows(rows));
        const auto ref = oracle::per_class(rows);
        for (std::size_t c = 0; c < rows.size(); ++c) {
            EXPECT_NEAR(r.precision[c], ref.precision[c], 1e-15);
            EXPECT_NEAR(r.recall[c], ref.recall[c], 1e-15);
            EXPECT_NEAR(r.f1[c], ref.f1[c], 1e-15);
        }
    }
}

TEST(Metrics, ClassPermutationPermutesPerClassValues) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 9);
        const auto rows = random_rows(rng, n, 30);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Rows moved(n, std::vector<std::uint64_t>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) moved[perm[i]][perm[j]] = rows[i][j];
        const auto a = report(ConfusionMatrix::from_rows(rows)), b = report(ConfusionMatrix::from_rows(moved));
        EXPECT_EQ(a.accuracy, b.accuracy);
        for (std::size_t c = 0; c < n; ++c) {
            EXPECT_EQ(a.precision[c], b.precision[perm[c]]);
            EXPECT_EQ(a.recall[c], b.recall[perm[c]]);
            EXPECT_EQ(a.f1[c], b.f1[perm[c]]);
        }
        EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-15);
    }
}

TEST(Metrics, RangesAndAccuracyBounds) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
        const auto rows = random_rows(rng, 2 + static_cast<std::size_t>(t % 9), t % 3 == 0 ? 1 : 20);
        const auto r = report(ConfusionMatrix::from_rows(rows));
        EXPECT_GE(r.accuracy, 0.0);
        EXPECT_LE(r.accuracy, 1.0);
        double lo = 1.0, hi = 0.0;
        for (std::size_t c = 0; c < rows.size(); ++c) {
            for (double v : {r.precision[c], r.recall[c], r.f1[c]}) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
            std::uint64_t support = 0;
            for (auto v : rows[c]) support += v;
            if (support == 0) continue;
            lo = std::min(lo, r.recall[c]);
            hi = std::max(hi, r.recall[c]);
        }
        // accuracy is a support-weighted mean of per-class recall
        EXPECT_GE(r.accuracy, lo - 1e-12);
        EXPECT_LE(r.accuracy, hi + 1e-12);
    }
}

TEST(Metrics, MetadataIsCarried) {
    const auto r = report(ConfusionMatrix::from_rows({{1}}), {"set", "hog", "svm", 9});
    EXPECT_EQ(r.metadata.dataset, "set");
    EXPECT_EQ(r.metadata.feature, "hog");
    EXPECT_EQ(r.metadata.classifier, "svm");
    EXPECT_EQ(r.metadata.split_seed, 9u);
}
