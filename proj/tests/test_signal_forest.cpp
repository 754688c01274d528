#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "ehf/errors.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/signal_forest.hpp"
#include "support/episodes.hpp"

using namespace ehf;

namespace {

double gini(double c0, double c1) {
    const double w = c0 + c1;
    return w == 0 ? 0.0 : 1.0 - (c0 / w) * (c0 / w) - (c1 / w) * (c1 / w);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 1e300;
};

// Exhaustive search over every midpoint between distinct sorted values.
Split brute_force_split(const std::vector<FeatureRow>& x, const std::vector<std::uint8_t>& y) {
    Split best;
    for (int f = 0; f < 2; ++f) {
        std::vector<double> values;
        for (const auto& r : x) values.push_back(r[f]);
        std::ranges::sort(values);
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            if (values[k] == values[k + 1]) continue;
            const double thr = 0.5 * (values[k] + values[k + 1]);
            double l[2] = {0, 0}, r[2] = {0, 0};
            for (std::size_t i = 0; i < x.size(); ++i) (x[i][f] <= thr ? l : r)[y[i]] += 1;
            const double n = static_cast<double>(x.size());
            const double score = ((l[0] + l[1]) * gini(l[0], l[1]) + (r[0] + r[1]) * gini(r[0], r[1])) / n;
            if (score < best.score) best = {f, thr, score};
        }
    }
    return best;
}

PathSet heston_paths(std::size_t n, std::uint64_t seed, std::size_t first = 0) {
    SimConfig cfg;
    cfg.n_paths = n;
    cfg.seed = seed;
    auto all = simulate_heston(HestonParams::high_vol(), cfg);
    return first == 0 ? all : all.slice(first, n - first);
}

} // namespace

TEST(Labels, MonotonePathIsAllOnes) {
    std::vector<double> p;
    for (int t = 0; t <= 30; ++t) p.push_back(100.0 * std::pow(1.2, t));
    for (auto l : label_extrema(p, 0.05)) EXPECT_EQ(l, 1);
}

TEST(Labels, SymmetricVee) {
    const auto l = label_extrema(std::vector<double>{100, 90, 100}, 0.05);
    EXPECT_EQ(l, (std::vector<std::uint8_t>{1, 0, 1}));
    EXPECT_THROW(label_extrema(std::vector<double>{100, 90}, 0.05), DomainError);
    EXPECT_THROW(label_extrema(std::vector<double>{100, 90, 100}, -0.1), DomainError);
}

TEST(Labels, GatedEpisodePeaks) {
    const auto prices = fixtures::printed_prices(fixtures::kGatedEpisode);
    const auto l = label_extrema(prices, 0.05);
    for (std::size_t t = 0; t < l.size(); ++t) {
        const bool gated = std::ranges::find(fixtures::kGatedDays, t) != fixtures::kGatedDays.end();
        EXPECT_EQ(l[t], gated ? 0 : 1) << "day " << t;
    }
}

TEST(Labels, TrendRuleMarksMonotoneRuns) {
    const auto l = label_extrema(std::vector<double>{100, 110, 121, 110}, 0.05, ExtremumRule::trend);
    EXPECT_EQ(l, (std::vector<std::uint8_t>{1, 0, 1, 1}));
}

TEST(Labels, DependOnlyOnNeighbours) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.85, 1.15);
    const auto paths = heston_paths(30, 8);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const std::vector<double> p(paths.prices(i).begin(), paths.prices(i).end());
        const auto base = label_extrema(p, 0.05);
        for (std::size_t t = 1; t + 1 < p.size(); ++t) {
            auto q = p;
            for (std::size_t s = 0; s < q.size(); ++s) {
                if (s + 1 < t || s > t + 1) q[s] *= u(rng);
            }
            EXPECT_EQ(label_extrema(q, 0.05)[t], base[t]);
        }
    }
}

TEST(Labels, ScaleInvariant) {
    const auto paths = heston_paths(50, 9);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        std::vector<double> p(paths.prices(i).begin(), paths.prices(i).end());
        const auto base = label_extrema(p, 0.05);
        for (double c : {0.25, 4.0}) {
            auto q = p;
            // powers of two keep every relative change bit-identical
            for (double& x : q) x *= c;
            EXPECT_EQ(label_extrema(q, 0.05), base);
        }
    }
}

TEST(Features, LogRatiosAndTranslationInvariance) {
    const std::vector<double> p{100, 110, 99};
    const auto r = feature_row(p, 2);
    EXPECT_DOUBLE_EQ(r[0], std::log(99.0 / 110.0));
    EXPECT_DOUBLE_EQ(r[1], std::log(110.0 / 100.0));
    const std::vector<double> q{200, 220, 198};
    EXPECT_NEAR(feature_row(q, 2)[0], r[0], 1e-15);
    EXPECT_THROW(feature_row(p, 1), DomainError);
    const auto paths = heston_paths(4, 1);
    const auto ds = build_dataset(paths, label_paths(paths, 0.05));
    EXPECT_EQ(ds.features.size(), 4u * 28u);
}

TEST(Forest, SingleClassInput) {
    std::vector<FeatureRow> x{{0.1, 0.2}, {0.3, -0.1}, {-0.2, 0.0}, {0.05, 0.4}};
    for (std::uint8_t c : {0, 1}) {
        std::vector<std::uint8_t> y(4, c);
        const auto forest = fit_forest(x, y, ForestConfig{});
        for (const auto& t : forest.trees()) EXPECT_EQ(t.nodes().size(), 1u);
        EXPECT_EQ(forest.predict(FeatureRow{5.0, -5.0}), c);
    }
}

TEST(Forest, SeparableSetIsLearnedExactly) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.05);
    std::vector<FeatureRow> x;
    std::vector<std::uint8_t> y;
    for (int k = 0; k < 2000; ++k) {
        const FeatureRow r{n(rng), n(rng)};
        x.push_back(r);
        y.push_back(r[0] > 0 ? 1 : 0);
    }
    ForestConfig cfg;
    cfg.n_trees = 15;
    cfg.min_samples_leaf = 1;
    const auto pred = fit_forest(x, y, cfg).predict(x);
    EXPECT_EQ(classification_report(pred, y).accuracy, 1.0);
}

TEST(Forest, StumpMatchesExhaustiveGini) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<FeatureRow> x;
        std::vector<std::uint8_t> y;
        const std::size_t size = 4 + trial;
        for (std::size_t k = 0; k < size; ++k) {
            x.push_back({n(rng), n(rng)});
            y.push_back(static_cast<std::uint8_t>((x.back()[0] + 0.7 * x.back()[1] + 0.5 * n(rng)) > 0));
        }
        if (std::ranges::count(y, 1) == 0 || std::ranges::count(y, 0) == 0) continue;
        ForestConfig cfg;
        cfg.n_trees = 1;
        cfg.max_depth = 1;
        cfg.min_samples_leaf = 1;
        cfg.bootstrap = false;
        const auto tree = fit_forest(x, y, cfg).trees().front();
        const auto want = brute_force_split(x, y);
        const double ones = static_cast<double>(std::ranges::count(y, 1));
        if (want.score >= gini(static_cast<double>(size) - ones, ones) - 1e-12) continue;
        ASSERT_EQ(tree.nodes().front().feature, want.feature) << "trial " << trial;
        EXPECT_DOUBLE_EQ(tree.nodes().front().threshold, want.threshold);
        EXPECT_EQ(tree.depth(), 1u);
    }
}

TEST(Forest, IdenticalLeafTreesVoteOne) {
    DecisionTree::Node leaf;
    leaf.counts = {0.0, 3.0};
    const Forest forest(std::vector<DecisionTree>(5, DecisionTree({leaf})));
    const auto paths = heston_paths(5, 3);
    const auto labels = predict_labels(forest, paths);
    for (auto v : labels.data()) EXPECT_EQ(v, 1);
}

TEST(Forest, TiesGoToTrade) {
    DecisionTree::Node zero, one;
    zero.counts = {2.0, 0.0};
    one.counts = {0.0, 2.0};
    const Forest forest({DecisionTree({zero}), DecisionTree({one})});
    EXPECT_EQ(forest.predict(FeatureRow{0.0, 0.0}), 1);
}

TEST(Forest, BeatsMajorityBaselineOnHeldOutData) {
    const auto all = heston_paths(3000, 31);
    const auto train = all.slice(0, 2000);
    const auto test = all.slice(2000, 1000);
    const auto train_ds = build_dataset(train, label_paths(train, 0.05));
    const auto test_ds = build_dataset(test, label_paths(test, 0.05));
    ForestConfig cfg;
    cfg.n_trees = 20;
    const auto forest = fit_forest(train_ds.features, train_ds.labels, cfg, 4);
    const auto fit_report = classification_report(forest.predict(train_ds.features), train_ds.labels);
    EXPECT_GE(fit_report.accuracy, fit_report.majority_baseline);
    const auto report = classification_report(forest.predict(test_ds.features), test_ds.labels);
    EXPECT_GE(report.accuracy, report.majority_baseline);
}

TEST(Forest, DeterministicAndIndependentOfJobs) {
    const auto paths = heston_paths(300, 4);
    const auto ds = build_dataset(paths, label_paths(paths, 0.05));
    ForestConfig cfg;
    cfg.n_trees = 8;
    cfg.seed = 12;
    const auto a = fit_forest(ds.features, ds.labels, cfg, 1);
    EXPECT_TRUE(a == fit_forest(ds.features, ds.labels, cfg, 3));
    cfg.seed = 13;
    EXPECT_FALSE(a == fit_forest(ds.features, ds.labels, cfg, 1));
    EXPECT_EQ(a.predict(ds.features), a.predict(ds.features));
}

TEST(Forest, TreesRespectConfig) {
    const auto paths = heston_paths(400, 6);
    const auto ds = build_dataset(paths, label_paths(paths, 0.05));
    ForestConfig cfg;
    cfg.n_trees = 4;
    cfg.max_depth = 5;
    cfg.min_samples_leaf = 7;
    const auto forest = fit_forest(ds.features, ds.labels, cfg);
    for (const auto& tree : forest.trees()) {
        EXPECT_LE(tree.depth(), 5u);
        for (const auto& node : tree.nodes()) {
            EXPECT_GE(node.counts[0] + node.counts[1], 7.0);
            if (node.feature >= 0) EXPECT_TRUE(std::isfinite(node.threshold));
        }
    }
}

TEST(Forest, InputValidation) {
    std::vector<FeatureRow> x{{0.0, 0.0}};
    std::vector<std::uint8_t> y{1};
    EXPECT_THROW(fit_forest(x, y, ForestConfig{}), DomainError);
    x.push_back({1.0, 1.0});
    EXPECT_THROW(fit_forest(x, y, ForestConfig{}), ShapeError);
    y.push_back(2);
    EXPECT_THROW(fit_forest(x, y, ForestConfig{}), DomainError);
    ForestConfig bad;
    bad.n_trees = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_THROW(predict_labels(Forest{}, heston_paths(2, 1)), StateError);
}

TEST(Forest, SaveLoadRoundTrip) {
    const auto paths = heston_paths(200, 4);
    const auto ds = build_dataset(paths, label_paths(paths, 0.05));
    ForestConfig cfg;
    cfg.n_trees = 3;
    const auto forest = fit_forest(ds.features, ds.labels, cfg);
    const auto file = std::filesystem::temp_directory_path() / "ehf_test_forest.json";
    save_forest(forest, file);
    EXPECT_TRUE(load_forest(file) == forest);
    {
        std::ofstream out(file);
        out << "{\"format\":\"other\"}";
    }
    EXPECT_THROW(load_forest(file), IoError);
    std::filesystem::remove(file);
}

TEST(Report, Counts) {
    const std::vector<std::uint8_t> truth{1, 1, 1, 0, 0, 1, 1, 1};
    auto r = classification_report(truth, truth);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.confusion[0][1], 0u);
    EXPECT_EQ(r.confusion[1][0], 0u);
    const std::vector<std::uint8_t> ones(8, 1);
    r = classification_report(ones, truth);
    EXPECT_DOUBLE_EQ(r.accuracy, r.prevalence_one);
    EXPECT_DOUBLE_EQ(r.majority_baseline, 0.75);
    EXPECT_EQ(r.confusion[0][1], 2u);
}

TEST(Report, ChanceLevelOnRandomLabels) {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> a(20000), b(20000);
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = coin(rng);
        b[k] = coin(rng);
    }
    EXPECT_NEAR(classification_report(a, b).accuracy, 0.5, 4.0 * 0.5 / std::sqrt(20000.0));
}

TEST(Report, LabelCsvSchema) {
    const auto paths = heston_paths(3, 2);
    const auto truth = label_paths(paths, 0.05);
    const auto file = std::filesystem::temp_directory_path() / "ehf_test_labels.csv";
    write_label_csv(paths, truth, LabelMatrix(3, 30, 1), file);
    std::ifstream in(file, std::ios::binary);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "path_id,day,r1,r2,label,predicted");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 3u * 28u);
    std::filesystem::remove(file);
}
