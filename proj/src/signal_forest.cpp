#include "ehf/signal_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ehf/errors.hpp"
#include "ehf/parallel.hpp"

namespace ehf {

std::vector<std::uint8_t> label_extrema(std::span<const double> prices, double beta, ExtremumRule rule) {
    if (!(beta >= 0.0)) throw DomainError("beta must be >= 0");
    if (prices.size() < 3) throw DomainError("label_extrema needs at least 3 prices");
    std::vector<std::uint8_t> labels(prices.size(), 1);
    for (std::size_t t = 1; t + 1 < prices.size(); ++t) {
        const double prev = prices[t - 1], cur = prices[t], next = prices[t + 1];
        bool skip = false;
        if (rule == ExtremumRule::local_extremum) {
            const bool peak = (cur - prev) / prev > beta && (cur - next) / next > beta;
            const bool trough = (prev - cur) / prev > beta && (next - cur) / cur > beta;
            skip = peak || trough;
        } else {
            const bool rising = (cur - prev) / prev > beta && (next - cur) / cur > beta;
            const bool falling = (prev - cur) / prev > beta && (cur - next) / next > beta;
            skip = rising || falling;
        }
        labels[t] = skip ? 0 : 1;
    }
    return labels;
}

LabelMatrix label_paths(const PathSet& paths, double beta, ExtremumRule rule) {
    LabelMatrix out(paths.n_paths(), paths.n_steps());
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto labels = label_extrema(paths.prices(i), beta, rule);
        std::copy_n(labels.begin(), paths.n_steps(), out.row(i).begin());
    }
    return out;
}

FeatureRow feature_row(std::span<const double> prices, std::size_t day) {
    if (day < kFirstFeatureDay || day >= prices.size()) {
        throw DomainError(fmt::format("no two-return feature row for day {}", day));
    }
    return {std::log(prices[day] / prices[day - 1]), std::log(prices[day - 1] / prices[day - 2])};
}

Dataset build_dataset(const PathSet& paths, const LabelMatrix& labels) {
    if (labels.n_paths() != paths.n_paths() || labels.n_steps() != paths.n_steps()) {
        throw ShapeError("label matrix does not match path set");
    }
    Dataset ds;
    const std::size_t per_path = paths.n_steps() > kFirstFeatureDay ? paths.n_steps() - kFirstFeatureDay : 0;
    ds.features.reserve(paths.n_paths() * per_path);
    ds.labels.reserve(paths.n_paths() * per_path);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        for (std::size_t t = kFirstFeatureDay; t < paths.n_steps(); ++t) {
            ds.features.push_back(feature_row(prices, t));
            ds.labels.push_back(labels.at(i, t));
        }
    }
    return ds;
}

void ForestConfig::validate() const {
    if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (!(bootstrap_fraction > 0.0)) throw ConfigError("bootstrap_fraction must be > 0");
}

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw ShapeError("a tree needs at least one node");
}

std::uint8_t DecisionTree::predict(const FeatureRow& x) const {
    std::int32_t idx = 0;
    while (nodes_[idx].feature >= 0) {
        const auto& n = nodes_[idx];
        idx = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    const auto& leaf = nodes_[idx];
    return leaf.counts[0] > leaf.counts[1] ? 0 : 1;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes_[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::uint8_t Forest::predict(const FeatureRow& x) const {
    std::size_t zeros = 0;
    for (const auto& t : trees_) zeros += t.predict(x) == 0;
    return 2 * zeros > trees_.size() ? 0 : 1;
}

std::vector<std::uint8_t> Forest::predict(std::span<const FeatureRow> rows) const {
    std::vector<std::uint8_t> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = predict(rows[i]);
    return out;
}

namespace {

constexpr std::size_t kFeatures = 2;

double gini(double c0, double c1) {
    const double w = c0 + c1;
    if (w <= 0.0) return 0.0;
    const double p0 = c0 / w, p1 = c1 / w;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Builds one tree from per-feature index lists that are pre-sorted by value.
// Each node owns the same [lo, hi) segment in every list; splits stably
// partition the segments so children stay sorted.
class TreeBuilder {
public:
    TreeBuilder(std::span<const FeatureRow> x, std::span<const std::uint8_t> y,
                std::span<const double> weight, const ForestConfig& cfg,
                std::array<std::vector<std::uint32_t>, kFeatures> lists)
        : x_(x), y_(y), w_(weight), cfg_(cfg), lists_(std::move(lists)),
          goes_left_(x.size(), 0), scratch_(lists_[0].size()) {}

    DecisionTree build() {
        nodes_.clear();
        grow(0, lists_[0].size(), 0);
        return DecisionTree(std::move(nodes_));
    }

private:
    std::int32_t grow(std::size_t lo, std::size_t hi, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        std::array<double, 2> counts{};
        for (std::size_t k = lo; k < hi; ++k) {
            const auto s = lists_[0][k];
            counts[y_[s]] += w_[s];
        }
        nodes_[id].counts = counts;
        const double total = counts[0] + counts[1];
        const double min_leaf = static_cast<double>(cfg_.min_samples_leaf);
        if (depth >= cfg_.max_depth || counts[0] == 0.0 || counts[1] == 0.0 || total < 2.0 * min_leaf) {
            return id;
        }

        const double parent = gini(counts[0], counts[1]);
        double best_score = parent - 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (std::size_t f = 0; f < kFeatures; ++f) {
            const auto& list = lists_[f];
            std::array<double, 2> left{};
            for (std::size_t k = lo; k + 1 < hi; ++k) {
                const auto s = list[k];
                left[y_[s]] += w_[s];
                const double v = x_[s][f];
                const double v_next = x_[list[k + 1]][f];
                if (!(v < v_next)) continue;
                const double wl = left[0] + left[1];
                const double wr = total - wl;
                if (wl < min_leaf || wr < min_leaf) continue;
                const double score =
                    (wl * gini(left[0], left[1]) + wr * gini(counts[0] - left[0], counts[1] - left[1])) / total;
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    double mid = 0.5 * (v + v_next);
                    if (!(mid < v_next)) mid = v;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        std::size_t n_left = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto s = lists_[0][k];
            goes_left_[s] = x_[s][static_cast<std::size_t>(best_feature)] <= best_threshold;
            n_left += goes_left_[s];
        }
        for (auto& list : lists_) {
            std::size_t l = lo, r = 0;
            for (std::size_t k = lo; k < hi; ++k) {
                const auto s = list[k];
                if (goes_left_[s]) list[l++] = s;
                else scratch_[r++] = s;
            }
            std::copy_n(scratch_.begin(), r, list.begin() + static_cast<std::ptrdiff_t>(l));
        }

        nodes_[id].feature = best_feature;
        nodes_[id].threshold = best_threshold;
        const auto left_id = grow(lo, lo + n_left, depth + 1);
        const auto right_id = grow(lo + n_left, hi, depth + 1);
        nodes_[id].left = left_id;
        nodes_[id].right = right_id;
        return id;
    }

    std::span<const FeatureRow> x_;
    std::span<const std::uint8_t> y_;
    std::span<const double> w_;
    const ForestConfig& cfg_;
    std::array<std::vector<std::uint32_t>, kFeatures> lists_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
    std::vector<DecisionTree::Node> nodes_;
};

} // namespace

Forest fit_forest(std::span<const FeatureRow> features, std::span<const std::uint8_t> labels,
                  const ForestConfig& cfg, unsigned jobs) {
    cfg.validate();
    if (features.size() != labels.size()) throw ShapeError("feature and label counts differ");
    if (features.size() < 2) throw DomainError("fit_forest needs at least 2 samples");
    if (features.size() > std::numeric_limits<std::uint32_t>::max()) throw DomainError("too many samples");
    for (const auto& row : features) {
        if (!std::isfinite(row[0]) || !std::isfinite(row[1])) throw DomainError("non-finite feature");
    }
    for (auto l : labels) {
        if (l > 1) throw DomainError("labels must be 0 or 1");
    }

    const std::size_t n = features.size();
    std::array<std::vector<std::uint32_t>, kFeatures> order;
    for (std::size_t f = 0; f < kFeatures; ++f) {
        order[f].resize(n);
        std::iota(order[f].begin(), order[f].end(), 0u);
        std::ranges::stable_sort(order[f], [&](std::uint32_t a, std::uint32_t b) {
            return features[a][f] < features[b][f];
        });
    }

    std::vector<DecisionTree> trees(cfg.n_trees);
    parallel_for(cfg.n_trees, jobs, [&](std::size_t t) {
        std::vector<double> weight(n, 0.0);
        if (cfg.bootstrap) {
            std::mt19937_64 engine(cfg.seed ^ static_cast<std::uint64_t>(t));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            const auto draws = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(cfg.bootstrap_fraction * static_cast<double>(n))));
            for (std::size_t k = 0; k < draws; ++k) weight[pick(engine)] += 1.0;
        } else {
            std::ranges::fill(weight, 1.0);
        }
        std::array<std::vector<std::uint32_t>, kFeatures> lists;
        for (std::size_t f = 0; f < kFeatures; ++f) {
            lists[f].reserve(n);
            for (auto s : order[f]) {
                if (weight[s] > 0.0) lists[f].push_back(s);
            }
        }
        TreeBuilder builder(features, labels, weight, cfg, std::move(lists));
        trees[t] = builder.build();
    });
    return Forest(std::move(trees));
}

LabelMatrix predict_labels(const Forest& forest, const PathSet& paths) {
    if (forest.empty()) throw StateError("forest has not been fitted");
    LabelMatrix out(paths.n_paths(), paths.n_steps());
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        for (std::size_t t = kFirstFeatureDay; t < paths.n_steps(); ++t) {
            out.at(i, t) = forest.predict(feature_row(prices, t));
        }
    }
    return out;
}

ClassificationReport classification_report(std::span<const std::uint8_t> predictions,
                                           std::span<const std::uint8_t> truth) {
    if (predictions.size() != truth.size()) throw ShapeError("prediction and truth lengths differ");
    ClassificationReport r;
    r.n = truth.size();
    if (r.n == 0) return r;
    std::size_t ones = 0, correct = 0;
    for (std::size_t i = 0; i < r.n; ++i) {
        const auto t = truth[i] ? 1u : 0u;
        const auto p = predictions[i] ? 1u : 0u;
        ++r.confusion[t][p];
        ones += t;
        correct += t == p;
    }
    const double n = static_cast<double>(r.n);
    r.accuracy = static_cast<double>(correct) / n;
    r.prevalence_one = static_cast<double>(ones) / n;
    r.majority_baseline = std::max(r.prevalence_one, 1.0 - r.prevalence_one);
    return r;
}

void save_forest(const Forest& forest, const std::filesystem::path& file) {
    nlohmann::json j;
    j["format"] = "ehf-forest";
    j["version"] = 1;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& tree : forest.trees()) {
        auto nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes()) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
        }
        trees.push_back(std::move(nodes));
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing " + file.string());
}

Forest load_forest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format") != "ehf-forest" || j.at("version") != 1) throw IoError("unsupported forest file");
        std::vector<DecisionTree> trees;
        for (const auto& jt : j.at("trees")) {
            std::vector<DecisionTree::Node> nodes;
            for (const auto& jn : jt) {
                DecisionTree::Node n;
                n.feature = jn.at(0).get<std::int32_t>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<std::int32_t>();
                n.right = jn.at(3).get<std::int32_t>();
                n.counts = {jn.at(4).get<double>(), jn.at(5).get<double>()};
                nodes.push_back(n);
            }
            trees.emplace_back(std::move(nodes));
        }
        return Forest(std::move(trees));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed forest file " + file.string() + ": " + e.what());
    }
}

void write_label_csv(const PathSet& paths, const LabelMatrix& truth, const LabelMatrix& predicted,
                     const std::filesystem::path& file) {
    if (truth.n_paths() != paths.n_paths() || predicted.n_paths() != paths.n_paths()) {
        throw ShapeError("label matrices do not match path set");
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "path_id,day,r1,r2,label,predicted\n";
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        for (std::size_t t = kFirstFeatureDay; t < paths.n_steps(); ++t) {
            const auto f = feature_row(prices, t);
            out << fmt::format("{},{},{:.10g},{:.10g},{},{}\n", paths.first_path_id() + i, t, f[0], f[1],
                               truth.at(i, t), predicted.at(i, t));
        }
    }
    if (!out) throw IoError("failed writing " + file.string());
}

} // namespace ehf
