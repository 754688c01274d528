#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ehf/market_sim.hpp"

namespace ehf {

/// Per-path, per-trading-day labels: 0 = skip (local extremum), 1 = trade.
class LabelMatrix {
public:
    LabelMatrix() = default;
    LabelMatrix(std::size_t n_paths, std::size_t n_steps, std::uint8_t fill = 1)
        : n_paths_(n_paths), n_steps_(n_steps), data_(n_paths * n_steps, fill) {}

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_steps() const { return n_steps_; }
    std::uint8_t at(std::size_t path, std::size_t day) const { return data_[path * n_steps_ + day]; }
    std::uint8_t& at(std::size_t path, std::size_t day) { return data_[path * n_steps_ + day]; }
    std::span<const std::uint8_t> row(std::size_t path) const {
        return std::span<const std::uint8_t>(data_).subspan(path * n_steps_, n_steps_);
    }
    std::span<std::uint8_t> row(std::size_t path) {
        return std::span<std::uint8_t>(data_).subspan(path * n_steps_, n_steps_);
    }
    std::span<const std::uint8_t> data() const { return data_; }

    bool operator==(const LabelMatrix&) const = default;

private:
    std::size_t n_paths_ = 0;
    std::size_t n_steps_ = 0;
    std::vector<std::uint8_t> data_;
};

enum class ExtremumRule {
    /// Day t is 0 when it is a beta-significant peak or trough.
    local_extremum,
    /// Literal "higher than yesterday and lower than tomorrow" reading: day t
    /// is 0 when it sits inside a beta-significant monotone run.
    trend,
};

/// Labels days 0..n of a path of n+1 prices; days 0 and n are always 1.
std::vector<std::uint8_t> label_extrema(std::span<const double> prices, double beta,
                                        ExtremumRule rule = ExtremumRule::local_extremum);

/// Ground-truth label matrix over trading days 0..n_steps-1.
LabelMatrix label_paths(const PathSet& paths, double beta,
                        ExtremumRule rule = ExtremumRule::local_extremum);

/// (log S_t/S_{t-1}, log S_{t-1}/S_{t-2})
using FeatureRow = std::array<double, 2>;

inline constexpr std::size_t kFirstFeatureDay = 2;

FeatureRow feature_row(std::span<const double> prices, std::size_t day);

struct Dataset {
    std::vector<FeatureRow> features;
    std::vector<std::uint8_t> labels;
};

/// One sample per (path, day) for days 2..n_steps-1.
Dataset build_dataset(const PathSet& paths, const LabelMatrix& labels);

struct ForestConfig {
    std::size_t n_trees = 50;
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 50;
    double bootstrap_fraction = 1.0;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;
};

class DecisionTree {
public:
    struct Node {
        std::int32_t feature = -1; ///< -1 for leaves
        double threshold = 0.0;    ///< go left when x[feature] <= threshold
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::array<double, 2> counts{}; ///< weighted class counts of training samples reaching the node

        bool operator==(const Node&) const = default;
    };

    DecisionTree() = default;
    explicit DecisionTree(std::vector<Node> nodes);

    std::uint8_t predict(const FeatureRow& x) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t depth() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<Node> nodes_;
};

class Forest {
public:
    Forest() = default;
    explicit Forest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

    /// Majority vote; ties go to 1 (trade).
    std::uint8_t predict(const FeatureRow& x) const;
    std::vector<std::uint8_t> predict(std::span<const FeatureRow> rows) const;
    const std::vector<DecisionTree>& trees() const { return trees_; }
    bool empty() const { return trees_.empty(); }

    bool operator==(const Forest&) const = default;

private:
    std::vector<DecisionTree> trees_;
};

/// Greedy Gini trees on bootstrap resamples; deterministic given cfg.seed
/// and independent of `jobs`.
Forest fit_forest(std::span<const FeatureRow> features, std::span<const std::uint8_t> labels,
                  const ForestConfig& cfg, unsigned jobs = 1);

/// Applies the forest to every path; days before kFirstFeatureDay get 1.
LabelMatrix predict_labels(const Forest& forest, const PathSet& paths);

struct ClassificationReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    /// confusion[truth][predicted]
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    double prevalence_one = 0.0;      ///< share of truth == 1
    double majority_baseline = 0.0;   ///< accuracy of always predicting the majority class
};

ClassificationReport classification_report(std::span<const std::uint8_t> predictions,
                                           std::span<const std::uint8_t> truth);

void save_forest(const Forest& forest, const std::filesystem::path& file);
Forest load_forest(const std::filesystem::path& file);

/// path_id,day,r1,r2,label,predicted for days kFirstFeatureDay..n_steps-1.
void write_label_csv(const PathSet& paths, const LabelMatrix& truth, const LabelMatrix& predicted,
                     const std::filesystem::path& file);

} // namespace ehf
