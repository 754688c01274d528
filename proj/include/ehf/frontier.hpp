#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ehf/contract.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/policy.hpp"
#include "ehf/signal_forest.hpp"

namespace ehf {

enum class SweepMode { retrain, fast };

std::string_view to_string(SweepMode mode);
SweepMode parse_sweep_mode(std::string_view name);

/// Identifies the configuration a frontier point belongs to.
struct FrontierTag {
    std::string scenario;
    std::string policy;
    bool rf = false;
    double cost_rate = 0.0;
    double lambda = 0.0;
    std::size_t n_test_paths = 0;
    SweepMode mode = SweepMode::fast;
    std::uint64_t seed = 0;

    bool operator==(const FrontierTag&) const = default;
};

struct FrontierPoint {
    double alpha = 0.0;
    double mean_loss = 0.0;
    double std_loss = 0.0;
    double avg_trades = 0.0;
    FrontierTag tag;
};

/// `count` evenly spaced values over [lo, hi], endpoints included.
std::vector<double> alpha_grid(double lo, double hi, std::size_t count);

struct SweepConfig {
    std::vector<double> alphas = alpha_grid(0.0, 0.2, 100);
    FrontierTag tag;
    unsigned jobs = 1;

    void validate() const;
};

/// Policies for a sweep: one shared policy re-masked per alpha (fast), or a
/// provider that returns a policy trained for the given alpha (retrain).
struct SweepAssets {
    SweepMode mode = SweepMode::fast;
    std::shared_ptr<const HedgePolicy> shared_policy;
    std::function<std::shared_ptr<const HedgePolicy>(double alpha)> policy_for_alpha;
    /// Classifier labels for the test paths; they feed any label feature and,
    /// with `gate_with_labels`, also gate the masks.
    const LabelMatrix* labels = nullptr;
    bool gate_with_labels = true;
    /// Optional id range of the training paths; the sweep refuses overlap.
    const PathSet* train_paths = nullptr;
};

std::vector<FrontierPoint> sweep_alpha(const PathSet& test_paths, const ContractSpec& contract,
                                       const CostModel& cost, const SweepConfig& cfg, const SweepAssets& assets);

/// p survives iff no q has std(q) <= std(p) and mean(q) >= mean(p) with one
/// of them strict. Survivors keep their input order.
std::vector<FrontierPoint> pareto_filter(std::span<const FrontierPoint> points);

struct RangeSummary {
    double avg_mean = 0.0;
    double avg_std = 0.0;
    std::size_t count = 0;
};

/// Averages mean and std over points with alpha in [lo, hi].
RangeSummary summarize_range(std::span<const FrontierPoint> points, double alpha_lo, double alpha_hi);

struct Comparison {
    RangeSummary base;
    RangeSummary variant;
    /// (variant_mean - base_mean) / |base_mean| in percent; positive = smaller losses
    double mean_improvement_pct = 0.0;
    /// (base_std - variant_std) / base_std in percent; positive = less risk
    double std_improvement_pct = 0.0;
};

/// Throws ConfigError when the two alpha grids differ inside the range.
Comparison compare_configs(std::span<const FrontierPoint> base, std::span<const FrontierPoint> variant,
                           double alpha_lo, double alpha_hi);

/// One column group of a comparison table (e.g. one cost rate).
struct ComparisonColumn {
    std::string label;
    Comparison comparison;
};

/// Aligned text table shaped like the improvement tables: rows base,
/// variant, improvement; mean and std column groups.
std::string format_comparison_table(const std::string& base_name, const std::string& variant_name,
                                    std::span<const ComparisonColumn> columns);

/// Machine-readable twin of format_comparison_table.
std::string format_comparison_csv(const std::string& base_name, const std::string& variant_name,
                                  std::span<const ComparisonColumn> columns);

inline constexpr const char* kFrontierCsvHeader =
    "scenario,policy,rf,cost_rate,lambda,alpha,mean_loss,std_loss,avg_trades,n_test_paths,mode,seed";

void write_frontier_csv(std::span<const FrontierPoint> points, const std::filesystem::path& file);
std::vector<FrontierPoint> read_frontier_csv(const std::filesystem::path& file);

} // namespace ehf
