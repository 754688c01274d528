#include "ehf/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "ehf/errors.hpp"
#include "ehf/parallel.hpp"
#include "ehf/trade_mask.hpp"
#include "ehf/training.hpp"

namespace ehf {

namespace {

constexpr double kAlphaEps = 1e-12;

bool in_range(double alpha, double lo, double hi) { return alpha >= lo - kAlphaEps && alpha <= hi + kAlphaEps; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::string_view to_string(SweepMode mode) { return mode == SweepMode::retrain ? "retrain" : "fast"; }

SweepMode parse_sweep_mode(std::string_view name) {
    if (name == "retrain") return SweepMode::retrain;
    if (name == "fast") return SweepMode::fast;
    throw ConfigError(fmt::format("unknown sweep mode '{}'", name));
}

std::vector<double> alpha_grid(double lo, double hi, std::size_t count) {
    if (count == 0) throw ConfigError("alpha grid needs at least one point");
    if (!(lo >= 0.0) || !(hi >= lo) || hi > 1.0) throw ConfigError("alpha grid bounds must satisfy 0 <= lo <= hi <= 1");
    if (count == 1) return {lo};
    std::vector<double> grid(count);
    for (std::size_t k = 0; k < count; ++k) {
        grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    }
    grid.back() = hi;
    return grid;
}

void SweepConfig::validate() const {
    if (alphas.empty()) throw ConfigError("sweep needs at least one alpha");
    if (!std::ranges::is_sorted(alphas)) throw ConfigError("alpha grid must be sorted ascending");
    if (alphas.front() < 0.0 || alphas.back() > 1.0) throw ConfigError("alpha grid must lie within [0, 1]");
}

std::vector<FrontierPoint> sweep_alpha(const PathSet& test_paths, const ContractSpec& contract,
                                       const CostModel& cost, const SweepConfig& cfg, const SweepAssets& assets) {
    cfg.validate();
    if (assets.mode == SweepMode::fast && !assets.shared_policy) {
        throw ConfigError("fast sweep needs a trained policy");
    }
    if (assets.mode == SweepMode::retrain && !assets.policy_for_alpha) {
        throw ConfigError("retrain sweep needs a per-alpha policy provider");
    }
    if (assets.train_paths != nullptr && !assets.train_paths->disjoint_from(test_paths)) {
        throw ConfigError("training and test path sets overlap");
    }
    std::vector<FrontierPoint> points(cfg.alphas.size());
    // Retraining is the expensive part, so alphas run as parallel jobs there;
    // fast sweeps parallelise across paths inside each evaluation instead.
    const unsigned outer = assets.mode == SweepMode::retrain ? cfg.jobs : 1;
    const unsigned inner = assets.mode == SweepMode::retrain ? 1 : cfg.jobs;
    parallel_for(cfg.alphas.size(), outer, [&](std::size_t k) {
        const double alpha = cfg.alphas[k];
        const auto policy = assets.mode == SweepMode::fast ? assets.shared_policy : assets.policy_for_alpha(alpha);
        if (!policy) throw ConfigError(fmt::format("no policy available for alpha {}", alpha));
        TradeMask mask = compute_trade_mask(test_paths, alpha);
        if (assets.labels != nullptr && assets.gate_with_labels) mask = combine_mask(mask, *assets.labels);
        const auto eval = evaluate_policy(test_paths, *policy, mask, contract, cost, assets.labels, inner);
        FrontierPoint p;
        p.alpha = alpha;
        p.mean_loss = eval.summary.mean;
        p.std_loss = eval.summary.std;
        p.avg_trades = eval.summary.avg_trades;
        p.tag = cfg.tag;
        p.tag.mode = assets.mode;
        p.tag.n_test_paths = test_paths.n_paths();
        points[k] = p;
    });
    return points;
}

std::vector<FrontierPoint> pareto_filter(std::span<const FrontierPoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
        if (points[a].std_loss != points[b].std_loss) return points[a].std_loss < points[b].std_loss;
        return points[a].mean_loss > points[b].mean_loss;
    });
    std::vector<std::uint8_t> keep(points.size(), 0);
    double best_lower = -std::numeric_limits<double>::infinity();
    std::size_t g = 0;
    while (g < order.size()) {
        // group of equal std; first element carries the group's best mean
        const double group_std = points[order[g]].std_loss;
        const double group_best = points[order[g]].mean_loss;
        std::size_t end = g;
        while (end < order.size() && points[order[end]].std_loss == group_std) {
            const auto& p = points[order[end]];
            if (p.mean_loss == group_best && group_best > best_lower) keep[order[end]] = 1;
            ++end;
        }
        best_lower = std::max(best_lower, group_best);
        g = end;
    }
    std::vector<FrontierPoint> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (keep[i]) out.push_back(points[i]);
    }
    return out;
}

RangeSummary summarize_range(std::span<const FrontierPoint> points, double alpha_lo, double alpha_hi) {
    RangeSummary s;
    for (const auto& p : points) {
        if (!in_range(p.alpha, alpha_lo, alpha_hi)) continue;
        s.avg_mean += p.mean_loss;
        s.avg_std += p.std_loss;
        ++s.count;
    }
    if (s.count == 0) throw DomainError(fmt::format("no frontier points with alpha in [{}, {}]", alpha_lo, alpha_hi));
    s.avg_mean /= static_cast<double>(s.count);
    s.avg_std /= static_cast<double>(s.count);
    return s;
}

Comparison compare_configs(std::span<const FrontierPoint> base, std::span<const FrontierPoint> variant,
                           double alpha_lo, double alpha_hi) {
    auto grid = [&](std::span<const FrontierPoint> pts) {
        std::vector<double> a;
        for (const auto& p : pts) {
            if (in_range(p.alpha, alpha_lo, alpha_hi)) a.push_back(p.alpha);
        }
        std::ranges::sort(a);
        return a;
    };
    const auto ga = grid(base), gb = grid(variant);
    if (ga.size() != gb.size() ||
        !std::equal(ga.begin(), ga.end(), gb.begin(), [](double x, double y) { return std::abs(x - y) <= 1e-9; })) {
        throw ConfigError("compared frontiers use different alpha grids");
    }
    Comparison c;
    c.base = summarize_range(base, alpha_lo, alpha_hi);
    c.variant = summarize_range(variant, alpha_lo, alpha_hi);
    c.mean_improvement_pct = (c.variant.avg_mean - c.base.avg_mean) / std::abs(c.base.avg_mean) * 100.0;
    c.std_improvement_pct = (c.base.avg_std - c.variant.avg_std) / c.base.avg_std * 100.0;
    return c;
}

std::string format_comparison_table(const std::string& base_name, const std::string& variant_name,
                                    std::span<const ComparisonColumn> columns) {
    const std::size_t name_w = std::max({base_name.size(), variant_name.size(), std::size_t{11}}) + 2;
    constexpr std::size_t cell_w = 12;
    std::string out;
    out += fmt::format("{:<{}}|", "", name_w);
    out += fmt::format("{:^{}}|", "Mean of Losses", cell_w * columns.size());
    out += fmt::format("{:^{}}\n", "Std of Losses", cell_w * columns.size());
    out += fmt::format("{:<{}}|", "", name_w);
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& c : columns) out += fmt::format("{:>{}}", c.label, cell_w);
        out += pass == 0 ? "|" : "\n";
    }
    auto row = [&](const std::string& name, auto&& mean_of, auto&& std_of, const char* spec) {
        out += fmt::format("{:<{}}|", name, name_w);
        for (const auto& c : columns) out += fmt::format(fmt::runtime(spec), mean_of(c.comparison), cell_w);
        out += "|";
        for (const auto& c : columns) out += fmt::format(fmt::runtime(spec), std_of(c.comparison), cell_w);
        out += "\n";
    };
    row(base_name, [](const Comparison& c) { return c.base.avg_mean; },
        [](const Comparison& c) { return c.base.avg_std; }, "{:>{}.3f}");
    row(variant_name, [](const Comparison& c) { return c.variant.avg_mean; },
        [](const Comparison& c) { return c.variant.avg_std; }, "{:>{}.3f}");
    out += fmt::format("{:<{}}|", "Improvement", name_w);
    for (const auto& c : columns) out += fmt::format("{:>{}}", fmt::format("{:.2f}%", c.comparison.mean_improvement_pct), cell_w);
    out += "|";
    for (const auto& c : columns) out += fmt::format("{:>{}}", fmt::format("{:.2f}%", c.comparison.std_improvement_pct), cell_w);
    out += "\n";
    return out;
}

std::string format_comparison_csv(const std::string& base_name, const std::string& variant_name,
                                  std::span<const ComparisonColumn> columns) {
    std::string out = "column,base,variant,base_avg_mean,variant_avg_mean,mean_improvement_pct,"
                      "base_avg_std,variant_avg_std,std_improvement_pct,n_points\n";
    for (const auto& c : columns) {
        const auto& k = c.comparison;
        out += fmt::format("{},{},{},{:.6f},{:.6f},{:.4f},{:.6f},{:.6f},{:.4f},{}\n", c.label, base_name, variant_name,
                           k.base.avg_mean, k.variant.avg_mean, k.mean_improvement_pct, k.base.avg_std,
                           k.variant.avg_std, k.std_improvement_pct, k.base.count);
    }
    return out;
}

void write_frontier_csv(std::span<const FrontierPoint> points, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << kFrontierCsvHeader << '\n';
    for (const auto& p : points) {
        const auto& t = p.tag;
        out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{}\n", t.scenario, t.policy,
                           t.rf ? 1 : 0, t.cost_rate, t.lambda, p.alpha, p.mean_loss, p.std_loss, p.avg_trades,
                           t.n_test_paths, to_string(t.mode), t.seed);
    }
    if (!out) throw IoError("failed writing " + file.string());
}

std::vector<FrontierPoint> read_frontier_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != kFrontierCsvHeader) throw IoError("unexpected frontier CSV header in " + file.string());
    std::vector<FrontierPoint> points;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 12) throw IoError(fmt::format("{}:{}: expected 12 fields", file.string(), lineno));
        try {
            FrontierPoint p;
            p.tag.scenario = f[0];
            p.tag.policy = f[1];
            p.tag.rf = f[2] == "1";
            p.tag.cost_rate = std::stod(f[3]);
            p.tag.lambda = std::stod(f[4]);
            p.alpha = std::stod(f[5]);
            p.mean_loss = std::stod(f[6]);
            p.std_loss = std::stod(f[7]);
            p.avg_trades = std::stod(f[8]);
            p.tag.n_test_paths = std::stoull(f[9]);
            p.tag.mode = parse_sweep_mode(f[10]);
            p.tag.seed = std::stoull(f[11]);
            points.push_back(std::move(p));
        } catch (const std::logic_error& e) {
            throw IoError(fmt::format("{}:{}: {}", file.string(), lineno, e.what()));
        }
    }
    return points;
}

} // namespace ehf
