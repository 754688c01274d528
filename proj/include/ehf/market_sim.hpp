#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ehf {

inline constexpr double kDaysPerYear = 365.0;

/// Geometric Brownian motion dS = mu S dt + sigma S dB.
struct GBMParams {
    double mu = 0.0;
    double sigma = 0.0;

    void validate() const;
};

/// Heston stochastic volatility parameters. The Feller condition is not
/// required; the simulator truncates negative variance.
struct HestonParams {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 1.0;
    double mu = 0.0;
    double sigma_v = 0.0;
    double rho = 0.0;

    void validate() const;

    static HestonParams low_vol() { return {0.4, 0.4, 1.0, 0.01, 4.0, -0.7}; }
    static HestonParams high_vol() { return {0.8, 0.8, 1.0, 0.01, 4.0, -0.7}; }
};

struct SimConfig {
    double s0 = 100.0;
    std::size_t n_steps = 30;
    double dt = 1.0 / kDaysPerYear;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;

    void validate() const;
    double maturity() const { return dt * static_cast<double>(n_steps); }
};

/// Row-major matrix of simulated prices, one row of n_steps+1 values per path.
/// Optionally carries the (truncated, non-negative) Heston variances.
///
/// `first_path_id` is the global index of row 0; slices keep it so that
/// train/test disjointness can be checked after splitting.
class PathSet {
public:
    PathSet() = default;
    PathSet(std::size_t n_paths, std::size_t n_steps, double s0, std::uint64_t seed,
            bool with_variances, std::size_t first_path_id = 0);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t row_length() const { return n_steps_ + 1; }
    double s0() const { return s0_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t first_path_id() const { return first_path_id_; }
    bool has_variances() const { return !variances_.empty(); }

    std::span<const double> prices(std::size_t path) const;
    std::span<double> prices(std::size_t path);
    std::span<const double> variances(std::size_t path) const;
    std::span<double> variances(std::size_t path);
    double price(std::size_t path, std::size_t day) const { return prices_[path * row_length() + day]; }

    std::span<const double> all_prices() const { return prices_; }
    std::span<const double> all_variances() const { return variances_; }

    /// Contiguous sub-range of paths, copied.
    PathSet slice(std::size_t first, std::size_t count) const;

    /// True when the global path-id ranges of the two sets do not overlap.
    bool disjoint_from(const PathSet& other) const;

    bool operator==(const PathSet&) const = default;

private:
    std::size_t n_paths_ = 0;
    std::size_t n_steps_ = 0;
    double s0_ = 0.0;
    std::uint64_t seed_ = 0;
    std::size_t first_path_id_ = 0;
    std::vector<double> prices_;
    std::vector<double> variances_;
};

/// Per-path generator seed: master seed XOR path index.
inline std::uint64_t path_seed(std::uint64_t master, std::size_t path) {
    return master ^ static_cast<std::uint64_t>(path);
}

PathSet simulate_gbm(const GBMParams& params, const SimConfig& cfg, unsigned jobs = 1);

/// Full-truncation Euler for the variance, log-Euler for the price.
PathSet simulate_heston(const HestonParams& params, const SimConfig& cfg, unsigned jobs = 1);

// Binary persistence (little-endian): "EHFP", u32 version, u64 n_paths,
// u64 n_steps, f64 s0, u64 seed, prices (row-major f64), f64 variance flag,
// variances (row-major f64) when the flag is 1.
inline constexpr std::uint32_t kPathFileVersion = 1;

void write_paths(const PathSet& paths, const std::filesystem::path& file);
PathSet read_paths(const std::filesystem::path& file);
void write_paths_csv(const PathSet& paths, const std::filesystem::path& file);

} // namespace ehf
