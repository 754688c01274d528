#include "ehf/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "ehf/errors.hpp"
#include "ehf/parallel.hpp"

namespace ehf {

namespace {

// Variance draws use a second engine so that the price stream of a Heston
// path is the same sequence a GBM path with the same seed consumes.
constexpr std::uint64_t kVarianceStreamSalt = 0x9E3779B97F4A7C15ULL;

bool finite(double x) { return std::isfinite(x); }

} // namespace

void GBMParams::validate() const {
    if (!finite(mu) || !finite(sigma)) throw ConfigError("GBM parameters must be finite");
    if (sigma < 0.0) throw ConfigError("GBM sigma must be >= 0");
}

void HestonParams::validate() const {
    for (double x : {v0, theta, kappa, mu, sigma_v, rho}) {
        if (!finite(x)) throw ConfigError("Heston parameters must be finite");
    }
    if (v0 < 0.0) throw ConfigError("Heston v0 must be >= 0");
    if (theta < 0.0) throw ConfigError("Heston theta must be >= 0");
    if (kappa <= 0.0) throw ConfigError("Heston kappa must be > 0");
    if (sigma_v < 0.0) throw ConfigError("Heston sigma_v must be >= 0");
    if (rho < -1.0 || rho > 1.0) throw ConfigError("Heston rho must lie in [-1, 1]");
}

void SimConfig::validate() const {
    if (!(s0 > 0.0) || !finite(s0)) throw ConfigError("s0 must be > 0");
    if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (!(dt > 0.0) || !finite(dt)) throw ConfigError("dt must be > 0");
    if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
}

PathSet::PathSet(std::size_t n_paths, std::size_t n_steps, double s0, std::uint64_t seed,
                 bool with_variances, std::size_t first_path_id)
    : n_paths_(n_paths),
      n_steps_(n_steps),
      s0_(s0),
      seed_(seed),
      first_path_id_(first_path_id),
      prices_(n_paths * (n_steps + 1), 0.0) {
    if (with_variances) variances_.assign(prices_.size(), 0.0);
}

std::span<const double> PathSet::prices(std::size_t path) const {
    return std::span<const double>(prices_).subspan(path * row_length(), row_length());
}

std::span<double> PathSet::prices(std::size_t path) {
    return std::span<double>(prices_).subspan(path * row_length(), row_length());
}

std::span<const double> PathSet::variances(std::size_t path) const {
    if (variances_.empty()) throw StateError("path set carries no variances");
    return std::span<const double>(variances_).subspan(path * row_length(), row_length());
}

std::span<double> PathSet::variances(std::size_t path) {
    if (variances_.empty()) throw StateError("path set carries no variances");
    return std::span<double>(variances_).subspan(path * row_length(), row_length());
}

PathSet PathSet::slice(std::size_t first, std::size_t count) const {
    if (first + count > n_paths_) {
        throw ShapeError(fmt::format("slice [{}, {}) exceeds {} paths", first, first + count, n_paths_));
    }
    PathSet out(count, n_steps_, s0_, seed_, has_variances(), first_path_id_ + first);
    const auto lo = static_cast<std::ptrdiff_t>(first * row_length());
    const auto hi = static_cast<std::ptrdiff_t>((first + count) * row_length());
    std::copy(prices_.begin() + lo, prices_.begin() + hi, out.prices_.begin());
    if (has_variances()) std::copy(variances_.begin() + lo, variances_.begin() + hi, out.variances_.begin());
    return out;
}

bool PathSet::disjoint_from(const PathSet& other) const {
    if (seed_ != other.seed_) return true;
    const std::size_t a_lo = first_path_id_, a_hi = first_path_id_ + n_paths_;
    const std::size_t b_lo = other.first_path_id_, b_hi = other.first_path_id_ + other.n_paths_;
    return a_hi <= b_lo || b_hi <= a_lo;
}

PathSet simulate_gbm(const GBMParams& params, const SimConfig& cfg, unsigned jobs) {
    params.validate();
    cfg.validate();
    PathSet out(cfg.n_paths, cfg.n_steps, cfg.s0, cfg.seed, false);
    const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * cfg.dt;
    const double diffusion = params.sigma * std::sqrt(cfg.dt);
    parallel_for(cfg.n_paths, jobs, [&](std::size_t i) {
        std::mt19937_64 engine(path_seed(cfg.seed, i));
        std::normal_distribution<double> normal;
        auto row = out.prices(i);
        row[0] = cfg.s0;
        for (std::size_t t = 0; t < cfg.n_steps; ++t) {
            row[t + 1] = row[t] * std::exp(drift + diffusion * normal(engine));
        }
    });
    return out;
}

PathSet simulate_heston(const HestonParams& params, const SimConfig& cfg, unsigned jobs) {
    params.validate();
    cfg.validate();
    PathSet out(cfg.n_paths, cfg.n_steps, cfg.s0, cfg.seed, true);
    const double dt = cfg.dt;
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
    parallel_for(cfg.n_paths, jobs, [&](std::size_t i) {
        std::mt19937_64 price_engine(path_seed(cfg.seed, i));
        std::mt19937_64 variance_engine(path_seed(cfg.seed, i) ^ kVarianceStreamSalt);
        std::normal_distribution<double> price_normal;
        std::normal_distribution<double> variance_normal;
        auto s = out.prices(i);
        auto v_out = out.variances(i);
        s[0] = cfg.s0;
        double v = params.v0;
        v_out[0] = std::max(v, 0.0);
        for (std::size_t t = 0; t < cfg.n_steps; ++t) {
            const double z1 = price_normal(price_engine);
            const double z2 = params.rho * z1 + rho_perp * variance_normal(variance_engine);
            const double v_plus = std::max(v, 0.0);
            const double vol_step = std::sqrt(v_plus * dt);
            s[t + 1] = s[t] * std::exp((params.mu - 0.5 * v_plus) * dt + vol_step * z1);
            v = v + params.kappa * (params.theta - v_plus) * dt + params.sigma_v * vol_step * z2;
            v_out[t + 1] = std::max(v, 0.0);
        }
    });
    return out;
}

void write_paths(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    detail::put_magic(out, "EHFP");
    detail::put_u32(out, kPathFileVersion);
    detail::put_u64(out, paths.n_paths());
    detail::put_u64(out, paths.n_steps());
    detail::put_f64(out, paths.s0());
    detail::put_u64(out, paths.seed());
    for (double p : paths.all_prices()) detail::put_f64(out, p);
    detail::put_f64(out, paths.has_variances() ? 1.0 : 0.0);
    for (double v : paths.all_variances()) detail::put_f64(out, v);
    if (!out) throw IoError("failed writing " + file.string());
}

PathSet read_paths(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    detail::expect_magic(in, "EHFP", "path");
    const auto version = detail::get_u32(in);
    if (version != kPathFileVersion) throw IoError(fmt::format("unsupported path file version {}", version));
    const auto n_paths = detail::get_u64(in);
    const auto n_steps = detail::get_u64(in);
    const double s0 = detail::get_f64(in);
    const auto seed = detail::get_u64(in);
    if (n_paths == 0 || n_steps == 0 || n_paths > (1ULL << 32) || n_steps > (1ULL << 20)) {
        throw IoError("corrupt path file header");
    }
    PathSet tmp(n_paths, n_steps, s0, seed, false);
    for (std::size_t i = 0; i < n_paths; ++i) {
        for (double& p : tmp.prices(i)) p = detail::get_f64(in);
    }
    const double flag = detail::get_f64(in);
    if (flag != 0.0 && flag != 1.0) throw IoError("corrupt variance flag in path file");
    if (flag == 0.0) {
        if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in path file");
        return tmp;
    }
    PathSet out(n_paths, n_steps, s0, seed, true);
    for (std::size_t i = 0; i < n_paths; ++i) {
        std::ranges::copy(tmp.prices(i), out.prices(i).begin());
        for (double& v : out.variances(i)) v = detail::get_f64(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in path file");
    return out;
}

void write_paths_csv(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "path_id";
    for (std::size_t t = 0; t <= paths.n_steps(); ++t) out << ",s" << t;
    out << '\n';
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        out << paths.first_path_id() + i;
        for (double p : paths.prices(i)) out << ',' << fmt::format("{:.10g}", p);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + file.string());
}

} // namespace ehf
