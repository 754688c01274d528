#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ehf/analytics_bsm.hpp"
#include "ehf/errors.hpp"
#include "ehf/frontier.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/pipeline.hpp"
#include "ehf/run_config.hpp"
#include "ehf/signal_forest.hpp"
#include "ehf/trade_mask.hpp"

namespace py = pybind11;
using namespace ehf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const PathSet& paths) {
    Array out({paths.n_paths(), paths.row_length()});
    std::memcpy(out.mutable_data(), paths.all_prices().data(), paths.all_prices().size() * sizeof(double));
    return out;
}

PathSet from_array(const Array& prices) {
    if (prices.ndim() != 2 || prices.shape(1) < 2) throw ShapeError("prices must be (n_paths, n_steps + 1)");
    const auto n = static_cast<std::size_t>(prices.shape(0));
    const auto m = static_cast<std::size_t>(prices.shape(1));
    PathSet paths(n, m - 1, prices.at(0, 0), 0, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(paths.prices(i).data(), prices.data(i, 0), m * sizeof(double));
    }
    return paths;
}

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw ShapeError("expected a 1-d array");
    return std::vector<double>(a.data(), a.data() + a.shape(0));
}

SimConfig sim_config(std::size_t n_paths, std::uint64_t seed, std::size_t n_steps, double s0) {
    SimConfig cfg;
    cfg.n_paths = n_paths;
    cfg.seed = seed;
    cfg.n_steps = n_steps;
    cfg.s0 = s0;
    return cfg;
}

py::dict point_dict(const FrontierPoint& p) {
    py::dict d;
    d["scenario"] = p.tag.scenario;
    d["policy"] = p.tag.policy;
    d["rf"] = p.tag.rf;
    d["cost_rate"] = p.tag.cost_rate;
    d["lambda"] = p.tag.lambda;
    d["alpha"] = p.alpha;
    d["mean_loss"] = p.mean_loss;
    d["std_loss"] = p.std_loss;
    d["avg_trades"] = p.avg_trades;
    d["n_test_paths"] = p.tag.n_test_paths;
    d["mode"] = std::string(to_string(p.tag.mode));
    d["seed"] = p.tag.seed;
    return d;
}

} // namespace

PYBIND11_MODULE(ehf, m) {
    m.doc() = "Hedging frontier core: simulation, analytics, losses, labels and frontiers";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "simulate_heston",
        [](double v0, double theta, double kappa, double mu, double sigma_v, double rho, std::size_t n_paths,
           std::uint64_t seed, std::size_t n_steps, double s0, unsigned jobs) {
            return to_array(simulate_heston({v0, theta, kappa, mu, sigma_v, rho},
                                            sim_config(n_paths, seed, n_steps, s0), jobs));
        },
        py::arg("v0"), py::arg("theta"), py::arg("kappa"), py::arg("mu"), py::arg("sigma_v"), py::arg("rho"),
        py::arg("n_paths"), py::arg("seed"), py::arg("n_steps") = 30, py::arg("s0") = 100.0, py::arg("jobs") = 1,
        "Heston price paths as an (n_paths, n_steps + 1) array.");
    m.def(
        "simulate_gbm",
        [](double mu, double sigma, std::size_t n_paths, std::uint64_t seed, std::size_t n_steps, double s0,
           unsigned jobs) {
            return to_array(simulate_gbm({mu, sigma}, sim_config(n_paths, seed, n_steps, s0), jobs));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("n_paths"), py::arg("seed"), py::arg("n_steps") = 30,
        py::arg("s0") = 100.0, py::arg("jobs") = 1, "GBM price paths as an (n_paths, n_steps + 1) array.");

    m.def("bs_call_price", &bs_call_price, py::arg("spot"), py::arg("strike"), py::arg("rate"), py::arg("vol"),
          py::arg("tau"));
    m.def("bs_delta", &bs_delta, py::arg("spot"), py::arg("strike"), py::arg("rate"), py::arg("vol"),
          py::arg("tau"));

    m.def(
        "termination_loss",
        [](const Array& prices, const Array& deltas, double strike, double cost_rate) {
            const auto p = to_vector(prices), d = to_vector(deltas);
            return termination_loss(p, d, ContractSpec{strike, d.size()}, CostModel{cost_rate});
        },
        py::arg("prices"), py::arg("deltas"), py::arg("strike") = 100.0, py::arg("cost_rate") = 0.0,
        "Termination loss of a short call hedged with one delta per trading day.");
    m.def(
        "entropy_risk", [](const Array& losses, double lam) { return entropy_risk(to_vector(losses), RiskConfig{lam}); },
        py::arg("losses"), py::arg("lam"));

    m.def(
        "label_extrema",
        [](const Array& prices, double beta) { return label_extrema(to_vector(prices), beta); }, py::arg("prices"),
        py::arg("beta") = 0.05, "One label per day; 0 marks a significant peak or trough.");
    m.def(
        "trade_frequency", [](const Array& prices, double alpha) { return trade_frequency(from_array(prices), alpha); },
        py::arg("prices"), py::arg("alpha"), "Average number of daily moves larger than alpha per path.");

    m.def(
        "pareto_filter",
        [](const Array& std_loss, const Array& mean_loss) {
            const auto s = to_vector(std_loss), mu = to_vector(mean_loss);
            if (s.size() != mu.size()) throw ShapeError("std and mean lengths differ");
            std::vector<FrontierPoint> pts(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                pts[i].std_loss = s[i];
                pts[i].mean_loss = mu[i];
                pts[i].alpha = static_cast<double>(i);
            }
            std::vector<std::size_t> kept;
            for (const auto& p : pareto_filter(pts)) kept.push_back(static_cast<std::size_t>(p.alpha));
            return kept;
        },
        py::arg("std_loss"), py::arg("mean_loss"), "Indices of the non-dominated points, in input order.");

    m.def(
        "read_frontier_csv",
        [](const std::filesystem::path& file) {
            py::list rows;
            for (const auto& p : read_frontier_csv(file)) rows.append(point_dict(p));
            return rows;
        },
        py::arg("file"));
    m.def(
        "normalize_config", [](const std::string& text) { return format_run_config(parse_run_config(text)); },
        py::arg("text"), "Parses a run config and prints it back with every key.");
    m.def(
        "gradcheck",
        [] {
            std::ostringstream log;
            const bool ok = cmd_gradcheck(log);
            return py::make_tuple(ok, log.str());
        },
        "Runs the analytic gradient checks; returns (passed, log).");
}
