#include "ehf/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ehf/errors.hpp"

namespace ehf {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto s = trim(text);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
        throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const auto s = trim(text);
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, text));
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<double>(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

PriceModel parse_model(const std::string& text) {
    if (text == "heston") return PriceModel::heston;
    if (text == "gbm") return PriceModel::gbm;
    throw ConfigError("scenario.model: expected heston or gbm, got '" + text + "'");
}

std::string_view to_string(PriceModel m) { return m == PriceModel::heston ? "heston" : "gbm"; }

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name", "model", "v0", "theta", "kappa", "mu", "sigma_v", "rho", "gbm_mu", "gbm_sigma"}},
        {"simulation", {"s0", "n_steps", "days_per_year", "n_train", "n_test", "seed"}},
        {"contract", {"strike", "cost_rates", "charge_liquidation"}},
        {"risk", {"lambdas"}},
        {"sweep", {"alpha_lo", "alpha_hi", "alpha_count", "mode", "summary_lo", "summary_hi"}},
        {"policy", {"architectures", "hidden_width", "hidden_layers", "gru_units", "gru_layers", "window",
                    "change_feature", "label_feature", "baseline_vol"}},
        {"forest", {"rf", "beta", "gate", "n_trees", "max_depth", "min_samples_leaf", "bootstrap",
                    "bootstrap_fraction"}},
        {"training", {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "validation_fraction"}},
        {"output", {"dir"}},
    };
    return keys;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

SimConfig RunConfig::sim_config() const {
    SimConfig s;
    s.s0 = s0;
    s.n_steps = n_steps;
    s.dt = 1.0 / days_per_year;
    s.n_paths = n_paths();
    s.seed = seed;
    return s;
}

ContractSpec RunConfig::contract() const { return ContractSpec{strike, n_steps, 1.0 / days_per_year}; }

double RunConfig::bsm_vol() const {
    if (baseline_vol) return *baseline_vol;
    return scenario.model == PriceModel::heston ? std::sqrt(scenario.heston.theta) : scenario.gbm.sigma;
}

std::uint64_t RunConfig::stage_seed(std::uint64_t stage) const { return splitmix64(seed ^ splitmix64(stage)); }

void RunConfig::validate() const {
    if (scenario.name.empty() || scenario.name.find_first_of(",/ ") != std::string::npos) {
        throw ConfigError("scenario.name must be a non-empty word");
    }
    if (scenario.model == PriceModel::heston) scenario.heston.validate();
    else scenario.gbm.validate();
    if (!(days_per_year > 0.0)) throw ConfigError("simulation.days_per_year must be > 0");
    if (n_train == 0 || n_test == 0) throw ConfigError("simulation.n_train and n_test must be >= 1");
    sim_config().validate();
    contract().validate();
    for (double r : cost_rates) CostModel{r}.validate();
    for (double l : lambdas) RiskConfig{l}.validate();
    if (cost_rates.empty() || lambdas.empty()) throw ConfigError("cost_rates and lambdas must be non-empty");
    const auto grid = alphas();
    if (!(summary_lo <= summary_hi) || summary_lo < grid.front() || summary_hi > grid.back()) {
        throw ConfigError("sweep summary range must lie inside the alpha grid");
    }
    if (policies.empty()) throw ConfigError("policy.architectures must be non-empty");
    for (auto a : policies) {
        if (a == Architecture::bsm) throw ConfigError("the bsm baseline is always swept; list only dense and gru");
    }
    PolicyConfig probe = network;
    for (auto a : policies) {
        probe.arch = a;
        probe.validate();
    }
    if (baseline_vol && !(*baseline_vol > 0.0)) throw ConfigError("policy.baseline_vol must be > 0");
    if (bsm_vol() <= 0.0) throw ConfigError("BSM baseline volatility is zero; set policy.baseline_vol");
    if (rf_variants.empty()) throw ConfigError("forest.rf must list off and/or on");
    if (!(beta > 0.0)) throw ConfigError("forest.beta must be > 0");
    forest.validate();
    training.validate();
}

RunConfig parse_run_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }

    RunConfig c;
    const auto& known = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            if (!it->second.contains(key)) throw ConfigError("unknown key " + section + "." + key);
        }
    }
    auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        const auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
        if (!v) return std::nullopt;
        return trim(*v);
    };
    auto set_double = [&](const std::string& s, const std::string& k, double& out) {
        if (auto v = get(s, k)) out = parse_number<double>(s + "." + k, *v);
    };
    auto set_size = [&](const std::string& s, const std::string& k, std::size_t& out) {
        if (auto v = get(s, k)) out = parse_number<std::size_t>(s + "." + k, *v);
    };
    auto set_bool = [&](const std::string& s, const std::string& k, bool& out) {
        if (auto v = get(s, k)) out = parse_bool(s + "." + k, *v);
    };

    if (auto v = get("scenario", "name")) c.scenario.name = *v;
    if (auto v = get("scenario", "model")) c.scenario.model = parse_model(*v);
    if (c.scenario.name == "low_vol") c.scenario.heston = HestonParams::low_vol();
    else if (c.scenario.name == "high_vol") c.scenario.heston = HestonParams::high_vol();
    else if (c.scenario.model == PriceModel::heston) {
        for (const char* k : {"v0", "theta", "kappa", "mu", "sigma_v", "rho"}) {
            if (!get("scenario", k)) throw ConfigError(fmt::format("custom scenario needs scenario.{}", k));
        }
    }
    set_double("scenario", "v0", c.scenario.heston.v0);
    set_double("scenario", "theta", c.scenario.heston.theta);
    set_double("scenario", "kappa", c.scenario.heston.kappa);
    set_double("scenario", "mu", c.scenario.heston.mu);
    set_double("scenario", "sigma_v", c.scenario.heston.sigma_v);
    set_double("scenario", "rho", c.scenario.heston.rho);
    set_double("scenario", "gbm_mu", c.scenario.gbm.mu);
    set_double("scenario", "gbm_sigma", c.scenario.gbm.sigma);

    set_double("simulation", "s0", c.s0);
    set_size("simulation", "n_steps", c.n_steps);
    set_double("simulation", "days_per_year", c.days_per_year);
    set_size("simulation", "n_train", c.n_train);
    set_size("simulation", "n_test", c.n_test);
    if (auto v = get("simulation", "seed")) c.seed = parse_number<std::uint64_t>("simulation.seed", *v);

    set_double("contract", "strike", c.strike);
    if (auto v = get("contract", "cost_rates")) c.cost_rates = parse_doubles("contract.cost_rates", *v);
    set_bool("contract", "charge_liquidation", c.charge_liquidation);
    if (auto v = get("risk", "lambdas")) c.lambdas = parse_doubles("risk.lambdas", *v);

    set_double("sweep", "alpha_lo", c.alpha_lo);
    set_double("sweep", "alpha_hi", c.alpha_hi);
    set_size("sweep", "alpha_count", c.alpha_count);
    if (auto v = get("sweep", "mode")) c.mode = parse_sweep_mode(*v);
    set_double("sweep", "summary_lo", c.summary_lo);
    set_double("sweep", "summary_hi", c.summary_hi);

    if (auto v = get("policy", "architectures")) {
        c.policies.clear();
        for (const auto& item : split_list(*v)) c.policies.push_back(parse_architecture(item));
    }
    set_size("policy", "hidden_width", c.network.hidden_width);
    set_size("policy", "hidden_layers", c.network.hidden_layers);
    set_size("policy", "gru_units", c.network.gru_units);
    set_size("policy", "gru_layers", c.network.gru_layers);
    set_size("policy", "window", c.network.window);
    set_bool("policy", "change_feature", c.network.change_feature);
    set_bool("policy", "label_feature", c.network.label_feature);
    if (auto v = get("policy", "baseline_vol"); v && *v != "auto") {
        c.baseline_vol = parse_number<double>("policy.baseline_vol", *v);
    }

    if (auto v = get("forest", "rf")) {
        c.rf_variants.clear();
        for (const auto& item : split_list(*v)) c.rf_variants.push_back(parse_bool("forest.rf", item));
    }
    set_double("forest", "beta", c.beta);
    set_bool("forest", "gate", c.rf_gate);
    set_size("forest", "n_trees", c.forest.n_trees);
    set_size("forest", "max_depth", c.forest.max_depth);
    set_size("forest", "min_samples_leaf", c.forest.min_samples_leaf);
    set_bool("forest", "bootstrap", c.forest.bootstrap);
    set_double("forest", "bootstrap_fraction", c.forest.bootstrap_fraction);

    set_size("training", "epochs", c.training.epochs);
    set_size("training", "batch_size", c.training.batch_size);
    set_double("training", "learning_rate", c.training.learning_rate);
    set_double("training", "beta1", c.training.beta1);
    set_double("training", "beta2", c.training.beta2);
    set_double("training", "epsilon", c.training.epsilon);
    set_double("training", "validation_fraction", c.training.validation_fraction);

    if (auto v = get("output", "dir")) c.out_dir = *v;

    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::string format_run_config(const RunConfig& c) {
    const auto& h = c.scenario.heston;
    std::vector<std::string> archs, rf;
    for (auto a : c.policies) archs.emplace_back(to_string(a));
    for (bool v : c.rf_variants) rf.emplace_back(v ? "on" : "off");
    std::string out;
    auto line = [&](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
    out += "[scenario]\n";
    line("name", c.scenario.name);
    line("model", to_string(c.scenario.model));
    line("v0", h.v0);
    line("theta", h.theta);
    line("kappa", h.kappa);
    line("mu", h.mu);
    line("sigma_v", h.sigma_v);
    line("rho", h.rho);
    line("gbm_mu", c.scenario.gbm.mu);
    line("gbm_sigma", c.scenario.gbm.sigma);
    out += "\n[simulation]\n";
    line("s0", c.s0);
    line("n_steps", c.n_steps);
    line("days_per_year", c.days_per_year);
    line("n_train", c.n_train);
    line("n_test", c.n_test);
    line("seed", c.seed);
    out += "\n[contract]\n";
    line("strike", c.strike);
    line("cost_rates", fmt::format("{}", fmt::join(c.cost_rates, ", ")));
    line("charge_liquidation", c.charge_liquidation);
    out += "\n[risk]\n";
    line("lambdas", fmt::format("{}", fmt::join(c.lambdas, ", ")));
    out += "\n[sweep]\n";
    line("alpha_lo", c.alpha_lo);
    line("alpha_hi", c.alpha_hi);
    line("alpha_count", c.alpha_count);
    line("mode", to_string(c.mode));
    line("summary_lo", c.summary_lo);
    line("summary_hi", c.summary_hi);
    out += "\n[policy]\n";
    line("architectures", fmt::format("{}", fmt::join(archs, ", ")));
    line("hidden_width", c.network.hidden_width);
    line("hidden_layers", c.network.hidden_layers);
    line("gru_units", c.network.gru_units);
    line("gru_layers", c.network.gru_layers);
    line("window", c.network.window);
    line("change_feature", c.network.change_feature);
    line("label_feature", c.network.label_feature);
    line("baseline_vol", c.baseline_vol ? fmt::format("{}", *c.baseline_vol) : std::string("auto"));
    out += "\n[forest]\n";
    line("rf", fmt::format("{}", fmt::join(rf, ", ")));
    line("beta", c.beta);
    line("gate", c.rf_gate);
    line("n_trees", c.forest.n_trees);
    line("max_depth", c.forest.max_depth);
    line("min_samples_leaf", c.forest.min_samples_leaf);
    line("bootstrap", c.forest.bootstrap);
    line("bootstrap_fraction", c.forest.bootstrap_fraction);
    out += "\n[training]\n";
    line("epochs", c.training.epochs);
    line("batch_size", c.training.batch_size);
    line("learning_rate", c.training.learning_rate);
    line("beta1", c.training.beta1);
    line("beta2", c.training.beta2);
    line("epsilon", c.training.epsilon);
    line("validation_fraction", c.training.validation_fraction);
    out += "\n[output]\n";
    line("dir", c.out_dir.string());
    return out;
}

} // namespace ehf
