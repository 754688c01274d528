#include "ehf/pipeline.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <zlib.h>

#include "ehf/analytics_bsm.hpp"
#include "ehf/errors.hpp"
#include "ehf/grad_check.hpp"
#include "ehf/parallel.hpp"

namespace ehf {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const ConfigError&) {
        return kExitConfig;
    } catch (const ShapeError&) {
        return kExitConfig;
    } catch (const DomainError&) {
        return kExitConfig;
    } catch (const IoError&) {
        return kExitIo;
    } catch (const NumericError&) {
        return kExitNumeric;
    } catch (...) {
        return kExitFailure;
    }
}

std::vector<TrainKey> train_keys(const RunConfig& cfg) {
    std::vector<TrainKey> keys;
    for (auto arch : cfg.policies) {
        for (bool rf : cfg.rf_variants) {
            for (double rate : cfg.cost_rates) {
                for (double lambda : cfg.lambdas) keys.push_back({arch, rf, rate, lambda});
            }
        }
    }
    return keys;
}

std::string key_stem(const std::string& scenario, std::string_view policy, bool rf, double cost_rate,
                     double lambda) {
    return fmt::format("{}_{}_rf{}_c{}_l{}", scenario, policy, rf ? 1 : 0, cost_rate, lambda);
}

namespace {

std::string key_stem(const RunConfig& cfg, const TrainKey& key) {
    return ehf::key_stem(cfg.scenario.name, to_string(key.arch), key.rf, key.cost_rate, key.lambda);
}

std::string alpha_suffix(std::optional<std::size_t> alpha_index) {
    return alpha_index ? fmt::format("_a{:03}", *alpha_index) : std::string("_shared");
}

void ensure_parent(const fs::path& file) {
    std::error_code ec;
    if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + file.parent_path().string() + ": " + ec.message());
}

void write_text(const fs::path& file, const std::string& text) {
    ensure_parent(file);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + file.string());
}

void require_file(const fs::path& file, std::string_view hint) {
    if (!fs::exists(file)) throw IoError(fmt::format("missing {}; {}", file.string(), hint));
}

json manifest_config(const RunConfig& cfg) {
    const auto& h = cfg.scenario.heston;
    json j;
    j["scenario"] = cfg.scenario.name;
    if (cfg.scenario.model == PriceModel::heston) {
        j["model"] = "heston";
        j["params"] = {{"v0", h.v0}, {"theta", h.theta}, {"kappa", h.kappa},
                       {"mu", h.mu}, {"sigma_v", h.sigma_v}, {"rho", h.rho}};
    } else {
        j["model"] = "gbm";
        j["params"] = {{"mu", cfg.scenario.gbm.mu}, {"sigma", cfg.scenario.gbm.sigma}};
    }
    j["s0"] = cfg.s0;
    j["n_steps"] = cfg.n_steps;
    j["days_per_year"] = cfg.days_per_year;
    j["n_train"] = cfg.n_train;
    j["n_test"] = cfg.n_test;
    j["seed"] = cfg.seed;
    return j;
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

template <typename... Args>
void log_line(std::ostream& log, fmt::format_string<Args...> f, Args&&... args) {
    const std::lock_guard lock(log_mutex());
    log << fmt::format(f, std::forward<Args>(args)...) << '\n' << std::flush;
}

std::string display_name(std::string_view policy, bool rf) {
    std::string name = policy == "bsm" ? "BSM" : policy == "gru" ? "DH+GRU" : "DH";
    if (rf) name += "+RF";
    return name;
}

LabelMatrix load_predicted_labels(const RunConfig& cfg, const PathSet& paths) {
    const RunLayout layout(cfg.out_dir);
    require_file(layout.forest(), "run the label command first");
    return predict_labels(load_forest(layout.forest()), paths);
}

bool any_rf(const RunConfig& cfg) {
    for (bool rf : cfg.rf_variants) {
        if (rf) return true;
    }
    return false;
}

std::optional<std::size_t> alpha_index(const std::vector<double>& grid, double alpha) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k] == alpha) return k;
    }
    return std::nullopt;
}

} // namespace

fs::path RunLayout::checkpoint(const RunConfig& cfg, const TrainKey& key,
                               std::optional<std::size_t> alpha_index) const {
    return root_ / "checkpoints" / (key_stem(cfg, key) + alpha_suffix(alpha_index) + ".ehfm");
}

fs::path RunLayout::training_log(const RunConfig& cfg, const TrainKey& key,
                                 std::optional<std::size_t> alpha_index) const {
    return root_ / "checkpoints" / (key_stem(cfg, key) + alpha_suffix(alpha_index) + "_log.csv");
}

fs::path RunLayout::frontier(const FrontierTag& t) const {
    return root_ / "frontiers" /
           (ehf::key_stem(t.scenario, t.policy, t.rf, t.cost_rate, t.lambda) + "_" +
            std::string(to_string(t.mode)) + ".csv");
}

fs::path RunLayout::pareto(const FrontierTag& t) const {
    return root_ / "frontiers" /
           (ehf::key_stem(t.scenario, t.policy, t.rf, t.cost_rate, t.lambda) + "_" +
            std::string(to_string(t.mode)) + "_pareto.csv");
}

FrontierTag frontier_tag(const RunConfig& cfg, std::string_view policy, bool rf, double cost_rate, double lambda) {
    FrontierTag t;
    t.scenario = cfg.scenario.name;
    t.policy = std::string(policy);
    t.rf = rf;
    t.cost_rate = cost_rate;
    t.lambda = lambda;
    t.n_test_paths = cfg.n_test;
    t.mode = cfg.mode;
    t.seed = cfg.seed;
    return t;
}

// ---- simulate --------------------------------------------------------------

PathSet simulate_run_paths(const RunConfig& cfg, unsigned jobs) {
    cfg.validate();
    const auto sim = cfg.sim_config();
    return cfg.scenario.model == PriceModel::heston ? simulate_heston(cfg.scenario.heston, sim, jobs)
                                                    : simulate_gbm(cfg.scenario.gbm, sim, jobs);
}

std::uint32_t file_crc32(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        const auto got = in.gcount();
        if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
    }
    return static_cast<std::uint32_t>(crc);
}

PathSet cmd_simulate(const RunConfig& cfg, unsigned jobs) {
    const auto paths = simulate_run_paths(cfg, jobs);
    const RunLayout layout(cfg.out_dir);
    ensure_parent(layout.paths());
    write_paths(paths, layout.paths());
    json m;
    m["format"] = "EHFP";
    m["version"] = kPathFileVersion;
    m["file"] = layout.paths().filename().string();
    m["bytes"] = fs::file_size(layout.paths());
    m["crc32"] = file_crc32(layout.paths());
    m["config"] = manifest_config(cfg);
    write_text(layout.manifest(), m.dump(2) + "\n");
    return paths;
}

PathSet load_run_paths(const RunConfig& cfg) {
    const RunLayout layout(cfg.out_dir);
    require_file(layout.manifest(), "run the simulate command first");
    require_file(layout.paths(), "run the simulate command first");
    json m;
    try {
        std::ifstream in(layout.manifest());
        m = json::parse(in);
        const auto bytes = m.at("bytes").get<std::uintmax_t>();
        const auto crc = m.at("crc32").get<std::uint32_t>();
        if (fs::file_size(layout.paths()) != bytes || file_crc32(layout.paths()) != crc) {
            throw IoError("path file " + layout.paths().string() + " does not match its manifest checksum");
        }
    } catch (const json::exception& e) {
        throw IoError("unreadable manifest " + layout.manifest().string() + ": " + e.what());
    }
    if (m.at("config") != manifest_config(cfg)) {
        throw ConfigError("path file was simulated with a different configuration; rerun simulate");
    }
    return read_paths(layout.paths());
}

SplitPaths split_paths(const RunConfig& cfg, const PathSet& all) {
    if (all.n_paths() != cfg.n_paths() || all.n_steps() != cfg.n_steps) {
        throw ShapeError("path set does not match the configured path counts");
    }
    return {all.slice(0, cfg.n_train), all.slice(cfg.n_train, cfg.n_test)};
}

// ---- label -----------------------------------------------------------------

LabelOutcome fit_label_forest(const RunConfig& cfg, const SplitPaths& split, unsigned jobs) {
    const auto train_ds = build_dataset(split.train, label_paths(split.train, cfg.beta));
    const auto test_ds = build_dataset(split.test, label_paths(split.test, cfg.beta));
    ForestConfig fc = cfg.forest;
    fc.seed = cfg.stage_seed(kForestStage);
    LabelOutcome out{fit_forest(train_ds.features, train_ds.labels, fc, jobs), {}, {}};
    out.train_report = classification_report(out.forest.predict(train_ds.features), train_ds.labels);
    out.test_report = classification_report(out.forest.predict(test_ds.features), test_ds.labels);
    return out;
}

std::string format_label_report(const LabelOutcome& o) {
    std::string s;
    auto block = [&](const char* name, const ClassificationReport& r) {
        s += fmt::format("{} samples        {}\n", name, r.n);
        s += fmt::format("{} accuracy       {:.6f}\n", name, r.accuracy);
        s += fmt::format("{} majority       {:.6f}\n", name, r.majority_baseline);
        s += fmt::format("{} share of 1     {:.6f}\n", name, r.prevalence_one);
        s += fmt::format("{} confusion      truth0: pred0 {} pred1 {}\n", name, r.confusion[0][0], r.confusion[0][1]);
        s += fmt::format("{} confusion      truth1: pred0 {} pred1 {}\n", name, r.confusion[1][0], r.confusion[1][1]);
    };
    block("train", o.train_report);
    block("test ", o.test_report);
    return s;
}

LabelOutcome cmd_label(const RunConfig& cfg, unsigned jobs, std::ostream& log) {
    const auto split = split_paths(cfg, load_run_paths(cfg));
    auto outcome = fit_label_forest(cfg, split, jobs);
    const RunLayout layout(cfg.out_dir);
    save_forest(outcome.forest, layout.forest());
    write_label_csv(split.test, label_paths(split.test, cfg.beta), predict_labels(outcome.forest, split.test),
                    layout.label_csv());
    const auto text = format_label_report(outcome);
    write_text(layout.label_report(), text);
    log << text << std::flush;
    return outcome;
}

// ---- train -----------------------------------------------------------------

PolicyConfig policy_config(const RunConfig& cfg, const TrainKey& key) {
    PolicyConfig pc = cfg.network;
    pc.arch = key.arch;
    pc.label_feature = cfg.network.label_feature && key.rf;
    pc.init_seed = cfg.stage_seed(kInitStage);
    return pc;
}

TrainConfig train_config(const RunConfig& cfg) {
    TrainConfig tc = cfg.training;
    tc.seed = cfg.stage_seed(kTrainStage);
    return tc;
}

TrainResult train_key(const RunConfig& cfg, const TrainKey& key, const PathSet& train, double alpha,
                      const LabelMatrix* labels) {
    if (key.rf && labels == nullptr) throw ConfigError("classifier variant needs labels for the training paths");
    MaskSource masks;
    masks.alphas = {alpha};
    if (key.rf) {
        masks.labels = labels;
        masks.gate_with_labels = cfg.rf_gate;
    }
    return train_policy(train, cfg.contract(), CostModel{key.cost_rate, cfg.charge_liquidation},
                        RiskConfig{key.lambda}, policy_config(cfg, key), masks, train_config(cfg));
}

void write_training_log(const std::vector<EpochLog>& log, const fs::path& file) {
    std::string s = "epoch,train_objective,validation_objective\n";
    for (const auto& e : log) {
        s += fmt::format("{},{:.17g},{:.17g}\n", e.epoch, e.train_objective, e.validation_objective);
    }
    write_text(file, s);
}

void cmd_train(const RunConfig& cfg, unsigned jobs, std::ostream& log) {
    const auto split = split_paths(cfg, load_run_paths(cfg));
    std::optional<LabelMatrix> labels;
    if (any_rf(cfg)) labels = load_predicted_labels(cfg, split.train);
    const RunLayout layout(cfg.out_dir);
    const auto keys = train_keys(cfg);
    const auto grid = cfg.alphas();

    struct Job {
        TrainKey key;
        std::optional<std::size_t> alpha;
    };
    std::vector<Job> work;
    for (const auto& key : keys) {
        if (cfg.mode == SweepMode::fast) {
            work.push_back({key, std::nullopt});
        } else {
            for (std::size_t k = 0; k < grid.size(); ++k) work.push_back({key, k});
        }
    }
    parallel_for(work.size(), jobs, [&](std::size_t i) {
        const auto& job = work[i];
        const double alpha = job.alpha ? grid[*job.alpha] : 0.0;
        const auto res = train_key(cfg, job.key, split.train, alpha, labels ? &*labels : nullptr);
        const auto file = layout.checkpoint(cfg, job.key, job.alpha);
        ensure_parent(file);
        save_policy(res.policy, file);
        write_training_log(res.log, layout.training_log(cfg, job.key, job.alpha));
        log_line(log, "trained {} (best epoch {}, validation objective {:.6f})", file.filename().string(),
                 res.best_epoch, res.best_validation);
    });
}

// ---- sweep -----------------------------------------------------------------

std::vector<FrontierPoint> sweep_key(const RunConfig& cfg, const TrainKey& key, const SplitPaths& split,
                                     const LabelMatrix* test_labels, const SweepAssets& policies, unsigned jobs) {
    if (key.rf && test_labels == nullptr) throw ConfigError("classifier variant needs labels for the test paths");
    SweepConfig sc;
    sc.alphas = cfg.alphas();
    sc.tag = frontier_tag(cfg, to_string(key.arch), key.rf, key.cost_rate, key.lambda);
    sc.jobs = jobs;
    SweepAssets assets = policies;
    assets.labels = key.rf ? test_labels : nullptr;
    assets.gate_with_labels = cfg.rf_gate;
    assets.train_paths = &split.train;
    return sweep_alpha(split.test, cfg.contract(), CostModel{key.cost_rate, cfg.charge_liquidation}, sc, assets);
}

std::vector<FrontierPoint> sweep_baseline(const RunConfig& cfg, double cost_rate, double lambda,
                                          const PathSet& test, unsigned jobs) {
    SweepConfig sc;
    sc.alphas = cfg.alphas();
    sc.tag = frontier_tag(cfg, "bsm", false, cost_rate, lambda);
    sc.jobs = jobs;
    SweepAssets assets;
    assets.shared_policy = std::make_shared<BsmPolicy>(cfg.contract(), cfg.bsm_vol());
    auto points = sweep_alpha(test, cfg.contract(), CostModel{cost_rate, cfg.charge_liquidation}, sc, assets);
    // the closed form needs no training, so both modes share this frontier
    for (auto& p : points) p.tag.mode = cfg.mode;
    return points;
}

std::vector<fs::path> cmd_sweep(const RunConfig& cfg, unsigned jobs, std::ostream& log) {
    const auto split = split_paths(cfg, load_run_paths(cfg));
    std::optional<LabelMatrix> train_labels, test_labels;
    if (any_rf(cfg)) {
        train_labels = load_predicted_labels(cfg, split.train);
        test_labels = load_predicted_labels(cfg, split.test);
    }
    const RunLayout layout(cfg.out_dir);
    const auto grid = cfg.alphas();
    std::vector<fs::path> written;
    auto emit = [&](const std::vector<FrontierPoint>& points) {
        const auto& tag = points.front().tag;
        for (std::size_t k = 1; k < points.size(); ++k) {
            if (tag.mode == SweepMode::fast && points[k].avg_trades > points[k - 1].avg_trades) {
                log_line(log, "warning: {} trades rise from alpha {} to {}", tag.policy, points[k - 1].alpha,
                         points[k].alpha);
            }
        }
        const auto file = layout.frontier(tag);
        ensure_parent(file);
        write_frontier_csv(points, file);
        write_frontier_csv(pareto_filter(points), layout.pareto(tag));
        const auto s = summarize_range(points, cfg.summary_lo, cfg.summary_hi);
        log_line(log, "{}: avg mean {:.4f}, avg std {:.4f} over alpha [{}, {}]", file.filename().string(),
                 s.avg_mean, s.avg_std, cfg.summary_lo, cfg.summary_hi);
        written.push_back(file);
    };

    for (double rate : cfg.cost_rates) {
        for (double lambda : cfg.lambdas) emit(sweep_baseline(cfg, rate, lambda, split.test, jobs));
    }
    for (const auto& key : train_keys(cfg)) {
        SweepAssets assets;
        assets.mode = cfg.mode;
        if (cfg.mode == SweepMode::fast) {
            const auto file = layout.checkpoint(cfg, key, std::nullopt);
            require_file(file, "run the train command first");
            auto policy = std::make_shared<NeuralPolicy>(load_policy(file));
            if (policy->architecture() != key.arch) throw ConfigError(file.string() + " holds a different architecture");
            assets.shared_policy = std::move(policy);
        } else {
            assets.policy_for_alpha = [&, key](double alpha) -> std::shared_ptr<const HedgePolicy> {
                const auto k = alpha_index(grid, alpha);
                if (!k) return nullptr;
                const auto file = layout.checkpoint(cfg, key, *k);
                if (fs::exists(file)) return std::make_shared<NeuralPolicy>(load_policy(file));
                auto res = train_key(cfg, key, split.train, alpha, train_labels ? &*train_labels : nullptr);
                ensure_parent(file);
                save_policy(res.policy, file);
                write_training_log(res.log, layout.training_log(cfg, key, *k));
                log_line(log, "trained {}", file.filename().string());
                return std::make_shared<NeuralPolicy>(std::move(res.policy));
            };
        }
        emit(sweep_key(cfg, key, split, test_labels ? &*test_labels : nullptr, assets, jobs));
    }
    return written;
}

// ---- report ----------------------------------------------------------------

std::vector<fs::path> cmd_report(const RunConfig& cfg, std::ostream& log) {
    const RunLayout layout(cfg.out_dir);
    auto load = [&](std::string_view policy, bool rf, double rate, double lambda) {
        const auto file = layout.frontier(frontier_tag(cfg, policy, rf, rate, lambda));
        require_file(file, "run the sweep command first");
        return read_frontier_csv(file);
    };
    std::vector<fs::path> written;
    auto table = [&](const std::string& stem, const std::string& base_name, const std::string& variant_name,
                     const std::vector<ComparisonColumn>& columns) {
        const auto text = format_comparison_table(base_name, variant_name, columns);
        const auto txt = layout.report_dir() / (stem + ".txt");
        const auto csv = layout.report_dir() / (stem + ".csv");
        write_text(txt, text);
        write_text(csv, format_comparison_csv(base_name, variant_name, columns));
        log << stem << '\n' << text << '\n' << std::flush;
        written.push_back(txt);
        written.push_back(csv);
    };
    auto columns = [&](auto base_of, auto variant_of) {
        std::vector<ComparisonColumn> cols;
        for (double rate : cfg.cost_rates) {
            cols.push_back({fmt::format("{}%", rate * 100.0),
                            compare_configs(base_of(rate), variant_of(rate), cfg.summary_lo, cfg.summary_hi)});
        }
        return cols;
    };
    const bool has_rf_pair = any_rf(cfg) && std::ranges::find(cfg.rf_variants, false) != cfg.rf_variants.end();
    const bool has_dense = std::ranges::find(cfg.policies, Architecture::dense) != cfg.policies.end();
    const bool has_gru = std::ranges::find(cfg.policies, Architecture::gru) != cfg.policies.end();

    std::string summary = "scenario,policy,rf,cost_rate,lambda,mode,alpha_lo,alpha_hi,n_points,avg_mean,avg_std,"
                          "pareto_points\n";
    auto summarize_one = [&](std::string_view policy, bool rf, double rate, double lambda) {
        const auto points = load(policy, rf, rate, lambda);
        const auto s = summarize_range(points, cfg.summary_lo, cfg.summary_hi);
        summary += fmt::format("{},{},{},{:.17g},{:.17g},{},{:.17g},{:.17g},{},{:.17g},{:.17g},{}\n",
                               cfg.scenario.name, policy, rf ? 1 : 0, rate, lambda, to_string(cfg.mode),
                               cfg.summary_lo, cfg.summary_hi, s.count, s.avg_mean, s.avg_std,
                               pareto_filter(points).size());
    };

    for (double lambda : cfg.lambdas) {
        const auto l = fmt::format("l{}", lambda);
        for (double rate : cfg.cost_rates) summarize_one("bsm", false, rate, lambda);
        for (auto arch : cfg.policies) {
            const auto name = std::string(to_string(arch));
            for (bool rf : cfg.rf_variants) {
                for (double rate : cfg.cost_rates) summarize_one(name, rf, rate, lambda);
                table(fmt::format("baseline_{}_rf{}_{}", name, rf ? 1 : 0, l), "BSM", display_name(name, rf),
                      columns([&](double r) { return load("bsm", false, r, lambda); },
                              [&](double r) { return load(name, rf, r, lambda); }));
            }
            if (has_rf_pair) {
                table(fmt::format("rf_{}_{}", name, l), display_name(name, false), display_name(name, true),
                      columns([&](double r) { return load(name, false, r, lambda); },
                              [&](double r) { return load(name, true, r, lambda); }));
            }
        }
        if (has_dense && has_gru) {
            for (bool rf : cfg.rf_variants) {
                table(fmt::format("architecture_rf{}_{}", rf ? 1 : 0, l), display_name("dense", rf),
                      display_name("gru", rf),
                      columns([&](double r) { return load("dense", rf, r, lambda); },
                              [&](double r) { return load("gru", rf, r, lambda); }));
            }
        }
    }
    const auto summary_file = layout.report_dir() / "summary.csv";
    write_text(summary_file, summary);
    written.push_back(summary_file);
    return written;
}

// ---- gradcheck -------------------------------------------------------------

bool cmd_gradcheck(std::ostream& log) {
    bool ok = true;
    auto show = [&](const std::string& name, const nn::GradCheckReport& r) {
        for (const auto& b : r.blocks) {
            log << fmt::format("  {:<16} max abs {:.3e}  rel {:.3e}\n", b.name, b.max_abs_error, b.relative_error);
        }
        log << fmt::format("{} {}: max relative error {:.3e} (tolerance {:.0e})\n", r.passed() ? "PASS" : "FAIL",
                           name, r.max_relative_error, r.tolerance)
            << std::flush;
        ok = ok && r.passed();
    };

    {
        nn::ParamLayout layout;
        layout.add("w", 1, 3);
        layout.add("b", 1, 1);
        const std::array<std::array<double, 4>, 3> data{{{1, 2, 3, 4}, {-1, 0.5, 2, 1}, {0.3, -0.2, 0.1, -2}}};
        const nn::LossFunction loss = [&](std::span<const double> p, std::span<double> grad) {
            double l = 0.0;
            for (const auto& d : data) {
                const double r = p[0] * d[0] + p[1] * d[1] + p[2] * d[2] + p[3] - d[3];
                l += r * r;
                if (!grad.empty()) {
                    for (std::size_t k = 0; k < 3; ++k) grad[k] += 2 * r * d[k];
                    grad[3] += 2 * r;
                }
            }
            return l;
        };
        const std::vector<double> p{0.3, -0.7, 1.1, 0.2};
        show("linear-quadratic", nn::grad_check(p, layout, loss, 1e-9));
    }

    SimConfig sc;
    sc.n_paths = 8;
    sc.seed = 11;
    const auto paths = simulate_heston(HestonParams::high_vol(), sc);
    LabelMatrix labels = label_paths(paths, 0.05);
    MaskSource masks;
    masks.alphas = {0.0, 0.02};
    masks.labels = &labels;
    for (auto [arch, tol] : {std::pair{Architecture::dense, 1e-5}, std::pair{Architecture::gru, 1e-4}}) {
        PolicyConfig pc;
        pc.arch = arch;
        pc.label_feature = true;
        pc.init_seed = 5;
        NeuralPolicy policy(pc, sc.n_steps, fit_feature_scaling(paths));
        // zero biases and an all-zero day-0 input would sit every relu on its kink
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-0.05, 0.05);
        for (double& p : policy.parameters()) p += u(rng);
        const auto loss =
            episode_objective(paths, policy, ContractSpec{}, CostModel{0.02}, RiskConfig{0.5}, masks);
        show(std::string(to_string(arch)) + " policy", nn::grad_check(policy.parameters(), policy.layout(), loss, tol));
    }
    return ok;
}

} // namespace ehf
