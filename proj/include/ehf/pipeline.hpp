#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ehf/frontier.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/policy.hpp"
#include "ehf/run_config.hpp"
#include "ehf/signal_forest.hpp"
#include "ehf/training.hpp"

namespace ehf {

/// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

/// Maps the in-flight exception to an exit code; call from a catch block.
int exit_code_for_current_exception();

/// One trained configuration: a network with or without the classifier gate
/// at one cost rate and risk aversion.
struct TrainKey {
    Architecture arch = Architecture::dense;
    bool rf = false;
    double cost_rate = 0.0;
    double lambda = 0.5;
};

/// Every (architecture, rf, cost, lambda) combination of the config.
std::vector<TrainKey> train_keys(const RunConfig& cfg);

/// File names under the output directory.
class RunLayout {
public:
    explicit RunLayout(std::filesystem::path root) : root_(std::move(root)) {}
    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path paths() const { return root_ / "paths.ehfp"; }
    std::filesystem::path manifest() const { return root_ / "paths.manifest.json"; }
    std::filesystem::path forest() const { return root_ / "forest.json"; }
    std::filesystem::path label_csv() const { return root_ / "labels_test.csv"; }
    std::filesystem::path label_report() const { return root_ / "label_report.txt"; }
    std::filesystem::path checkpoint(const RunConfig& cfg, const TrainKey& key,
                                     std::optional<std::size_t> alpha_index) const;
    std::filesystem::path training_log(const RunConfig& cfg, const TrainKey& key,
                                       std::optional<std::size_t> alpha_index) const;
    std::filesystem::path frontier(const FrontierTag& tag) const;
    std::filesystem::path pareto(const FrontierTag& tag) const;
    std::filesystem::path report_dir() const { return root_ / "report"; }

private:
    std::filesystem::path root_;
};

/// Stem shared by checkpoint, log and frontier files, e.g.
/// high_vol_dense_rf1_c0.05_l0.5.
std::string key_stem(const std::string& scenario, std::string_view policy, bool rf, double cost_rate, double lambda);

FrontierTag frontier_tag(const RunConfig& cfg, std::string_view policy, bool rf, double cost_rate, double lambda);

// ---- simulate --------------------------------------------------------------

/// Simulates train + test paths and writes the path file with a JSON
/// manifest (config, byte count, CRC-32).
PathSet cmd_simulate(const RunConfig& cfg, unsigned jobs);

/// Simulates without touching the disk.
PathSet simulate_run_paths(const RunConfig& cfg, unsigned jobs);

/// Reads the path file, checking its manifest checksum and that it was
/// produced by an equivalent config. Missing or corrupt files: IoError;
/// config mismatch: ConfigError.
PathSet load_run_paths(const RunConfig& cfg);

std::uint32_t file_crc32(const std::filesystem::path& file);

struct SplitPaths {
    PathSet train;
    PathSet test;
};
SplitPaths split_paths(const RunConfig& cfg, const PathSet& all);

// ---- label -----------------------------------------------------------------

struct LabelOutcome {
    Forest forest;
    ClassificationReport train_report;
    ClassificationReport test_report;
};

/// Labels all paths, fits the forest on the train split and scores it on
/// the test split. Pure; cmd_label also writes the files.
LabelOutcome fit_label_forest(const RunConfig& cfg, const SplitPaths& split, unsigned jobs);
LabelOutcome cmd_label(const RunConfig& cfg, unsigned jobs, std::ostream& log);

std::string format_label_report(const LabelOutcome& outcome);

// ---- train -----------------------------------------------------------------

PolicyConfig policy_config(const RunConfig& cfg, const TrainKey& key);
TrainConfig train_config(const RunConfig& cfg);

/// Trains one network on `train` under the alpha mask (0 for the shared
/// policy of fast mode); `labels` gates and feeds it when key.rf is set.
TrainResult train_key(const RunConfig& cfg, const TrainKey& key, const PathSet& train, double alpha,
                      const LabelMatrix* labels);

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& file);

/// Fast mode: one checkpoint per key. Retrain mode: one per key and alpha.
void cmd_train(const RunConfig& cfg, unsigned jobs, std::ostream& log);

// ---- sweep -----------------------------------------------------------------

/// Sweeps one trained key over the alpha grid on the test split.
std::vector<FrontierPoint> sweep_key(const RunConfig& cfg, const TrainKey& key, const SplitPaths& split,
                                     const LabelMatrix* test_labels, const SweepAssets& policies, unsigned jobs);

/// Frontier of the closed-form BSM hedge at one cost rate.
std::vector<FrontierPoint> sweep_baseline(const RunConfig& cfg, double cost_rate, double lambda,
                                          const PathSet& test, unsigned jobs);

/// Writes one frontier CSV (plus its Pareto subset) per key and per cost
/// rate for the baseline; retrain mode trains missing checkpoints.
std::vector<std::filesystem::path> cmd_sweep(const RunConfig& cfg, unsigned jobs, std::ostream& log);

// ---- report ----------------------------------------------------------------

/// Reads the frontier CSVs and writes comparison tables (text + CSV) and a
/// per-frontier summary to the report directory.
std::vector<std::filesystem::path> cmd_report(const RunConfig& cfg, std::ostream& log);

// ---- gradcheck -------------------------------------------------------------

/// Central-difference checks of the analytic gradients: quadratic toy,
/// dense and GRU policies over full episodes. Returns true when all pass.
bool cmd_gradcheck(std::ostream& log);

} // namespace ehf
