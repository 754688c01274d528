#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ehf/errors.hpp"
#include "ehf/frontier.hpp"
#include "ehf/pipeline.hpp"
#include "ehf/run_config.hpp"

using namespace ehf;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ehf_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    return line;
}

const char* kSmallConfig = R"([scenario]
name = high_vol

[simulation]
n_train = 300
n_test = 120
seed = 19

[contract]
cost_rates = 0.02, 0.05

[sweep]
alpha_hi = 0.1
alpha_count = 5
mode = fast
summary_hi = 0.05

[policy]
architectures = dense, gru
hidden_width = 8
gru_units = 4

[forest]
n_trees = 5

[training]
epochs = 3
batch_size = 100
learning_rate = 0.005
)";

RunConfig small_config(const fs::path& out) {
    auto c = parse_run_config(kSmallConfig);
    c.out_dir = out;
    return c;
}

/// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return files;
}

void run_all(const RunConfig& cfg, unsigned jobs) {
    std::ostringstream log;
    cmd_simulate(cfg, jobs);
    cmd_label(cfg, jobs, log);
    cmd_train(cfg, jobs, log);
    cmd_sweep(cfg, jobs, log);
    cmd_report(cfg, log);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EHF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_config(const fs::path& file, const std::string& text) {
    std::ofstream(file) << text;
}

} // namespace

TEST(Simulate, RunTwiceGivesIdenticalBytes) {
    const auto dir = fresh_dir("sim_twice");
    const auto cfg_file = dir / "run.ini";
    write_config(cfg_file, "[simulation]\nn_train = 7\nn_test = 3\nseed = 7\n");
    for (const char* out : {"a", "b"}) {
        ASSERT_EQ(run_cli("simulate --config " + cfg_file.string() + " --out " + (dir / out).string()), kExitOk);
    }
    const auto a = snapshot(dir / "a"), b = snapshot(dir / "b");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a, b);
}

TEST(Simulate, ManifestChecksumGuardsReload) {
    const auto dir = fresh_dir("sim_checksum");
    auto cfg = small_config(dir);
    const auto paths = cmd_simulate(cfg, 2);
    EXPECT_EQ(load_run_paths(cfg), paths);

    RunConfig other = cfg;
    other.seed = 20;
    EXPECT_THROW(load_run_paths(other), ConfigError);

    const auto file = RunLayout(dir).paths();
    auto bytes = read_file(file);
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(file, std::ios::binary | std::ios::trunc) << bytes;
    EXPECT_THROW(load_run_paths(cfg), IoError);
}

TEST(Simulate, MissingInputsAreIoErrors) {
    const auto cfg = small_config(fresh_dir("missing"));
    std::ostringstream log;
    EXPECT_THROW(load_run_paths(cfg), IoError);
    EXPECT_THROW(cmd_label(cfg, 1, log), IoError);
    EXPECT_THROW(cmd_report(cfg, log), IoError);
    cmd_simulate(cfg, 1);
    EXPECT_THROW(cmd_train(cfg, 1, log), IoError);
    EXPECT_THROW(cmd_sweep(cfg, 1, log), IoError);
}

TEST(Pipeline, OutputsIndependentOfJobsAndRepeatable) {
    const auto a = fresh_dir("pipe_a"), b = fresh_dir("pipe_b");
    run_all(small_config(a), 1);
    run_all(small_config(b), 3);
    const auto sa = snapshot(a), sb = snapshot(b);
    EXPECT_EQ(sa, sb);
    for (const auto& [name, text] : sa) {
        if (name.ends_with(".csv")) EXPECT_EQ(text.find('\r'), std::string::npos) << name;
    }
}

TEST(Pipeline, FilesFollowTheSchemas) {
    const auto dir = fresh_dir("pipe_schema");
    const auto cfg = small_config(dir);
    run_all(cfg, 2);
    const RunLayout layout(dir);

    EXPECT_EQ(first_line(layout.label_csv()), "path_id,day,r1,r2,label,predicted");
    EXPECT_TRUE(fs::exists(layout.forest()));
    EXPECT_NE(read_file(layout.label_report()).find("majority"), std::string::npos);

    for (const auto& key : train_keys(cfg)) {
        const auto ckpt = layout.checkpoint(cfg, key, std::nullopt);
        EXPECT_EQ(checkpoint_architecture(ckpt), key.arch);
        const auto log = layout.training_log(cfg, key, std::nullopt);
        EXPECT_EQ(first_line(log), "epoch,train_objective,validation_objective");

        const auto tag = frontier_tag(cfg, to_string(key.arch), key.rf, key.cost_rate, key.lambda);
        EXPECT_EQ(first_line(layout.frontier(tag)), kFrontierCsvHeader);
        const auto points = read_frontier_csv(layout.frontier(tag));
        ASSERT_EQ(points.size(), 5u);
        for (const auto& p : points) {
            EXPECT_EQ(p.tag, tag);
            EXPECT_GE(p.avg_trades, 0.0);
            EXPECT_LE(p.avg_trades, 30.0);
        }
        EXPECT_LE(read_frontier_csv(layout.pareto(tag)).size(), points.size());
    }
    EXPECT_TRUE(fs::exists(layout.frontier(frontier_tag(cfg, "bsm", false, 0.05, 0.5))));
    for (const char* name : {"summary.csv", "rf_dense_l0.5.txt", "rf_gru_l0.5.csv", "architecture_rf0_l0.5.txt",
                             "baseline_dense_rf1_l0.5.csv"}) {
        EXPECT_TRUE(fs::exists(layout.report_dir() / name)) << name;
    }
    EXPECT_EQ(first_line(layout.report_dir() / "summary.csv"),
              "scenario,policy,rf,cost_rate,lambda,mode,alpha_lo,alpha_hi,n_points,avg_mean,avg_std,pareto_points");
}

TEST(Pipeline, ForestMeetsMajorityBaseline) {
    const auto dir = fresh_dir("pipe_forest");
    auto cfg = small_config(dir);
    cfg.n_train = 1500;
    cfg.n_test = 500;
    const auto split = split_paths(cfg, simulate_run_paths(cfg, 2));
    const auto outcome = fit_label_forest(cfg, split, 2);
    EXPECT_GE(outcome.test_report.accuracy, outcome.test_report.majority_baseline);
    EXPECT_GE(outcome.train_report.accuracy, outcome.train_report.majority_baseline);
}

TEST(Pipeline, TrainingLogObjectiveDecreases) {
    const auto dir = fresh_dir("pipe_train");
    auto cfg = small_config(dir);
    cfg.training.epochs = 6;
    const auto split = split_paths(cfg, simulate_run_paths(cfg, 1));
    for (auto arch : {Architecture::dense, Architecture::gru}) {
        const auto res = train_key(cfg, TrainKey{arch, false, 0.02, 0.5}, split.train, 0.0, nullptr);
        EXPECT_LT(res.log.back().train_objective, res.log.front().train_objective) << to_string(arch);
    }
}

TEST(Pipeline, RetrainModeTrainsOnePolicyPerAlpha) {
    const auto dir = fresh_dir("pipe_retrain");
    auto cfg = small_config(dir);
    cfg.mode = SweepMode::retrain;
    cfg.alpha_count = 3;
    cfg.summary_hi = 0.1;
    cfg.policies = {Architecture::dense};
    cfg.rf_variants = {false};
    cfg.cost_rates = {0.02};
    cfg.training.epochs = 1;
    std::ostringstream log;
    cmd_simulate(cfg, 1);
    cmd_sweep(cfg, 2, log);
    const RunLayout layout(dir);
    const TrainKey key{Architecture::dense, false, 0.02, 0.5};
    for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(layout.checkpoint(cfg, key, k)));
    const auto points = read_frontier_csv(layout.frontier(frontier_tag(cfg, "dense", false, 0.02, 0.5)));
    ASSERT_EQ(points.size(), 3u);
    for (const auto& p : points) EXPECT_EQ(p.tag.mode, SweepMode::retrain);
    const auto before = snapshot(dir);
    cmd_sweep(cfg, 1, log);
    EXPECT_EQ(snapshot(dir), before);
}

TEST(Cli, ExitCodesByFailureClass) {
    const auto dir = fresh_dir("exit_codes");
    const auto good = dir / "good.ini";
    write_config(good, std::string(kSmallConfig) + "\n[output]\ndir = " + (dir / "out").string() + "\n");
    const auto bad = dir / "bad.ini";
    write_config(bad, "[risk]\nlambda = 0.5\n");
    EXPECT_EQ(run_cli("--help"), kExitOk);
    EXPECT_EQ(run_cli(""), kExitConfig);
    EXPECT_EQ(run_cli("simulate --config " + bad.string()), kExitConfig);
    EXPECT_EQ(run_cli("simulate --config " + (dir / "absent.ini").string()), kExitConfig);
    EXPECT_EQ(run_cli("simulate --config " + good.string() + " --mode slow"), kExitConfig);
    EXPECT_EQ(run_cli("sweep --config " + good.string()), kExitIo);
    EXPECT_EQ(run_cli("simulate --config " + good.string() + " --jobs 2"), kExitOk);
    EXPECT_EQ(run_cli("label --config " + good.string() + " --seed 5"), kExitConfig);

    const auto blowup = dir / "blowup.ini";
    write_config(blowup, "[scenario]\nname = wild\nmodel = gbm\ngbm_mu = 1e6\ngbm_sigma = 0.2\n"
                         "[simulation]\nn_train = 50\nn_test = 10\n[forest]\nrf = off\n"
                         "[policy]\narchitectures = dense\n[training]\nepochs = 1\n[output]\ndir = " +
                             (dir / "wild").string() + "\n");
    ASSERT_EQ(run_cli("simulate --config " + blowup.string()), kExitOk);
    EXPECT_EQ(run_cli("train --config " + blowup.string()), kExitNumeric);
}

TEST(Cli, GradcheckPasses) {
    EXPECT_EQ(run_cli("gradcheck"), kExitOk);
}
