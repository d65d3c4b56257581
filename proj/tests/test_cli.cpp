#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dolly/cli.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE_MESSAGE(f.good(), "missing file: " << p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dolly_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

// Tiny training configuration so CLI tests stay fast.
std::string write_tiny_config(const TempDir& dir) {
    const std::string path = dir / "tiny.json";
    std::ofstream f(path);
    f << R"({
  "env": {"episode_len": 30},
  "td3": {"episodes": 2, "warmup_steps": 20, "batch_size": 16,
           "hidden1": 8, "hidden2": 8, "buffer_capacity": 2000,
           "eval_every": 0, "checkpoint_every": 0}
})";
    return path;
}

int run_cli(std::initializer_list<std::string> args) {
    return dolly::cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("train writes a manifest, log, and checkpoint") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out = tmp / "run";
    CHECK(run_cli({"train", "--agent", "combined", "--profile", "desk", "--config", cfg,
                   "--seed", "7", "--out", out}) == 0);
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    CHECK(fs::exists(fs::path(out) / "training_log.csv"));
    CHECK(fs::exists(fs::path(out) / "checkpoint_final.txt"));

    const std::string manifest = slurp(fs::path(out) / "manifest.json");
    CHECK(manifest.find("\"command\": \"train\"") != std::string::npos);
    CHECK(manifest.find("\"--seed\": \"7\"") != std::string::npos);
}

TEST_CASE("repeated training runs are byte-identical") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out1 = tmp / "a";
    const std::string out2 = tmp / "b";
    REQUIRE(run_cli({"train", "--agent", "combined", "--config", cfg, "--seed", "3", "--out",
                     out1}) == 0);
    REQUIRE(run_cli({"train", "--agent", "combined", "--config", cfg, "--seed", "3", "--out",
                     out2}) == 0);
    CHECK(slurp(fs::path(out1) / "training_log.csv") == slurp(fs::path(out2) / "training_log.csv"));
    CHECK(slurp(fs::path(out1) / "checkpoint_final.txt") ==
          slurp(fs::path(out2) / "checkpoint_final.txt"));
}

TEST_CASE("independent pair training writes two checkpoints") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out = tmp / "pair";
    REQUIRE(run_cli({"train", "--agent", "independent-pair", "--config", cfg, "--seed", "5",
                     "--out", out}) == 0);
    CHECK(fs::exists(fs::path(out) / "checkpoint_throttle_final.txt"));
    CHECK(fs::exists(fs::path(out) / "checkpoint_steering_final.txt"));
}

TEST_CASE("eval works without any trained artifact") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out = tmp / "eval";
    CHECK(run_cli({"eval", "--policy", "zero", "--trials", "3", "--starts", "centre",
                   "--config", cfg, "--seed", "11", "--out", out}) == 0);
    const std::string trials = slurp(fs::path(out) / "trials.csv");
    CHECK(std::count(trials.begin(), trials.end(), '\n') == 4);
}

TEST_CASE("identical eval invocations produce identical bytes") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out1 = tmp / "e1";
    const std::string out2 = tmp / "e2";
    REQUIRE(run_cli({"eval", "--policy", "pd", "--trials", "4", "--starts", "mixed", "--config",
                     cfg, "--seed", "2", "--out", out1}) == 0);
    REQUIRE(run_cli({"eval", "--policy", "pd", "--trials", "4", "--starts", "mixed", "--config",
                     cfg, "--seed", "2", "--out", out2}) == 0);
    CHECK(slurp(fs::path(out1) / "trials.csv") == slurp(fs::path(out2) / "trials.csv"));
    CHECK(slurp(fs::path(out1) / "summary.csv") == slurp(fs::path(out2) / "summary.csv"));
}

TEST_CASE("per-position scheme emits 30 rows grouped 10/10/10") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string out = tmp / "grouped";
    REQUIRE(run_cli({"eval", "--policy", "zero", "--trials", "30", "--starts",
                     "per-position-10", "--config", cfg, "--seed", "0", "--out", out}) == 0);
    std::istringstream is(slurp(fs::path(out) / "trials.csv"));
    std::string line;
    std::getline(is, line);  // header
    int row = 0;
    while (std::getline(is, line)) {
        const std::string want = row < 10 ? "left" : row < 20 ? "right" : "centre";
        CHECK(line.find("," + want + ",") != std::string::npos);
        row += 1;
    }
    CHECK(row == 30);
}

TEST_CASE("srcc with a zeroed perturbation profile reports all ones") {
    TempDir tmp;
    TempDir out_tmp;
    const std::string cfg_path = tmp / "srcc.json";
    {
        std::ofstream f(cfg_path);
        f << R"({
  "env": {"episode_len": 40},
  "perturbation": {"actuation_gain_std": 0.0, "observation_noise_std": 0.0,
                    "actuation_latency": 0, "mask_dropout_prob": 0.0}
})";
    }
    const std::string out = out_tmp / "srcc";
    REQUIRE(run_cli({"srcc", "--policy", "pd", "--trials", "30", "--config", cfg_path, "--seed",
                     "21", "--out", out}) == 0);
    std::istringstream is(slurp(fs::path(out) / "srcc_report.csv"));
    std::string line;
    std::getline(is, line);  // header
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(line.find(",10,") != std::string::npos);  // group size
        CHECK(line.find(",1,pearson") != std::string::npos);  // corr 1, defined
        rows += 1;
    }
    CHECK(rows == 12);
}

TEST_CASE("export rewrites figure data and is idempotent") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string run = tmp / "run";
    REQUIRE(run_cli({"train", "--agent", "throttle", "--config", cfg, "--seed", "1", "--out",
                     run}) == 0);

    const std::string out = tmp / "fig";
    REQUIRE(run_cli({"export", "--run", run, "--out", out}) == 0);
    const std::string first = slurp(fs::path(out) / "training_curves.csv");
    CHECK(first.find("episode,cum_reward,mean_area") == 0);

    REQUIRE(run_cli({"export", "--run", run, "--out", out}) == 0);
    CHECK(slurp(fs::path(out) / "training_curves.csv") == first);
}

TEST_CASE("export refuses a directory without a manifest") {
    TempDir tmp;
    const std::string empty = tmp / "nothing";
    fs::create_directories(empty);
    CHECK(run_cli({"export", "--run", empty, "--out", tmp / "out"}) == 2);
}

TEST_CASE("config errors exit with code 2") {
    TempDir tmp;
    const std::string bad = tmp / "bad.json";
    {
        std::ofstream f(bad);
        f << R"({"td3": {"episodes": 2, "no_such_knob": 1}})";
    }
    CHECK(run_cli({"train", "--agent", "combined", "--config", bad, "--seed", "0", "--out",
                   tmp / "x"}) == 2);

    // Unknown agent kind and missing checkpoint are config errors too.
    const std::string cfg = write_tiny_config(tmp);
    CHECK(run_cli({"train", "--agent", "warp", "--config", cfg, "--seed", "0", "--out",
                   tmp / "y"}) == 2);
    CHECK(run_cli({"eval", "--policy", tmp / "missing.txt", "--trials", "1", "--config", cfg,
                   "--seed", "0", "--out", tmp / "z"}) == 2);
    CHECK(run_cli({"eval", "--policy", "zero", "--starts", "sideways", "--trials", "1",
                   "--config", cfg, "--seed", "0", "--out", tmp / "w"}) == 2);

    // Unknown flags are parse errors.
    CHECK(run_cli({"train", "--agent", "combined", "--frobnicate", "--out", tmp / "v"}) != 0);
}

TEST_CASE("eval on a trained checkpoint and compare against pd") {
    TempDir tmp;
    const std::string cfg = write_tiny_config(tmp);
    const std::string run = tmp / "run";
    REQUIRE(run_cli({"train", "--agent", "combined", "--config", cfg, "--seed", "9", "--out",
                     run}) == 0);
    const std::string ckpt = (fs::path(run) / "checkpoint_final.txt").string();

    const std::string out = tmp / "cmp";
    REQUIRE(run_cli({"compare", "--policy", ckpt, "pd", "zero", "--trials", "3", "--config",
                     cfg, "--seed", "4", "--out", out}) == 0);
    const std::string comparison = slurp(fs::path(out) / "comparison.csv");
    CHECK(comparison.find("td3-combined") != std::string::npos);
    CHECK(comparison.find("pd,") != std::string::npos);
    CHECK(comparison.find("zero,") != std::string::npos);
}

TEST_SUITE_END();
