#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dolly/baseline.hpp"
#include "dolly/rewards.hpp"
#include "dolly/simenv.hpp"
#include "dolly/td3.hpp"

namespace dolly {

/// A deterministic per-episode controller under evaluation.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string id() const = 0;
    virtual void reset(std::uint64_t seed) { (void)seed; }
    virtual ActionVector act(const Observation& obs, const ShotMetrics& metrics) = 0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

class ZeroPolicy : public Policy {
  public:
    std::string id() const override { return "zero"; }
    ActionVector act(const Observation&, const ShotMetrics&) override { return ActionVector{}; }
};

class RandomPolicy : public Policy {
  public:
    std::string id() const override { return "random"; }
    void reset(std::uint64_t seed) override { rng_ = Rng(derive_seed(seed, 0x7a2d)); }
    ActionVector act(const Observation&, const ShotMetrics&) override;

  private:
    Rng rng_;
};

class PdPolicy : public Policy {
  public:
    PdPolicy(PDGains gains, const EnvConfig& env_cfg)
        : controller_(gains, env_cfg), dt_(env_cfg.dt) {}
    std::string id() const override { return "pd"; }
    void reset(std::uint64_t) override { controller_.reset(); }
    ActionVector act(const Observation&, const ShotMetrics& metrics) override {
        return controller_.act(metrics, dt_);
    }

  private:
    PdController controller_;
    double dt_;
};

/// Deterministic actor of a trained TD3 agent.
class ActorPolicy : public Policy {
  public:
    explicit ActorPolicy(Td3Agent agent) : agent_(std::move(agent)) {}
    std::string id() const override { return "td3-" + to_string(agent_.agent_config().kind); }
    ActionVector act(const Observation& obs, const ShotMetrics&) override;

  private:
    Td3Agent agent_;
};

/// Throttle + steering agents acting simultaneously.
class PairPolicy : public Policy {
  public:
    PairPolicy(Td3Agent throttle, Td3Agent steering)
        : throttle_(std::move(throttle)), steering_(std::move(steering)) {}
    std::string id() const override { return "td3-independent"; }
    ActionVector act(const Observation& obs, const ShotMetrics&) override;

  private:
    Td3Agent throttle_;
    Td3Agent steering_;
};

enum class EvalMetric { combined, complex_metric };

std::string to_string(EvalMetric m);
EvalMetric eval_metric_from_string(const std::string& s);

/// Trial start assignment: a fixed position for every trial, mixed
/// (round-robin with the seed), consecutive blocks of n/3 per position, or
/// whatever the environment config already says.
enum class StartScheme { left, right, centre, mixed, per_position, as_configured };

std::string to_string(StartScheme s);
StartScheme start_scheme_from_string(const std::string& s);

struct TrialResult {
    std::string policy_id;
    std::string start;  // left / right / centre
    std::uint64_t seed = 0;
    double cum_reward = 0.0;
    double final_area_percent = 0.0;
    double final_centroid_x = 0.0;  // pixels
    double final_centroid_y = 0.0;
    std::string trace_path;  // empty unless a per-step trace was written
};

struct RunTrialsOptions {
    int trials = 100;
    StartScheme starts = StartScheme::mixed;
    std::uint64_t base_seed = 0;
    EvalMetric metric = EvalMetric::combined;
    RewardWeights weights;
    std::optional<PerturbationConfig> perturbation;  // engaged when present
    int jobs = 1;
    std::string trace_dir;  // write per-step trace CSVs here when non-empty
};

/// Runs n deterministic episodes with seeds base_seed .. base_seed + n - 1.
std::vector<TrialResult> run_trials(const PolicyFactory& make_policy, const EnvConfig& env_cfg,
                                    const RunTrialsOptions& opts);

struct SummaryStats {
    int count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Order statistics with linearly interpolated quartiles.
SummaryStats summarize(const std::vector<double>& values);

/// Per-metric summaries over a trial set.
struct TrialSummary {
    std::string policy_id;
    SummaryStats cum_reward;
    SummaryStats final_area_percent;
    SummaryStats final_centroid_x;
    SummaryStats final_centroid_y;
};

TrialSummary summarize_trials(const std::vector<TrialResult>& results);

struct Correlation {
    double value = 0.0;
    bool defined = false;  // false when either series has zero variance
};

Correlation pearson(const std::vector<double>& a, const std::vector<double>& b);
Correlation spearman(const std::vector<double>& a, const std::vector<double>& b);

/// One row of the correlation study: a start position and a metric.
struct SRCCEntry {
    std::string start;
    std::string metric;
    double nominal_mean = 0.0;
    double perturbed_mean = 0.0;
    Correlation corr;
    int group_size = 0;
};

struct SRCCReport {
    std::vector<SRCCEntry> entries;  // 3 starts x 4 metrics
    bool spearman = false;
};

/// Pairs nominal and perturbed runs by seed within each start-position
/// group and correlates each metric across the pairs.
SRCCReport srcc(const std::vector<TrialResult>& nominal,
                const std::vector<TrialResult>& perturbed, bool use_spearman = false);

struct ComparisonRow {
    TrialSummary summary;
    std::vector<TrialResult> trials;
};

/// Evaluates several policies on identical seed sets.
std::vector<ComparisonRow> compare(const std::vector<PolicyFactory>& policies,
                                   const EnvConfig& env_cfg, const RunTrialsOptions& opts);

/// CSV writers shared by the CLI and tests.
std::string trials_to_csv(const std::vector<TrialResult>& results);
std::string summary_to_csv(const std::vector<TrialSummary>& summaries);
std::string srcc_report_to_csv(const SRCCReport& report);
std::string srcc_report_to_text(const SRCCReport& report);

}  // namespace dolly
