#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "dolly/evalharness.hpp"

using namespace dolly;

namespace {

EnvConfig short_env(long episode_len = 60) {
    EnvConfig cfg;
    cfg.episode_len = episode_len;
    return cfg;
}

RunTrialsOptions base_opts(int trials, StartScheme starts = StartScheme::mixed) {
    RunTrialsOptions opts;
    opts.trials = trials;
    opts.starts = starts;
    opts.base_seed = 100;
    opts.metric = EvalMetric::combined;
    opts.weights = RewardWeights::combined_defaults();
    return opts;
}

PolicyFactory zero_factory() {
    return [] { return std::make_unique<ZeroPolicy>(); };
}

PolicyFactory pd_factory(const EnvConfig& env) {
    return [env] { return std::make_unique<PdPolicy>(PDGains{}, env); };
}

}  // namespace

TEST_SUITE_BEGIN("evalharness");

TEST_CASE("repeated trials with one seed are identical") {
    const EnvConfig env = short_env();
    RunTrialsOptions opts = base_opts(1, StartScheme::centre);

    const TrialResult a = run_trials(zero_factory(), env, opts).front();
    const TrialResult b = run_trials(zero_factory(), env, opts).front();
    CHECK(a.cum_reward == b.cum_reward);
    CHECK(a.final_area_percent == b.final_area_percent);
    CHECK(a.final_centroid_x == b.final_centroid_x);
    CHECK(a.seed == b.seed);
}

TEST_CASE("parallel workers reproduce the sequential result") {
    const EnvConfig env = short_env();
    RunTrialsOptions opts = base_opts(12);
    const std::vector<TrialResult> seq = run_trials(pd_factory(env), env, opts);
    opts.jobs = 4;
    const std::vector<TrialResult> par = run_trials(pd_factory(env), env, opts);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i].cum_reward == par[i].cum_reward);
        CHECK(seq[i].start == par[i].start);
    }
}

TEST_CASE("a blind zero policy accumulates the worst-case reward exactly") {
    // Start facing away: the subject is never visible, so every step earns
    // the floor of both components: w1 * -1 + w2 * -1 = -1.
    EnvConfig env = short_env(40);
    env.start_position = StartPosition::explicit_pose;
    env.start_x = -1.5;
    env.start_y = 0.0;
    env.start_heading = 3.14159;

    const RunTrialsOptions opts = base_opts(1, StartScheme::as_configured);
    const TrialResult r = run_trials(zero_factory(), env, opts).front();
    CHECK(r.final_area_percent == 0.0);
    CHECK(r.cum_reward == doctest::Approx(-static_cast<double>(env.episode_len)).epsilon(1e-12));
}

TEST_CASE("mixed scheme spreads 30 trials evenly over the three starts") {
    const EnvConfig env = short_env(20);
    const std::vector<TrialResult> results =
        run_trials(zero_factory(), env, base_opts(30, StartScheme::mixed));
    std::map<std::string, int> counts;
    for (const auto& r : results) counts[r.start] += 1;
    CHECK(counts["left"] == 10);
    CHECK(counts["right"] == 10);
    CHECK(counts["centre"] == 10);
}

TEST_CASE("per-position scheme groups trials in blocks") {
    const EnvConfig env = short_env(20);
    const std::vector<TrialResult> results =
        run_trials(zero_factory(), env, base_opts(30, StartScheme::per_position));
    for (int i = 0; i < 10; ++i) CHECK(results[static_cast<std::size_t>(i)].start == "left");
    for (int i = 10; i < 20; ++i) CHECK(results[static_cast<std::size_t>(i)].start == "right");
    for (int i = 20; i < 30; ++i) CHECK(results[static_cast<std::size_t>(i)].start == "centre");

    RunTrialsOptions bad = base_opts(31, StartScheme::per_position);
    CHECK_THROWS_AS(run_trials(zero_factory(), env, bad), std::invalid_argument);
}

TEST_CASE("summarize order statistics") {
    const SummaryStats s = summarize({5.0, 3.0, 1.0, 4.0, 2.0});
    CHECK(s.count == 5);
    CHECK(s.mean == 3.0);
    CHECK(s.median == 3.0);
    CHECK(s.q1 == 2.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.iqr == 2.0);
    CHECK(s.min == 1.0);
    CHECK(s.max == 5.0);

    const SummaryStats same = summarize({7.0, 7.0, 7.0});
    CHECK(same.iqr == 0.0);
    CHECK(same.mean == 7.0);

    CHECK(summarize({-120.0, -160.0}).mean == -140.0);
    CHECK_THROWS_AS(summarize({}), std::invalid_argument);

    // Quartiles interpolate linearly between order statistics.
    const SummaryStats q = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(q.q1 == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(q.median == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(q.q3 == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("summaries are permutation invariant") {
    std::vector<double> v{9.0, -3.0, 4.5, 0.0, 2.25, -7.125};
    const SummaryStats a = summarize(v);
    std::reverse(v.begin(), v.end());
    const SummaryStats b = summarize(v);
    CHECK(a.mean == b.mean);
    CHECK(a.median == b.median);
    CHECK(a.q1 == b.q1);
    CHECK(a.q3 == b.q3);
}

TEST_CASE("pearson correlation on a hand-computed three-pair series") {
    // x = {1,2,3}, y = {2,4,5}: Sxy = 3, Sxx = 2, Syy = 14/3.
    const Correlation c = pearson({1.0, 2.0, 3.0}, {2.0, 4.0, 5.0});
    REQUIRE(c.defined);
    CHECK(c.value == doctest::Approx(3.0 / std::sqrt(2.0 * 14.0 / 3.0)).epsilon(1e-12));

    // Symmetry and affine invariance.
    const Correlation swapped = pearson({2.0, 4.0, 5.0}, {1.0, 2.0, 3.0});
    CHECK(swapped.value == doctest::Approx(c.value).epsilon(1e-12));
    const Correlation scaled = pearson({1.0, 2.0, 3.0}, {2.0 * 7.0 - 1.0, 4.0 * 7.0 - 1.0, 5.0 * 7.0 - 1.0});
    CHECK(scaled.value == doctest::Approx(c.value).epsilon(1e-12));

    const Correlation flat = pearson({1.0, 1.0, 1.0}, {2.0, 4.0, 5.0});
    CHECK(!flat.defined);
}

TEST_CASE("spearman is exactly one for any monotone relation") {
    const Correlation c = spearman({1.0, 2.0, 3.0, 4.0}, {1.0, 8.0, 27.0, 64.0});
    REQUIRE(c.defined);
    CHECK(c.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero perturbation yields perfect correlations") {
    EnvConfig env = short_env(50);
    env.start_jitter_pos = 0.15;  // per-run variation so the series have variance
    env.start_jitter_heading = 0.1;

    RunTrialsOptions opts = base_opts(30, StartScheme::per_position);
    const std::vector<TrialResult> nominal = run_trials(pd_factory(env), env, opts);

    opts.perturbation = PerturbationConfig{};  // all magnitudes zero
    const std::vector<TrialResult> perturbed = run_trials(pd_factory(env), env, opts);

    const SRCCReport report = srcc(nominal, perturbed);
    REQUIRE(report.entries.size() == 12);  // 3 starts x 4 metrics
    for (const auto& e : report.entries) {
        CHECK(e.group_size == 10);
        REQUIRE(e.corr.defined);
        CHECK(std::abs(e.corr.value - 1.0) <= 1e-9);
        CHECK(e.nominal_mean == doctest::Approx(e.perturbed_mean).epsilon(1e-12));
    }
}

TEST_CASE("constant series are flagged undefined, not propagated as NaN") {
    std::vector<TrialResult> nominal(4), perturbed(4);
    for (int i = 0; i < 4; ++i) {
        nominal[static_cast<std::size_t>(i)].start = "left";
        nominal[static_cast<std::size_t>(i)].seed = static_cast<std::uint64_t>(i);
        nominal[static_cast<std::size_t>(i)].cum_reward = -100.0;  // zero variance
        nominal[static_cast<std::size_t>(i)].final_area_percent = 10.0 + i;
        perturbed[static_cast<std::size_t>(i)] = nominal[static_cast<std::size_t>(i)];
        perturbed[static_cast<std::size_t>(i)].cum_reward = -100.0 - i;
        perturbed[static_cast<std::size_t>(i)].final_area_percent = 9.0 + i;
    }
    const SRCCReport report = srcc(nominal, perturbed);
    for (const auto& e : report.entries) {
        if (e.metric == "cum_reward") CHECK(!e.corr.defined);
        if (e.metric == "final_area_percent") {
            REQUIRE(e.corr.defined);
            CHECK(std::isfinite(e.corr.value));
        }
    }
}

TEST_CASE("srcc rejects mismatched pairings") {
    std::vector<TrialResult> nominal(2), perturbed(2);
    nominal[0].seed = 1;
    nominal[1].seed = 2;
    perturbed[0].seed = 1;
    perturbed[1].seed = 99;  // no partner
    CHECK_THROWS_AS(srcc(nominal, perturbed), std::invalid_argument);

    perturbed[1].seed = 2;
    nominal[0].start = "left";
    perturbed[0].start = "right";  // grouping mismatch
    CHECK_THROWS_AS(srcc(nominal, perturbed), std::invalid_argument);
}

TEST_CASE("comparing a policy with itself gives identical columns") {
    const EnvConfig env = short_env(30);
    RunTrialsOptions opts = base_opts(6);
    const auto rows = compare({zero_factory(), zero_factory()}, env, opts);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].summary.cum_reward.mean == rows[1].summary.cum_reward.mean);
    CHECK(rows[0].summary.final_area_percent.median ==
          rows[1].summary.final_area_percent.median);
    // Identical seed sets underneath.
    for (std::size_t i = 0; i < rows[0].trials.size(); ++i)
        CHECK(rows[0].trials[i].seed == rows[1].trials[i].seed);
}

TEST_CASE("the tuned PD baseline beats doing nothing") {
    const EnvConfig env = short_env(80);
    RunTrialsOptions opts = base_opts(9);
    const auto rows = compare({pd_factory(env), zero_factory()}, env, opts);
    CHECK(rows[0].summary.cum_reward.mean > rows[1].summary.cum_reward.mean);
}

TEST_CASE("csv writers emit one row per trial and per metric") {
    const EnvConfig env = short_env(20);
    const std::vector<TrialResult> results =
        run_trials(zero_factory(), env, base_opts(3, StartScheme::centre));
    const std::string csv = trials_to_csv(results);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows

    const std::string summary = summary_to_csv({summarize_trials(results)});
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);  // header + 4 metrics
}

TEST_SUITE_END();
