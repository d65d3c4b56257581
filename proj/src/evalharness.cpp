#include "dolly/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dolly {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

ActionVector RandomPolicy::act(const Observation&, const ShotMetrics&) {
    ActionVector v;
    for (auto& a : v.a) a = rng_.uniform(-1.0, 1.0);
    return v;
}

ActionVector ActorPolicy::act(const Observation& obs, const ShotMetrics&) {
    const AgentConfig& cfg = agent_.agent_config();
    return cfg.to_env_action(agent_.select_action(cfg.project_state(obs), false));
}

ActionVector PairPolicy::act(const Observation& obs, const ShotMetrics&) {
    const std::vector<double> at =
        throttle_.select_action(throttle_.agent_config().project_state(obs), false);
    const std::vector<double> as =
        steering_.select_action(steering_.agent_config().project_state(obs), false);
    ActionVector merged;
    merged.active = {true, true, false, false};
    merged.a = {at[0], as[0], 0.0, 0.0};
    return merged;
}

std::string to_string(EvalMetric m) {
    return m == EvalMetric::combined ? "combined" : "complex";
}

EvalMetric eval_metric_from_string(const std::string& s) {
    if (s == "combined") return EvalMetric::combined;
    if (s == "complex") return EvalMetric::complex_metric;
    throw std::invalid_argument("unknown eval metric: " + s);
}

std::string to_string(StartScheme s) {
    switch (s) {
        case StartScheme::left: return "left";
        case StartScheme::right: return "right";
        case StartScheme::centre: return "centre";
        case StartScheme::mixed: return "mixed";
        case StartScheme::per_position: return "per-position-10";
        case StartScheme::as_configured: return "as-configured";
    }
    return "?";
}

StartScheme start_scheme_from_string(const std::string& s) {
    if (s == "left") return StartScheme::left;
    if (s == "right") return StartScheme::right;
    if (s == "centre" || s == "center") return StartScheme::centre;
    if (s == "mixed") return StartScheme::mixed;
    if (s == "per-position-10" || s == "per-position") return StartScheme::per_position;
    if (s == "as-configured") return StartScheme::as_configured;
    throw std::invalid_argument("unknown start scheme: " + s);
}

namespace {

StartPosition trial_start(StartScheme scheme, int index, int total) {
    switch (scheme) {
        case StartScheme::left: return StartPosition::left;
        case StartScheme::right: return StartPosition::right;
        case StartScheme::centre: return StartPosition::centre;
        case StartScheme::mixed: return StartPosition::mixed;  // env derives from seed
        case StartScheme::as_configured: return StartPosition::centre;  // unused
        case StartScheme::per_position: {
            const int block = total / 3;
            if (index < block) return StartPosition::left;
            if (index < 2 * block) return StartPosition::right;
            return StartPosition::centre;
        }
    }
    return StartPosition::centre;
}

double metric_reward(EvalMetric metric, const ShotMetrics& m, const ActionVector& curr,
                     const ActionVector& prev, const RewardWeights& wts) {
    ShotMetrics clamped = m;
    clamped.area_frac = std::min(clamped.area_frac, wts.area_max);
    if (metric == EvalMetric::combined) return r_combined(clamped, wts);
    return r_complex(clamped, clamped.subject_offset, curr, prev, wts).total;
}

TrialResult run_one_trial(Policy& policy, const EnvConfig& env_cfg,
                          const RunTrialsOptions& opts, int index) {
    EnvConfig cfg = env_cfg;
    const StartScheme scheme = opts.starts;
    if (scheme == StartScheme::mixed)
        cfg.start_position = StartPosition::mixed;
    else if (scheme != StartScheme::as_configured)
        cfg.start_position = trial_start(scheme, index, opts.trials);

    std::unique_ptr<Environment> env;
    if (opts.perturbation)
        env = std::make_unique<PerturbedEnvironment>(cfg, *opts.perturbation);
    else
        env = std::make_unique<Environment>(cfg);

    const std::uint64_t seed = opts.base_seed + static_cast<std::uint64_t>(index);
    policy.reset(seed);
    Observation obs = env->reset(seed);

    std::ofstream trace;
    const std::string trace_path =
        opts.trace_dir.empty() ? ""
                               : opts.trace_dir + "/trial_" + std::to_string(index) + ".csv";
    if (!trace_path.empty()) {
        trace.open(trace_path);
        trace << "t,a1,a2,a3,a4,s1,s2,s3,s4,s5,s6,s7,s8,s9,reward,r_area,r_position,r_offset,"
                 "r_smooth\n";
    }

    TrialResult result;
    result.policy_id = policy.id();
    result.start = to_string(env->episode_start());
    result.seed = seed;
    result.trace_path = trace_path;

    ActionVector prev;
    ShotMetrics metrics = env->last_metrics();
    while (!env->episode_done()) {
        const ActionVector action = policy.act(obs, metrics);
        const auto res = env->step(action);
        const double reward = metric_reward(opts.metric, res.metrics, action, prev, opts.weights);
        result.cum_reward += reward;

        if (trace.is_open()) {
            ShotMetrics cm = res.metrics;
            cm.area_frac = std::min(cm.area_frac, opts.weights.area_max);
            const ComplexReward br =
                r_complex(cm, cm.subject_offset, action, prev, opts.weights);
            trace << env->world().t;
            for (double a : action.a) trace << ',' << fmt(a);
            for (int i = 0; i < 9; ++i) trace << ',' << fmt(res.obs[i]);
            trace << ',' << fmt(reward) << ',' << fmt(br.area_term) << ','
                  << fmt(br.position_term) << ',' << fmt(br.offset_term) << ','
                  << fmt(br.smoothness_term) << '\n';
        }

        prev = action;
        obs = res.obs;
        metrics = res.metrics;
    }

    result.final_area_percent = 100.0 * metrics.area_frac;
    result.final_centroid_x = metrics.centroid_x;
    result.final_centroid_y = metrics.centroid_y;
    return result;
}

}  // namespace

std::vector<TrialResult> run_trials(const PolicyFactory& make_policy, const EnvConfig& env_cfg,
                                    const RunTrialsOptions& opts) {
    if (opts.trials < 1) throw std::invalid_argument("run_trials: need at least one trial");
    if (opts.starts == StartScheme::per_position && opts.trials % 3 != 0)
        throw std::invalid_argument("run_trials: per-position scheme needs a multiple of 3");

    std::vector<TrialResult> results(static_cast<std::size_t>(opts.trials));
    const int jobs = std::max(1, std::min(opts.jobs, opts.trials));
    if (jobs == 1) {
        auto policy = make_policy();
        for (int i = 0; i < opts.trials; ++i)
            results[static_cast<std::size_t>(i)] = run_one_trial(*policy, env_cfg, opts, i);
        return results;
    }

    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&]() {
            auto policy = make_policy();
            for (int i = next.fetch_add(1); i < opts.trials; i = next.fetch_add(1))
                results[static_cast<std::size_t>(i)] = run_one_trial(*policy, env_cfg, opts, i);
        });
    }
    for (auto& t : workers) t.join();
    return results;
}

SummaryStats summarize(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty input");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    auto quantile = [&](double q) {
        // Linear interpolation between order statistics.
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };

    SummaryStats s;
    s.count = static_cast<int>(sorted.size());
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    s.median = quantile(0.5);
    s.q1 = quantile(0.25);
    s.q3 = quantile(0.75);
    s.iqr = s.q3 - s.q1;
    s.min = sorted.front();
    s.max = sorted.back();
    return s;
}

TrialSummary summarize_trials(const std::vector<TrialResult>& results) {
    if (results.empty()) throw std::invalid_argument("summarize_trials: empty input");
    TrialSummary out;
    out.policy_id = results.front().policy_id;
    auto pull = [&](auto getter) {
        std::vector<double> v;
        v.reserve(results.size());
        for (const auto& r : results) v.push_back(getter(r));
        return summarize(v);
    };
    out.cum_reward = pull([](const TrialResult& r) { return r.cum_reward; });
    out.final_area_percent = pull([](const TrialResult& r) { return r.final_area_percent; });
    out.final_centroid_x = pull([](const TrialResult& r) { return r.final_centroid_x; });
    out.final_centroid_y = pull([](const TrialResult& r) { return r.final_centroid_y; });
    return out;
}

Correlation pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("pearson: series length mismatch");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    Correlation c;
    if (saa <= 0.0 || sbb <= 0.0) return c;  // zero variance: undefined
    c.defined = true;
    c.value = sab / std::sqrt(saa * sbb);
    return c;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
        i = j + 1;
    }
    return r;
}

}  // namespace

Correlation spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(ranks(a), ranks(b));
}

SRCCReport srcc(const std::vector<TrialResult>& nominal,
                const std::vector<TrialResult>& perturbed, bool use_spearman) {
    if (nominal.size() != perturbed.size() || nominal.empty())
        throw std::invalid_argument("srcc: trial sets must be non-empty and equally sized");

    using Group = std::vector<std::pair<const TrialResult*, const TrialResult*>>;
    std::map<std::string, Group> groups;
    {
        std::map<std::uint64_t, const TrialResult*> by_seed;
        for (const auto& p : perturbed) by_seed[p.seed] = &p;
        for (const auto& n : nominal) {
            auto it = by_seed.find(n.seed);
            if (it == by_seed.end())
                throw std::invalid_argument("srcc: seed pairing mismatch between trial sets");
            if (it->second->start != n.start)
                throw std::invalid_argument("srcc: start grouping mismatch between trial sets");
            groups[n.start].emplace_back(&n, it->second);
        }
    }

    const std::vector<std::pair<std::string, double TrialResult::*>> metrics{
        {"cum_reward", &TrialResult::cum_reward},
        {"final_area_percent", &TrialResult::final_area_percent},
        {"final_centroid_x", &TrialResult::final_centroid_x},
        {"final_centroid_y", &TrialResult::final_centroid_y},
    };

    SRCCReport report;
    report.spearman = use_spearman;
    for (const auto& [start, group] : groups) {
        for (const auto& [name, member] : metrics) {
            std::vector<double> nom, per;
            nom.reserve(group.size());
            per.reserve(group.size());
            for (const auto& [n, p] : group) {
                nom.push_back(n->*member);
                per.push_back(p->*member);
            }
            SRCCEntry entry;
            entry.start = start;
            entry.metric = name;
            entry.group_size = static_cast<int>(group.size());
            entry.nominal_mean =
                std::accumulate(nom.begin(), nom.end(), 0.0) / static_cast<double>(nom.size());
            entry.perturbed_mean =
                std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
            entry.corr = use_spearman ? spearman(nom, per) : pearson(nom, per);
            report.entries.push_back(std::move(entry));
        }
    }
    return report;
}

std::vector<ComparisonRow> compare(const std::vector<PolicyFactory>& policies,
                                   const EnvConfig& env_cfg, const RunTrialsOptions& opts) {
    std::vector<ComparisonRow> rows;
    for (const auto& factory : policies) {
        ComparisonRow row;
        row.trials = run_trials(factory, env_cfg, opts);  // identical seed sets per policy
        row.summary = summarize_trials(row.trials);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string trials_to_csv(const std::vector<TrialResult>& results) {
    std::ostringstream os;
    os << "policy,start,seed,cum_reward,final_area_percent,final_centroid_x,final_centroid_y,"
          "trace\n";
    for (const auto& r : results) {
        os << r.policy_id << ',' << r.start << ',' << r.seed << ',' << fmt(r.cum_reward) << ','
           << fmt(r.final_area_percent) << ',' << fmt(r.final_centroid_x) << ','
           << fmt(r.final_centroid_y) << ',' << r.trace_path << '\n';
    }
    return os.str();
}

namespace {

void summary_row(std::ostringstream& os, const std::string& policy, const std::string& metric,
                 const SummaryStats& s) {
    os << policy << ',' << metric << ',' << s.count << ',' << fmt(s.mean) << ',' << fmt(s.median)
       << ',' << fmt(s.q1) << ',' << fmt(s.q3) << ',' << fmt(s.iqr) << ',' << fmt(s.min) << ','
       << fmt(s.max) << '\n';
}

}  // namespace

std::string summary_to_csv(const std::vector<TrialSummary>& summaries) {
    std::ostringstream os;
    os << "policy,metric,count,mean,median,q1,q3,iqr,min,max\n";
    for (const auto& s : summaries) {
        summary_row(os, s.policy_id, "cum_reward", s.cum_reward);
        summary_row(os, s.policy_id, "final_area_percent", s.final_area_percent);
        summary_row(os, s.policy_id, "final_centroid_x", s.final_centroid_x);
        summary_row(os, s.policy_id, "final_centroid_y", s.final_centroid_y);
    }
    return os.str();
}

std::string srcc_report_to_csv(const SRCCReport& report) {
    std::ostringstream os;
    os << "start,metric,group_size,nominal_mean,perturbed_mean,correlation,defined,estimator\n";
    for (const auto& e : report.entries) {
        os << e.start << ',' << e.metric << ',' << e.group_size << ',' << fmt(e.nominal_mean)
           << ',' << fmt(e.perturbed_mean) << ','
           << (e.corr.defined ? fmt(e.corr.value) : std::string("undefined")) << ','
           << (e.corr.defined ? 1 : 0) << ',' << (report.spearman ? "spearman" : "pearson")
           << '\n';
    }
    return os.str();
}

std::string srcc_report_to_text(const SRCCReport& report) {
    std::ostringstream os;
    os << "Correlation study: nominal simulator vs perturbed stand-in ("
       << (report.spearman ? "Spearman" : "Pearson") << ", n per group as listed)\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %-22s %4s %14s %14s %12s\n", "start", "metric", "n",
                  "nominal", "perturbed", "corr");
    os << buf;
    for (const auto& e : report.entries) {
        if (e.corr.defined)
            std::snprintf(buf, sizeof buf, "%-8s %-22s %4d %14.4f %14.4f %12.4f\n",
                          e.start.c_str(), e.metric.c_str(), e.group_size, e.nominal_mean,
                          e.perturbed_mean, e.corr.value);
        else
            std::snprintf(buf, sizeof buf, "%-8s %-22s %4d %14.4f %14.4f %12s\n", e.start.c_str(),
                          e.metric.c_str(), e.group_size, e.nominal_mean, e.perturbed_mean,
                          "undefined");
        os << buf;
    }
    return os.str();
}

}  // namespace dolly
