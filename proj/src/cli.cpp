#include "dolly/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dolly/config.hpp"
#include "dolly/evalharness.hpp"
#include "dolly/version.hpp"

namespace dolly::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

fs::path resolve_out_dir(const std::string& out) {
    fs::path p(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv("DOLLYIN_OUT_ROOT")) p = fs::path(root) / p;
    }
    return p;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

/// Shared flag-resolution state: profile defaults -> config file -> flags.
struct CommonOptions {
    std::string profile = "desk";
    std::string config_file;
    std::string out = "run";
    std::uint64_t seed = 0;
    std::map<std::string, std::string> flag_record;

    RunConfig resolve() const {
        RunConfig cfg = profile_config(profile);
        if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
        return cfg;
    }
};

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const CommonOptions& common, const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = common.seed;
    m["profile"] = common.profile;
    m["config_file"] = common.config_file;
    m["flags"] = common.flag_record;
    m["config"] = json::parse(config_to_json(cfg));
    m["out_dir"] = dir.string();
    m["outputs"] = outputs;
    const auto now = std::chrono::system_clock::now();
    m["created_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::string episode_csv_header() {
    return "episode,cum_reward,mean_area,mean_centroid_x,mean_centroid_y,critic1_loss,"
           "critic2_loss,actor_loss,learn_iterations\n";
}

std::string episode_csv_row(const EpisodeLogRow& r) {
    std::ostringstream os;
    os << r.episode << ',' << fmt(r.cum_reward) << ',' << fmt(r.mean_area) << ','
       << fmt(r.mean_centroid_x) << ',' << fmt(r.mean_centroid_y) << ',' << fmt(r.critic1_loss)
       << ',' << fmt(r.critic2_loss) << ',' << fmt(r.actor_loss) << ',' << r.learn_iterations
       << '\n';
    return os.str();
}

void save_agent_file(const fs::path& path, const Td3Agent& agent) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    agent.save_checkpoint(f);
}

Td3Agent load_agent_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint: " + path.string());
    return Td3Agent::load_checkpoint(f);
}

/// "pd", "zero", "random", a checkpoint path, or "pair:<throttle>,<steering>".
PolicyFactory make_policy_factory(const std::string& spec, const RunConfig& cfg) {
    if (spec == "zero") return [] { return std::make_unique<ZeroPolicy>(); };
    if (spec == "random") return [] { return std::make_unique<RandomPolicy>(); };
    if (spec == "pd") {
        const PDGains gains = cfg.pd;
        const EnvConfig env = cfg.env;
        return [gains, env] { return std::make_unique<PdPolicy>(gains, env); };
    }
    if (spec.rfind("pair:", 0) == 0) {
        const std::string rest = spec.substr(5);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw ConfigError("pair policy needs two checkpoint paths: pair:a,b");
        const fs::path throttle_path = rest.substr(0, comma);
        const fs::path steering_path = rest.substr(comma + 1);
        load_agent_file(throttle_path);  // fail fast on bad paths
        load_agent_file(steering_path);
        return [throttle_path, steering_path] {
            return std::make_unique<PairPolicy>(load_agent_file(throttle_path),
                                                load_agent_file(steering_path));
        };
    }
    const fs::path path = spec;
    Td3Agent probe = load_agent_file(path);  // validate once
    (void)probe;
    return [path] { return std::make_unique<ActorPolicy>(load_agent_file(path)); };
}

int cmd_train(const CommonOptions& common, const std::string& agent) {
    RunConfig cfg = common.resolve();
    const fs::path dir = resolve_out_dir(common.out);
    fs::create_directories(dir);

    const bool pair = agent == "independent-pair";
    if (!pair) agent_kind_from_string(agent);  // validates

    std::ofstream log(dir / "training_log.csv", std::ios::binary);
    log << episode_csv_header();
    std::ofstream eval_log(dir / "eval_log.csv", std::ios::binary);
    eval_log << "episode,mean_eval_reward\n";

    TrainCallbacks callbacks;
    callbacks.on_episode = [&](const EpisodeLogRow& r) {
        log << episode_csv_row(r);
        log.flush();
    };
    callbacks.on_eval = [&](const EvalLogRow& r) {
        eval_log << r.episode << ',' << fmt(r.mean_eval_reward) << '\n';
        eval_log.flush();
    };
    callbacks.on_checkpoint = [&](int episode, const Td3Agent& a, const Td3Agent* b) {
        const std::string suffix =
            episode < 0 ? std::string("final") : "ep" + std::to_string(episode + 1);
        if (b) {
            save_agent_file(dir / ("checkpoint_throttle_" + suffix + ".txt"), a);
            save_agent_file(dir / ("checkpoint_steering_" + suffix + ".txt"), *b);
        } else {
            save_agent_file(dir / ("checkpoint_" + suffix + ".txt"), a);
        }
    };

    std::vector<std::string> outputs{"training_log.csv", "eval_log.csv"};
    if (pair) {
        independent_pair_train(cfg.env, cfg.td3, cfg.rewards_combined, common.seed, callbacks);
        outputs.push_back("checkpoint_throttle_final.txt");
        outputs.push_back("checkpoint_steering_final.txt");
    } else {
        const AgentKind kind = agent_kind_from_string(agent);
        const RewardWeights& wts =
            kind == AgentKind::complex_agent ? cfg.rewards_complex : cfg.rewards_combined;
        train(cfg.env, kind, cfg.td3, wts, common.seed, callbacks);
        outputs.push_back("checkpoint_final.txt");
    }
    write_manifest(dir, "train", cfg, common, outputs);
    std::cout << "training run written to " << dir.string() << '\n';
    return 0;
}

int cmd_eval(const CommonOptions& common, const std::string& policy_spec, int trials,
             const std::string& starts, const std::string& metric, bool perturbed, int jobs,
             bool traces) {
    RunConfig cfg = common.resolve();
    const fs::path dir = resolve_out_dir(common.out);
    fs::create_directories(dir);

    RunTrialsOptions opts;
    opts.trials = trials;
    opts.starts = start_scheme_from_string(starts);
    opts.base_seed = common.seed;
    opts.metric = eval_metric_from_string(metric);
    opts.weights = opts.metric == EvalMetric::complex_metric ? cfg.rewards_complex
                                                             : cfg.rewards_combined;
    opts.jobs = jobs;
    if (perturbed) opts.perturbation = cfg.perturbation;
    if (traces) {
        fs::create_directories(dir / "traces");
        opts.trace_dir = (dir / "traces").string();
    }

    const PolicyFactory factory = make_policy_factory(policy_spec, cfg);
    const std::vector<TrialResult> results = run_trials(factory, cfg.env, opts);
    write_file(dir / "trials.csv", trials_to_csv(results));
    write_file(dir / "summary.csv", summary_to_csv({summarize_trials(results)}));
    write_manifest(dir, "eval", cfg, common, {"trials.csv", "summary.csv"});
    std::cout << summary_to_csv({summarize_trials(results)});
    return 0;
}

int cmd_compare(const CommonOptions& common, const std::vector<std::string>& policy_specs,
                int trials, const std::string& starts, const std::string& metric, int jobs) {
    RunConfig cfg = common.resolve();
    const fs::path dir = resolve_out_dir(common.out);
    fs::create_directories(dir);

    RunTrialsOptions opts;
    opts.trials = trials;
    opts.starts = start_scheme_from_string(starts);
    opts.base_seed = common.seed;
    opts.metric = eval_metric_from_string(metric);
    opts.weights = opts.metric == EvalMetric::complex_metric ? cfg.rewards_complex
                                                             : cfg.rewards_combined;
    opts.jobs = jobs;

    std::vector<PolicyFactory> factories;
    for (const auto& spec : policy_specs) factories.push_back(make_policy_factory(spec, cfg));
    const std::vector<ComparisonRow> rows = compare(factories, cfg.env, opts);

    std::vector<TrialSummary> summaries;
    std::string all_trials;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        summaries.push_back(rows[i].summary);
        const std::string csv = trials_to_csv(rows[i].trials);
        all_trials += i == 0 ? csv : csv.substr(csv.find('\n') + 1);
    }
    write_file(dir / "trials.csv", all_trials);
    write_file(dir / "comparison.csv", summary_to_csv(summaries));
    write_manifest(dir, "compare", cfg, common, {"trials.csv", "comparison.csv"});
    std::cout << summary_to_csv(summaries);
    return 0;
}

int cmd_srcc(const CommonOptions& common, const std::string& policy_spec, int trials,
             const std::string& metric, bool use_spearman, int jobs) {
    RunConfig cfg = common.resolve();
    if (trials % 3 != 0) throw ConfigError("srcc: --trials must be a multiple of 3");
    const fs::path dir = resolve_out_dir(common.out);
    fs::create_directories(dir);

    // The study needs per-run variation, so the protocol enables start
    // jitter even when the base config leaves it off.
    if (cfg.env.start_jitter_pos == 0.0 && cfg.env.start_jitter_heading == 0.0) {
        cfg.env.start_jitter_pos = 0.15;
        cfg.env.start_jitter_heading = 0.1;
    }

    RunTrialsOptions opts;
    opts.trials = trials;
    opts.starts = StartScheme::per_position;
    opts.base_seed = common.seed;
    opts.metric = eval_metric_from_string(metric);
    opts.weights = opts.metric == EvalMetric::complex_metric ? cfg.rewards_complex
                                                             : cfg.rewards_combined;
    opts.jobs = jobs;

    const PolicyFactory factory = make_policy_factory(policy_spec, cfg);
    const std::vector<TrialResult> nominal = run_trials(factory, cfg.env, opts);
    opts.perturbation = cfg.perturbation;
    const std::vector<TrialResult> perturbed = run_trials(factory, cfg.env, opts);

    const SRCCReport report = srcc(nominal, perturbed, use_spearman);
    write_file(dir / "nominal_trials.csv", trials_to_csv(nominal));
    write_file(dir / "perturbed_trials.csv", trials_to_csv(perturbed));
    write_file(dir / "srcc_report.csv", srcc_report_to_csv(report));
    write_file(dir / "srcc_report.txt", srcc_report_to_text(report));
    write_manifest(dir, "srcc", cfg, common,
                   {"nominal_trials.csv", "perturbed_trials.csv", "srcc_report.csv",
                    "srcc_report.txt"});
    std::cout << srcc_report_to_text(report);
    return 0;
}

int cmd_export(const std::string& run_dir_str, const std::string& out_str) {
    const fs::path run_dir(run_dir_str);
    const fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw ConfigError("export: no manifest.json in " + run_dir.string());
    const json manifest = json::parse(read_file(manifest_path));
    const std::string command = manifest.at("command").get<std::string>();

    const fs::path out = resolve_out_dir(out_str);
    fs::create_directories(out);

    std::vector<std::string> written;
    if (command == "train") {
        // Episode-indexed training curves (reward / area / centroid series).
        const std::string log = read_file(run_dir / "training_log.csv");
        std::istringstream is(log);
        std::string line;
        std::getline(is, line);  // header
        std::ostringstream curves;
        curves << "episode,cum_reward,mean_area,mean_centroid_x,mean_centroid_y\n";
        while (std::getline(is, line)) {
            std::istringstream row(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(row, field, ',')) fields.push_back(field);
            if (fields.size() < 5) continue;
            curves << fields[0] << ',' << fields[1] << ',' << fields[2] << ',' << fields[3] << ','
                   << fields[4] << '\n';
        }
        write_file(out / "training_curves.csv", curves.str());
        written.push_back("training_curves.csv");
        if (fs::exists(run_dir / "eval_log.csv")) {
            write_file(out / "eval_curve.csv", read_file(run_dir / "eval_log.csv"));
            written.push_back("eval_curve.csv");
        }
    } else if (command == "eval" || command == "compare") {
        // Box-plot statistics and the raw per-trial series.
        const fs::path summary = command == "eval" ? "summary.csv" : "comparison.csv";
        write_file(out / "boxplot_stats.csv", read_file(run_dir / summary));
        write_file(out / "trial_series.csv", read_file(run_dir / "trials.csv"));
        written.push_back("boxplot_stats.csv");
        written.push_back("trial_series.csv");
    } else if (command == "srcc") {
        write_file(out / "srcc_table.csv", read_file(run_dir / "srcc_report.csv"));
        written.push_back("srcc_table.csv");
    } else {
        throw ConfigError("export: unsupported run type '" + command + "'");
    }

    for (const auto& name : written) std::cout << "exported " << (out / name).string() << '\n';
    return 0;
}

int cmd_tune_pd(const CommonOptions& common, int trials, int rounds, int jobs) {
    RunConfig cfg = common.resolve();
    const fs::path dir = resolve_out_dir(common.out);
    fs::create_directories(dir);

    RunTrialsOptions opts;
    opts.trials = trials;
    opts.starts = StartScheme::mixed;
    opts.base_seed = common.seed;
    opts.metric = EvalMetric::complex_metric;
    opts.weights = cfg.rewards_complex;
    opts.jobs = jobs;

    const EnvConfig env = cfg.env;
    auto score = [&](const PDGains& gains) {
        const auto results = run_trials(
            [&] { return std::make_unique<PdPolicy>(gains, env); }, env, opts);
        return summarize_trials(results).cum_reward.mean;
    };

    PDGains best = cfg.pd;
    double best_score = score(best);
    std::cout << "initial mean reward " << fmt(best_score) << '\n';

    // Coordinate search: multiplicative probes per gain until no move helps.
    struct Knob { const char* name; double PDGains::* member; };
    const std::vector<Knob> knobs{
        {"kp_throttle", &PDGains::kp_throttle}, {"kd_throttle", &PDGains::kd_throttle},
        {"kp_steer", &PDGains::kp_steer},       {"kd_steer", &PDGains::kd_steer},
        {"kp_pan", &PDGains::kp_pan},           {"kd_pan", &PDGains::kd_pan},
        {"kp_tilt", &PDGains::kp_tilt},         {"kd_tilt", &PDGains::kd_tilt}};

    for (int round = 0; round < rounds; ++round) {
        bool improved = false;
        for (const auto& knob : knobs) {
            for (double factor : {1.5, 0.67}) {
                PDGains candidate = best;
                candidate.*(knob.member) = best.*(knob.member) * factor;
                const double s = score(candidate);
                if (s > best_score) {
                    best = candidate;
                    best_score = s;
                    improved = true;
                    std::cout << "round " << round << ": " << knob.name << " -> "
                              << fmt(best.*(knob.member)) << " (mean reward " << fmt(best_score)
                              << ")\n";
                }
            }
        }
        if (!improved) break;  // plateau
    }

    cfg.pd = best;
    json out;
    out["pd"] = {{"kp_throttle", best.kp_throttle}, {"kd_throttle", best.kd_throttle},
                 {"kp_steer", best.kp_steer},       {"kd_steer", best.kd_steer},
                 {"kp_pan", best.kp_pan},           {"kd_pan", best.kd_pan},
                 {"kp_tilt", best.kp_tilt},         {"kd_tilt", best.kd_tilt}};
    write_file(dir / "tuned_pd.json", out.dump(2) + "\n");
    write_manifest(dir, "tune-pd", cfg, common, {"tuned_pd.json"});
    std::cout << "tuned gains written to " << (dir / "tuned_pd.json").string() << " (mean reward "
              << fmt(best_score) << ")\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"dolly-in shot training and evaluation pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions common;
    std::string agent = "combined";
    std::string policy_spec;
    std::vector<std::string> policy_specs;
    std::string starts = "mixed";
    std::string metric = "combined";
    int trials = 100;
    int jobs = 1;
    bool perturbed = false;
    bool traces = false;
    bool use_spearman = false;
    std::string run_dir;
    int tune_rounds = 6;

    auto add_common = [&](CLI::App* cmd, bool needs_out = true) {
        cmd->add_option("--profile", common.profile, "configuration profile: paper or desk");
        cmd->add_option("--config", common.config_file, "JSON config file");
        cmd->add_option("--seed", common.seed, "master seed");
        if (needs_out) cmd->add_option("--out", common.out, "output directory")->required();
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a TD3 agent");
    add_common(train_cmd);
    train_cmd->add_option("--agent", agent,
                          "throttle | steering | combined | independent-pair | complex")
        ->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "run deterministic evaluation trials");
    add_common(eval_cmd);
    eval_cmd->add_option("--policy", policy_spec,
                         "checkpoint path, pair:<a>,<b>, pd, zero, or random")
        ->required();
    eval_cmd->add_option("--trials", trials, "number of trials");
    eval_cmd->add_option("--starts", starts, "left | right | centre | mixed | per-position-10");
    eval_cmd->add_option("--metric", metric, "combined | complex");
    eval_cmd->add_flag("--perturbed", perturbed, "evaluate on the perturbed simulator");
    eval_cmd->add_flag("--traces", traces, "write per-step trajectory CSVs");
    eval_cmd->add_option("--jobs", jobs, "parallel trial workers");

    CLI::App* compare_cmd = app.add_subcommand("compare", "evaluate several policies side by side");
    add_common(compare_cmd);
    compare_cmd->add_option("--policy", policy_specs, "policy spec (repeatable)")
        ->required()
        ->take_all();
    compare_cmd->add_option("--trials", trials, "number of trials per policy");
    compare_cmd->add_option("--starts", starts, "left | right | centre | mixed | per-position-10");
    compare_cmd->add_option("--metric", metric, "combined | complex");
    compare_cmd->add_option("--jobs", jobs, "parallel trial workers");

    CLI::App* srcc_cmd = app.add_subcommand("srcc", "paired nominal/perturbed correlation study");
    add_common(srcc_cmd);
    srcc_cmd->add_option("--policy", policy_spec, "checkpoint path, pair:<a>,<b>, or pd")
        ->required();
    srcc_cmd->add_option("--trials", trials, "total runs (split 3 ways by start)")
        ->default_val(30);
    srcc_cmd->add_option("--metric", metric, "combined | complex");
    srcc_cmd->add_flag("--spearman", use_spearman, "rank correlation instead of Pearson");
    srcc_cmd->add_option("--jobs", jobs, "parallel trial workers");

    CLI::App* export_cmd = app.add_subcommand("export", "export figure data from a run directory");
    export_cmd->add_option("--run", run_dir, "run directory with a manifest")->required();
    export_cmd->add_option("--out", common.out, "output directory")->required();

    CLI::App* tune_cmd = app.add_subcommand("tune-pd", "coordinate search over PD gains");
    add_common(tune_cmd);
    tune_cmd->add_option("--trials", trials, "trials per candidate")->default_val(9);
    tune_cmd->add_option("--rounds", tune_rounds, "max search rounds");
    tune_cmd->add_option("--jobs", jobs, "parallel trial workers");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    // Record explicit flags for the manifest.
    for (const CLI::App* sub : app.get_subcommands()) {
        for (const CLI::Option* opt : sub->get_options()) {
            if (opt->count() > 0 && !opt->get_name().empty())
                common.flag_record[opt->get_name()] = opt->results().empty()
                                                          ? std::string("true")
                                                          : opt->results().front();
        }
    }

    try {
        if (train_cmd->parsed()) return cmd_train(common, agent);
        if (eval_cmd->parsed())
            return cmd_eval(common, policy_spec, trials, starts, metric, perturbed, jobs, traces);
        if (compare_cmd->parsed())
            return cmd_compare(common, policy_specs, trials, starts, metric, jobs);
        if (srcc_cmd->parsed())
            return cmd_srcc(common, policy_spec, trials, metric, use_spearman, jobs);
        if (export_cmd->parsed()) return cmd_export(run_dir, common.out);
        if (tune_cmd->parsed()) return cmd_tune_pd(common, trials, tune_rounds, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}

}  // namespace dolly::cli
