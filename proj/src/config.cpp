#include "dolly/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dolly {

namespace {

using nlohmann::json;

class StrictSection {
  public:
    StrictSection(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
        }
    }

    void get_seed(const char* key, std::uint64_t& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_number_unsigned() && !it->is_number_integer())
            throw ConfigError("config key '" + name_ + "." + key + "' must be an integer");
        out = it->get<std::uint64_t>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown config key '" + name_ + "." + it.key() + "'");
    }

  private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void parse_env(const json& j, EnvConfig& env) {
    StrictSection s(j, "env");
    s.get("frame_width", env.frame_width);
    s.get("frame_height", env.frame_height);
    s.get("fov_h", env.fov_h);
    s.get("dt", env.dt);
    s.get("max_speed", env.max_speed);
    s.get("max_turn_rate", env.max_turn_rate);
    s.get("max_pan_rate", env.max_pan_rate);
    s.get("max_tilt_rate", env.max_tilt_rate);
    s.get("pan_limit", env.pan_limit);
    s.get("tilt_limit", env.tilt_limit);
    s.get("episode_len", env.episode_len);
    s.get("arena_half_extent", env.arena_half_extent);
    s.get("subject_radius", env.subject_radius);
    s.get("subject_height", env.subject_height);
    s.get("camera_height", env.camera_height);
    s.get("start_standoff", env.start_standoff);
    s.get("start_lateral", env.start_lateral);
    s.get("start_jitter_pos", env.start_jitter_pos);
    s.get("start_jitter_heading", env.start_jitter_heading);
    s.get("target_area", env.target_area);
    s.get("area_max", env.area_max);
    std::string start = to_string(env.start_position);
    s.get("start_position", start);
    env.start_position = start_position_from_string(start);
    s.get("start_x", env.start_x);
    s.get("start_y", env.start_y);
    s.get("start_heading", env.start_heading);
    s.get_seed("rng_seed", env.rng_seed);
    s.finish();
}

void parse_perturbation(const json& j, PerturbationConfig& p) {
    StrictSection s(j, "perturbation");
    s.get("actuation_gain_std", p.actuation_gain_std);
    s.get("observation_noise_std", p.observation_noise_std);
    s.get("actuation_latency", p.actuation_latency);
    s.get("mask_dropout_prob", p.mask_dropout_prob);
    s.get_seed("rng_seed", p.rng_seed);
    s.finish();
}

void parse_rewards(const json& j, const char* name, RewardWeights& w) {
    StrictSection s(j, name);
    s.get("w1", w.w1);
    s.get("w2", w.w2);
    s.get("w3", w.w3);
    s.get("k", w.k);
    s.get("target_area", w.target_area);
    s.get("area_max", w.area_max);
    s.get("target_centroid_x", w.target_centroid_x);
    s.get("target_centroid_y", w.target_centroid_y);
    s.get("frame_width", w.frame_width);
    s.get("theta_max", w.theta_max);
    s.get("smooth_coeff", w.smooth_coeff);
    s.get("smooth_threshold", w.smooth_threshold);
    s.get("signed_upper_branch", w.signed_upper_branch);
    s.finish();
}

void parse_td3(const json& j, TD3Hyper& h) {
    StrictSection s(j, "td3");
    s.get("batch_size", h.batch_size);
    s.get("lr", h.lr);
    s.get("gamma", h.gamma);
    s.get("tau", h.tau);
    s.get("buffer_capacity", h.buffer_capacity);
    s.get("target_noise_std", h.target_noise_std);
    s.get("target_noise_clip", h.target_noise_clip);
    s.get("policy_delay", h.policy_delay);
    s.get("exploration_noise_std", h.exploration_noise_std);
    s.get("episodes", h.episodes);
    s.get("warmup_steps", h.warmup_steps);
    s.get("hidden1", h.hidden1);
    s.get("hidden2", h.hidden2);
    s.get("checkpoint_every", h.checkpoint_every);
    s.get("eval_every", h.eval_every);
    s.get("eval_episodes", h.eval_episodes);
    s.get("early_stop", h.early_stop);
    s.get("early_stop_epsilon", h.early_stop_epsilon);
    s.get("early_stop_patience", h.early_stop_patience);
    s.finish();
}

void parse_pd(const json& j, PDGains& g) {
    StrictSection s(j, "pd");
    s.get("kp_throttle", g.kp_throttle);
    s.get("kd_throttle", g.kd_throttle);
    s.get("kp_steer", g.kp_steer);
    s.get("kd_steer", g.kd_steer);
    s.get("kp_pan", g.kp_pan);
    s.get("kd_pan", g.kd_pan);
    s.get("kp_tilt", g.kp_tilt);
    s.get("kd_tilt", g.kd_tilt);
    s.finish();
}

json env_to_json(const EnvConfig& e) {
    json j;
    j["frame_width"] = e.frame_width;
    j["frame_height"] = e.frame_height;
    j["fov_h"] = e.fov_h;
    j["dt"] = e.dt;
    j["max_speed"] = e.max_speed;
    j["max_turn_rate"] = e.max_turn_rate;
    j["max_pan_rate"] = e.max_pan_rate;
    j["max_tilt_rate"] = e.max_tilt_rate;
    j["pan_limit"] = e.pan_limit;
    j["tilt_limit"] = e.tilt_limit;
    j["episode_len"] = e.episode_len;
    j["arena_half_extent"] = e.arena_half_extent;
    j["subject_radius"] = e.subject_radius;
    j["subject_height"] = e.subject_height;
    j["camera_height"] = e.camera_height;
    j["start_standoff"] = e.start_standoff;
    j["start_lateral"] = e.start_lateral;
    j["start_jitter_pos"] = e.start_jitter_pos;
    j["start_jitter_heading"] = e.start_jitter_heading;
    j["target_area"] = e.target_area;
    j["area_max"] = e.area_max;
    j["start_position"] = to_string(e.start_position);
    j["start_x"] = e.start_x;
    j["start_y"] = e.start_y;
    j["start_heading"] = e.start_heading;
    j["rng_seed"] = e.rng_seed;
    return j;
}

json rewards_to_json(const RewardWeights& w) {
    json j;
    j["w1"] = w.w1;
    j["w2"] = w.w2;
    j["w3"] = w.w3;
    j["k"] = w.k;
    j["target_area"] = w.target_area;
    j["area_max"] = w.area_max;
    j["target_centroid_x"] = w.target_centroid_x;
    j["target_centroid_y"] = w.target_centroid_y;
    j["frame_width"] = w.frame_width;
    j["theta_max"] = w.theta_max;
    j["smooth_coeff"] = w.smooth_coeff;
    j["smooth_threshold"] = w.smooth_threshold;
    j["signed_upper_branch"] = w.signed_upper_branch;
    return j;
}

}  // namespace

RunConfig profile_config(const std::string& profile) {
    RunConfig cfg;
    cfg.profile = profile;
    cfg.rewards_combined = RewardWeights::combined_defaults();
    cfg.rewards_complex = RewardWeights::complex_defaults();
    // theta_max defaults to half the FoV plus the pan limit: the largest
    // offset at which the subject can still be centred by panning alone.
    for (auto* w : {&cfg.rewards_combined, &cfg.rewards_complex}) {
        w->theta_max = 0.5 * cfg.env.fov_h + cfg.env.pan_limit;
        w->target_area = cfg.env.target_area;
        w->area_max = cfg.env.area_max;
        w->k = 0.5 * cfg.env.target_area;
        w->frame_width = cfg.env.frame_width;
        w->target_centroid_x = 0.5 * cfg.env.frame_width;
        w->target_centroid_y = 0.5 * cfg.env.frame_height;
    }
    // The reality stand-in used by the correlation study.
    cfg.perturbation.actuation_gain_std = 0.1;
    cfg.perturbation.observation_noise_std = 0.02;
    cfg.perturbation.actuation_latency = 1;
    cfg.perturbation.mask_dropout_prob = 0.05;

    if (profile == "paper") {
        cfg.env.episode_len = 1500;
        cfg.env.start_position = StartPosition::mixed;
        cfg.td3.episodes = 5000;
        cfg.td3.hidden1 = 400;
        cfg.td3.hidden2 = 300;
        cfg.td3.buffer_capacity = 10'000'000;
        cfg.td3.warmup_steps = 5000;
        cfg.td3.checkpoint_every = 500;
    } else if (profile == "desk") {
        cfg.env.episode_len = 200;
        cfg.env.start_position = StartPosition::mixed;
        cfg.td3.episodes = 300;
        cfg.td3.hidden1 = 64;
        cfg.td3.hidden2 = 64;
        cfg.td3.buffer_capacity = 100'000;
        cfg.td3.warmup_steps = 1000;
        cfg.td3.checkpoint_every = 100;
    } else {
        throw ConfigError("unknown profile '" + profile + "' (expected paper or desk)");
    }
    return cfg;
}

RunConfig parse_config_json(const std::string& text, const RunConfig& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    RunConfig cfg = base;
    static const std::set<std::string> known{"profile",          "env",  "perturbation",
                                             "rewards_combined", "rewards_complex",
                                             "td3",              "pd"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");

    if (j.contains("profile")) {
        if (!j["profile"].is_string()) throw ConfigError("config key 'profile' must be a string");
        const std::string p = j["profile"].get<std::string>();
        if (p != base.profile) cfg = profile_config(p);
    }
    if (j.contains("env")) parse_env(j["env"], cfg.env);
    if (j.contains("perturbation")) parse_perturbation(j["perturbation"], cfg.perturbation);
    if (j.contains("rewards_combined"))
        parse_rewards(j["rewards_combined"], "rewards_combined", cfg.rewards_combined);
    if (j.contains("rewards_complex"))
        parse_rewards(j["rewards_complex"], "rewards_complex", cfg.rewards_complex);
    if (j.contains("td3")) parse_td3(j["td3"], cfg.td3);
    if (j.contains("pd")) parse_pd(j["pd"], cfg.pd);
    return cfg;
}

RunConfig load_config_file(const std::string& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), base);
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["profile"] = cfg.profile;
    j["env"] = env_to_json(cfg.env);
    j["perturbation"] = {{"actuation_gain_std", cfg.perturbation.actuation_gain_std},
                         {"observation_noise_std", cfg.perturbation.observation_noise_std},
                         {"actuation_latency", cfg.perturbation.actuation_latency},
                         {"mask_dropout_prob", cfg.perturbation.mask_dropout_prob},
                         {"rng_seed", cfg.perturbation.rng_seed}};
    j["rewards_combined"] = rewards_to_json(cfg.rewards_combined);
    j["rewards_complex"] = rewards_to_json(cfg.rewards_complex);
    j["td3"] = {{"batch_size", cfg.td3.batch_size},
                {"lr", cfg.td3.lr},
                {"gamma", cfg.td3.gamma},
                {"tau", cfg.td3.tau},
                {"buffer_capacity", cfg.td3.buffer_capacity},
                {"target_noise_std", cfg.td3.target_noise_std},
                {"target_noise_clip", cfg.td3.target_noise_clip},
                {"policy_delay", cfg.td3.policy_delay},
                {"exploration_noise_std", cfg.td3.exploration_noise_std},
                {"episodes", cfg.td3.episodes},
                {"warmup_steps", cfg.td3.warmup_steps},
                {"hidden1", cfg.td3.hidden1},
                {"hidden2", cfg.td3.hidden2},
                {"checkpoint_every", cfg.td3.checkpoint_every},
                {"eval_every", cfg.td3.eval_every},
                {"eval_episodes", cfg.td3.eval_episodes},
                {"early_stop", cfg.td3.early_stop},
                {"early_stop_epsilon", cfg.td3.early_stop_epsilon},
                {"early_stop_patience", cfg.td3.early_stop_patience}};
    j["pd"] = {{"kp_throttle", cfg.pd.kp_throttle}, {"kd_throttle", cfg.pd.kd_throttle},
               {"kp_steer", cfg.pd.kp_steer},       {"kd_steer", cfg.pd.kd_steer},
               {"kp_pan", cfg.pd.kp_pan},           {"kd_pan", cfg.pd.kd_pan},
               {"kp_tilt", cfg.pd.kp_tilt},         {"kd_tilt", cfg.pd.kd_tilt}};
    return j.dump(2);
}

}  // namespace dolly
