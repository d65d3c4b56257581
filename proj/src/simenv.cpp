#include "dolly/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dolly {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double clamp_signed(double v) { return clamp(v, -1.0, 1.0); }

}  // namespace

std::string to_string(StartPosition s) {
    switch (s) {
        case StartPosition::left: return "left";
        case StartPosition::right: return "right";
        case StartPosition::centre: return "centre";
        case StartPosition::mixed: return "mixed";
        case StartPosition::explicit_pose: return "explicit";
    }
    return "?";
}

StartPosition start_position_from_string(const std::string& s) {
    if (s == "left") return StartPosition::left;
    if (s == "right") return StartPosition::right;
    if (s == "centre" || s == "center") return StartPosition::centre;
    if (s == "mixed") return StartPosition::mixed;
    if (s == "explicit") return StartPosition::explicit_pose;
    throw std::invalid_argument("unknown start position: " + s);
}

void EnvConfig::validate() const {
    camera().validate();
    if (!(dt > 0.0)) throw std::invalid_argument("env: dt must be positive");
    if (episode_len < 1) throw std::invalid_argument("env: episode_len must be >= 1");
    if (!(target_area > 0.0) || !(target_area < area_max) || !(area_max <= 1.0))
        throw std::invalid_argument("env: need 0 < target_area < area_max <= 1");
    if (!(subject_radius > 0.0)) throw std::invalid_argument("env: subject radius must be positive");
    if (!(pan_limit > 0.0) || !(tilt_limit > 0.0))
        throw std::invalid_argument("env: pan/tilt limits must be positive");
    if (!(arena_half_extent > 0.0)) throw std::invalid_argument("env: arena extent must be positive");

    const double e = arena_half_extent;
    auto inside = [&](double x, double y) { return std::abs(x) <= e && std::abs(y) <= e; };
    const double margin = std::max(start_jitter_pos, 0.0);
    switch (start_position) {
        case StartPosition::explicit_pose:
            if (!inside(start_x, start_y))
                throw std::invalid_argument("env: explicit start outside arena bounds");
            break;
        case StartPosition::centre:
            if (!inside(-start_standoff - margin, 0.0))
                throw std::invalid_argument("env: start placement outside arena bounds");
            break;
        default:
            if (!inside(-start_standoff - margin, start_lateral + margin))
                throw std::invalid_argument("env: start placement outside arena bounds");
            break;
    }
}

void PerturbationConfig::validate() const {
    if (actuation_gain_std < 0.0 || observation_noise_std < 0.0)
        throw std::invalid_argument("perturbation: noise stds must be >= 0");
    if (actuation_latency < 0) throw std::invalid_argument("perturbation: latency must be >= 0");
    if (mask_dropout_prob < 0.0 || mask_dropout_prob >= 1.0)
        throw std::invalid_argument("perturbation: dropout must lie in [0, 1)");
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)), cam_(cfg_.camera()) {
    cfg_.validate();
}

CameraPose Environment::camera_pose() const {
    CameraPose pose;
    pose.x = world_.robot_x;
    pose.y = world_.robot_y;
    pose.z = world_.camera_height;
    // Pan is positive to the right (clockwise seen from above), so the
    // camera yaw in world CCW convention subtracts it.
    pose.yaw = world_.robot_heading - world_.pan;
    pose.pitch = world_.tilt;
    return pose;
}

Observation Environment::reset(std::uint64_t seed) {
    StartPosition start = cfg_.start_position;
    if (start == StartPosition::mixed) {
        switch (seed % 3) {
            case 0: start = StartPosition::left; break;
            case 1: start = StartPosition::right; break;
            default: start = StartPosition::centre; break;
        }
    }
    episode_start_ = start;

    world_ = WorldState{};
    world_.subject_x = 0.0;
    world_.subject_y = 0.0;
    world_.subject_z = cfg_.subject_height;
    world_.subject_radius = cfg_.subject_radius;
    world_.camera_height = cfg_.camera_height;

    switch (start) {
        case StartPosition::left:
            world_.robot_x = -cfg_.start_standoff;
            world_.robot_y = cfg_.start_lateral;
            break;
        case StartPosition::right:
            world_.robot_x = -cfg_.start_standoff;
            world_.robot_y = -cfg_.start_lateral;
            break;
        case StartPosition::centre:
            world_.robot_x = -cfg_.start_standoff;
            world_.robot_y = 0.0;
            break;
        case StartPosition::explicit_pose:
            world_.robot_x = cfg_.start_x;
            world_.robot_y = cfg_.start_y;
            world_.robot_heading = cfg_.start_heading;
            break;
        case StartPosition::mixed: break;  // resolved above
    }

    if (cfg_.start_jitter_pos > 0.0 || cfg_.start_jitter_heading > 0.0) {
        Rng jitter(derive_seed(seed ^ cfg_.rng_seed, 0x6a17));
        world_.robot_x += jitter.uniform(-cfg_.start_jitter_pos, cfg_.start_jitter_pos);
        world_.robot_y += jitter.uniform(-cfg_.start_jitter_pos, cfg_.start_jitter_pos);
        world_.robot_heading += jitter.uniform(-cfg_.start_jitter_heading, cfg_.start_jitter_heading);
        // The turret never starts perfectly level either.
        world_.pan = clamp(jitter.uniform(-cfg_.start_jitter_heading, cfg_.start_jitter_heading),
                           -cfg_.pan_limit, cfg_.pan_limit);
        world_.tilt = clamp(0.5 * jitter.uniform(-cfg_.start_jitter_heading, cfg_.start_jitter_heading),
                            -cfg_.tilt_limit, cfg_.tilt_limit);
        const double e = cfg_.arena_half_extent;
        world_.robot_x = clamp(world_.robot_x, -e, e);
        world_.robot_y = clamp(world_.robot_y, -e, e);
    }

    held_centroid_x_ = 0.5 * cfg_.frame_width;
    held_centroid_y_ = 0.5 * cfg_.frame_height;
    held_alpha_ = 0.0;
    last_s4_ = 0.0;
    last_s6_ = 0.0;
    has_reset_ = true;

    render_and_observe();
    return obs_;
}

void Environment::render_and_observe() {
    mask_ = render_mask(camera_pose(), Subject{world_.subject_x, world_.subject_y,
                                               world_.subject_z, world_.subject_radius},
                        cam_);
    mutate_mask(mask_);
    const Moments m = compute_moments(mask_);
    metrics_ = shot_metrics(m, mask_, cam_, world_.pan);
    if (metrics_.subject_visible) {
        held_centroid_x_ = metrics_.centroid_x;
        held_centroid_y_ = metrics_.centroid_y;
        held_alpha_ = metrics_.camera_offset;
    } else {
        // Hold the last sighting; theta still tracks the live pan angle.
        metrics_.centroid_x = held_centroid_x_;
        metrics_.centroid_y = held_centroid_y_;
        metrics_.camera_offset = held_alpha_;
        metrics_.pixel_offset = held_centroid_x_ - cam_.midpoint_px();
        metrics_.subject_offset = subject_offset_angle(held_alpha_, world_.pan);
    }
    obs_ = assemble_observation(world_, metrics_);
    mutate_observation(obs_);
    last_s4_ = obs_[3];
    last_s6_ = obs_[5];
}

Observation Environment::assemble_observation(const WorldState& world,
                                              const ShotMetrics& metrics) const {
    Observation o;
    const double w = cfg_.frame_width;
    const double h = cfg_.frame_height;
    o[0] = metrics.area_frac;
    o[2] = clamp(metrics.centroid_x / w, 0.0, 1.0);
    o[4] = clamp(metrics.centroid_y / h, 0.0, 1.0);
    if (metrics.subject_visible) {
        o[1] = clamp_signed((metrics.area_frac - cfg_.target_area) / cfg_.target_area);
        o[3] = clamp_signed((metrics.centroid_x - 0.5 * w) / (0.5 * w));
        o[5] = clamp_signed((metrics.centroid_y - 0.5 * h) / (0.5 * h));
    } else {
        // Saturate the error channels at their worst value, keeping the
        // direction of the last sighting.
        o[1] = -1.0;
        o[3] = last_s4_ >= 0.0 ? 1.0 : -1.0;
        o[5] = last_s6_ >= 0.0 ? 1.0 : -1.0;
    }
    o[6] = clamp_signed(world.pan / cfg_.pan_limit);
    o[7] = clamp_signed(world.tilt / cfg_.tilt_limit);
    o[8] = clamp_signed(metrics.subject_offset / 3.14159265358979323846);
    return o;
}

Environment::StepResult Environment::step(const ActionVector& action) {
    if (!has_reset_) throw std::logic_error("step before reset");
    if (episode_done()) throw std::logic_error("step after episode end");
    for (int i = 0; i < 4; ++i) {
        const double v = action.a[static_cast<std::size_t>(i)];
        if (!(v >= -1.0 && v <= 1.0))
            throw std::invalid_argument("action component outside [-1, 1]");
    }

    ActionVector a = action;
    a.apply_mask();

    const double v = a.throttle() * cfg_.max_speed;
    // Positive steering turns clockwise (subject drifts left in frame).
    const double omega = -a.steering() * cfg_.max_turn_rate;

    world_.robot_x += v * std::cos(world_.robot_heading) * cfg_.dt;
    world_.robot_y += v * std::sin(world_.robot_heading) * cfg_.dt;
    world_.robot_heading += omega * cfg_.dt;

    const double e = cfg_.arena_half_extent;
    world_.robot_x = clamp(world_.robot_x, -e, e);
    world_.robot_y = clamp(world_.robot_y, -e, e);

    world_.pan = clamp(world_.pan + a.pan_rate() * cfg_.max_pan_rate * cfg_.dt,
                       -cfg_.pan_limit, cfg_.pan_limit);
    world_.tilt = clamp(world_.tilt + a.tilt_rate() * cfg_.max_tilt_rate * cfg_.dt,
                        -cfg_.tilt_limit, cfg_.tilt_limit);

    world_.t += 1;
    render_and_observe();

    StepResult out;
    out.obs = obs_;
    out.metrics = metrics_;
    out.done = world_.t >= cfg_.episode_len;
    return out;
}

PerturbedEnvironment::PerturbedEnvironment(EnvConfig cfg, PerturbationConfig pcfg)
    : Environment(std::move(cfg)), pcfg_(pcfg) {
    pcfg_.validate();
}

Observation PerturbedEnvironment::reset(std::uint64_t seed) {
    // Nominal and perturbed runs share the environment seed; only this
    // stream differs between them.
    rng_ = Rng(derive_seed(pcfg_.rng_seed, seed));
    episode_gain_ = pcfg_.actuation_gain_std > 0.0
                        ? rng_.normal(1.0, pcfg_.actuation_gain_std)
                        : 1.0;
    pending_.clear();
    return Environment::reset(seed);
}

PerturbedEnvironment::StepResult PerturbedEnvironment::step(const ActionVector& action) {
    ActionVector effective = action;
    if (pcfg_.actuation_latency > 0) {
        pending_.push_back(action);
        if (static_cast<int>(pending_.size()) <= pcfg_.actuation_latency) {
            effective = ActionVector{};  // zero-action prefix
            effective.active = action.active;
        } else {
            effective = pending_.front();
            pending_.pop_front();
        }
    }
    for (auto& v : effective.a) v = std::clamp(v * episode_gain_, -1.0, 1.0);
    return Environment::step(effective);
}

void PerturbedEnvironment::mutate_mask(BinaryMask& mask) {
    if (pcfg_.mask_dropout_prob <= 0.0) return;
    for (auto& bit : mask.bits)
        if (bit && rng_.uniform01() < pcfg_.mask_dropout_prob) bit = 0;
}

void PerturbedEnvironment::mutate_observation(Observation& obs) {
    if (pcfg_.observation_noise_std <= 0.0) return;
    for (int i = 0; i < 9; ++i) obs[i] += rng_.normal(0.0, pcfg_.observation_noise_std);
    obs[0] = clamp(obs[0], 0.0, 1.0);
    obs[2] = clamp(obs[2], 0.0, 1.0);
    obs[4] = clamp(obs[4], 0.0, 1.0);
    for (int i : {1, 3, 5, 6, 7, 8}) obs[i] = clamp_signed(obs[i]);
}

}  // namespace dolly
