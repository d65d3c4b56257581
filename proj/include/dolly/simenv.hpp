#pragma once

#include <cstdint>
#include <deque>
#include <string>

#include "dolly/imaging.hpp"
#include "dolly/rng.hpp"
#include "dolly/simenv_types.hpp"

namespace dolly {

enum class StartPosition { left, right, centre, mixed, explicit_pose };

std::string to_string(StartPosition s);
StartPosition start_position_from_string(const std::string& s);

struct EnvConfig {
    // Camera
    int frame_width = 120;
    int frame_height = 90;
    double fov_h = 1.0;  // radians

    // Kinematics
    double dt = 0.05;           // seconds per step
    double max_speed = 0.5;     // m/s
    double max_turn_rate = 1.5; // rad/s
    double max_pan_rate = 1.0;  // rad/s
    double max_tilt_rate = 1.0; // rad/s
    double pan_limit = 1.3;     // radians
    double tilt_limit = 0.6;    // radians

    // Episode / arena
    long episode_len = 1500;
    double arena_half_extent = 3.0;  // arena is [-e, e] x [-e, e] meters

    // Task geometry: subject sits at the goal point (arena origin); the
    // robot starts at a lateral offset from the approach line, far enough
    // out that the initial area is ~1.5% of the frame.
    double subject_radius = 0.12;
    double subject_height = 0.30;  // center height
    double camera_height = 0.30;
    double start_standoff = 1.8;  // meters from the subject along -x
    double start_lateral = 0.5;   // meters; left starts at +y, right at -y

    // Per-episode start jitter (uniform), used by the Sim2Real-style study
    // so that repeated runs differ. Zero by default.
    double start_jitter_pos = 0.0;      // meters, each axis
    double start_jitter_heading = 0.0;  // radians

    // Shot goals
    double target_area = 0.10;
    double area_max = 0.60;

    StartPosition start_position = StartPosition::centre;
    // Explicit start pose, used when start_position == explicit_pose.
    double start_x = 0.0;
    double start_y = 0.0;
    double start_heading = 0.0;

    std::uint64_t rng_seed = 0;

    CameraIntrinsics camera() const { return CameraIntrinsics{frame_width, frame_height, fov_h}; }
    void validate() const;
};

/// Reality stand-in knobs layered on top of the clean simulator.
struct PerturbationConfig {
    double actuation_gain_std = 0.0;     // per-episode gain ~ N(1, std^2)
    double observation_noise_std = 0.0;  // additive per channel, re-clamped
    int actuation_latency = 0;           // steps of action delay
    double mask_dropout_prob = 0.0;      // per-pixel drop before moments
    std::uint64_t rng_seed = 0;

    bool is_zero() const {
        return actuation_gain_std == 0.0 && observation_noise_std == 0.0 &&
               actuation_latency == 0 && mask_dropout_prob == 0.0;
    }
    void validate() const;
};

/// Kinematic dolly-in world: unicycle base, pan-tilt turret, spherical
/// subject, binary-mask camera. One instance is single-threaded; instances
/// with independent seeds may run in parallel.
class Environment {
  public:
    explicit Environment(EnvConfig cfg);
    virtual ~Environment() = default;

    struct StepResult {
        Observation obs;
        ShotMetrics metrics;
        bool done = false;
    };

    /// Starts a fresh episode. Identical (config, seed) gives a bit-identical
    /// initial state. For the mixed scheme the start alternates
    /// left/right/centre with the seed.
    virtual Observation reset(std::uint64_t seed);

    /// Advances one timestep. Throws std::logic_error after the episode is
    /// done and std::invalid_argument for out-of-range action components.
    virtual StepResult step(const ActionVector& action);

    const EnvConfig& config() const { return cfg_; }
    const WorldState& world() const { return world_; }
    const BinaryMask& last_mask() const { return mask_; }
    const ShotMetrics& last_metrics() const { return metrics_; }
    const Observation& last_observation() const { return obs_; }
    bool episode_done() const { return world_.t >= cfg_.episode_len; }
    bool has_reset() const { return has_reset_; }
    StartPosition episode_start() const { return episode_start_; }

    /// Observation assembly from world + frame metrics; pure given its
    /// arguments plus the held-value state for invisible frames.
    Observation assemble_observation(const WorldState& world, const ShotMetrics& metrics) const;

  protected:
    // Perturbation hooks; the clean environment leaves both untouched.
    virtual void mutate_mask(BinaryMask&) {}
    virtual void mutate_observation(Observation&) {}

    void render_and_observe();
    CameraPose camera_pose() const;

    EnvConfig cfg_;
    CameraIntrinsics cam_;
    WorldState world_;
    BinaryMask mask_;
    ShotMetrics metrics_;
    Observation obs_;
    StartPosition episode_start_ = StartPosition::centre;
    bool has_reset_ = false;

    // Last-valid values held across frames with no visible subject.
    double held_centroid_x_ = 0.0;
    double held_centroid_y_ = 0.0;
    double held_alpha_ = 0.0;
    double last_s4_ = 0.0;
    double last_s6_ = 0.0;
};

/// Clean simulator plus actuation gain, action latency, observation noise,
/// and mask dropout; the "real world" of the correlation study.
class PerturbedEnvironment : public Environment {
  public:
    PerturbedEnvironment(EnvConfig cfg, PerturbationConfig pcfg);

    Observation reset(std::uint64_t seed) override;
    StepResult step(const ActionVector& action) override;

    const PerturbationConfig& perturbation() const { return pcfg_; }
    double episode_gain() const { return episode_gain_; }

  protected:
    void mutate_mask(BinaryMask& mask) override;
    void mutate_observation(Observation& obs) override;

  private:
    PerturbationConfig pcfg_;
    Rng rng_;
    double episode_gain_ = 1.0;
    std::deque<ActionVector> pending_;
};

}  // namespace dolly
