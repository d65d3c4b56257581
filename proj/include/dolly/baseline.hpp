#pragma once

#include <array>

#include "dolly/imaging.hpp"
#include "dolly/simenv.hpp"

namespace dolly {

/// Per-channel PD gains for the hand-tunable baseline controller. Channel
/// error sources are fixed: a1 from the area error, a2 and a3 from the
/// centroid-x error (pan with its own, typically smaller, gains), a4 from
/// the centroid-y error. Commands clamp to [-1, 1].
///
/// Defaults are the output of `dollyin tune-pd` (coordinate search on the
/// clean desk-profile simulator until the mean eval reward plateaus).
struct PDGains {
    double kp_throttle = 3.6;
    double kd_throttle = 0.0335;
    double kp_steer = 2.7;
    double kd_steer = 0.0268;
    double kp_pan = 0.08978;
    double kd_pan = 0.015;
    double kp_tilt = 0.6;
    double kd_tilt = 0.02;

    void validate() const;
};

/// One PD evaluation: clamp(kp * e + kd * (e - prev_e) / dt, -1, 1). The
/// derivative term is zero on the first step (pass first_step = true).
double pd_step(double error, double prev_error, double kp, double kd, double dt,
               bool first_step = false);

/// Stateful four-channel controller mapping shot metrics to actions.
/// Errors are normalized: area (target - A)/target, centroid
/// (measured - target)/(half frame). When the subject is lost the last
/// commands decay by 0.9 per step.
class PdController {
  public:
    PdController(PDGains gains, const EnvConfig& env_cfg);

    void reset();
    ActionVector act(const ShotMetrics& metrics, double dt);

    const PDGains& gains() const { return gains_; }

  private:
    PDGains gains_;
    double target_area_;
    double frame_width_;
    double frame_height_;
    double target_cx_;
    double target_cy_;
    std::array<double, 4> prev_error_{};
    std::array<double, 4> last_command_{};
    bool first_ = true;
};

}  // namespace dolly
