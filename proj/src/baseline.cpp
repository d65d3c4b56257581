#include "dolly/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dolly {

void PDGains::validate() const {
    for (double g : {kp_throttle, kd_throttle, kp_steer, kd_steer, kp_pan, kd_pan, kp_tilt,
                     kd_tilt})
        if (!std::isfinite(g)) throw std::invalid_argument("pd gains must be finite");
}

double pd_step(double error, double prev_error, double kp, double kd, double dt,
               bool first_step) {
    if (!(dt > 0.0)) throw std::invalid_argument("pd_step: dt must be positive");
    const double derivative = first_step ? 0.0 : (error - prev_error) / dt;
    return std::clamp(kp * error + kd * derivative, -1.0, 1.0);
}

PdController::PdController(PDGains gains, const EnvConfig& env_cfg)
    : gains_(gains),
      target_area_(env_cfg.target_area),
      frame_width_(env_cfg.frame_width),
      frame_height_(env_cfg.frame_height),
      target_cx_(0.5 * env_cfg.frame_width),
      target_cy_(0.5 * env_cfg.frame_height) {
    gains_.validate();
}

void PdController::reset() {
    prev_error_.fill(0.0);
    last_command_.fill(0.0);
    first_ = true;
}

ActionVector PdController::act(const ShotMetrics& metrics, double dt) {
    ActionVector out;
    if (!metrics.subject_visible) {
        // Hold course, decaying, until the subject reappears.
        for (auto& c : last_command_) c *= 0.9;
        out.a = last_command_;
        return out;
    }

    // Signed errors: too-small subject drives forward; subject left of
    // centre steers/pans left (negative); subject below centre tilts down.
    const double e_area = (target_area_ - metrics.area_frac) / target_area_;
    const double e_cx = (metrics.centroid_x - target_cx_) / (0.5 * frame_width_);
    const double e_cy = (target_cy_ - metrics.centroid_y) / (0.5 * frame_height_);

    const std::array<double, 4> errors{e_area, e_cx, e_cx, e_cy};
    out.a[0] = pd_step(errors[0], prev_error_[0], gains_.kp_throttle, gains_.kd_throttle, dt, first_);
    out.a[1] = pd_step(errors[1], prev_error_[1], gains_.kp_steer, gains_.kd_steer, dt, first_);
    out.a[2] = pd_step(errors[2], prev_error_[2], gains_.kp_pan, gains_.kd_pan, dt, first_);
    out.a[3] = pd_step(errors[3], prev_error_[3], gains_.kp_tilt, gains_.kd_tilt, dt, first_);

    prev_error_ = errors;
    last_command_ = out.a;
    first_ = false;
    return out;
}

}  // namespace dolly
