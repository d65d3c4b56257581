#include "dolly/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dolly {

void RewardWeights::validate() const {
    if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0)
        throw std::invalid_argument("reward weights must be non-negative");
    if (!(k > 0.0) || !(k < target_area) || !(target_area < area_max))
        throw std::invalid_argument("rewards: need 0 < k < target_area < area_max");
    if (!(theta_max > 0.0)) throw std::invalid_argument("rewards: theta_max must be positive");
    if (smooth_coeff < 0.0 || smooth_threshold < 0.0)
        throw std::invalid_argument("rewards: smoothness parameters must be non-negative");
}

RewardWeights RewardWeights::combined_defaults() {
    RewardWeights w;
    w.w1 = 0.5;
    w.w2 = 0.5;
    return w;
}

RewardWeights RewardWeights::complex_defaults() {
    RewardWeights w;
    w.w1 = 0.4;
    w.w2 = 0.4;
    w.w3 = 0.2;
    return w;
}

double r_area_original(double area, const RewardWeights& wts) {
    DeltaParams p{wts.target_area, wts.area_max};
    return -std::abs(delta_metric(area, p));
}

double r_position(double centroid_x, const RewardWeights& wts, double frame_width) {
    DeltaParams p{wts.target_centroid_x, frame_width};
    return -std::abs(delta_metric(centroid_x, p));
}

double r_position(const ShotMetrics& metrics, const RewardWeights& wts) {
    if (!metrics.subject_visible) return -1.0;
    return r_position(metrics.centroid_x, wts, wts.frame_width);
}

double r_area_scaled(double area, const RewardWeights& wts) {
    if (area < 0.0 || area > wts.area_max)
        throw std::invalid_argument("r_area_scaled: area outside [0, area_max]");
    if (area <= wts.k) return -0.5 + (std::abs(area - wts.k) / wts.k) * (-0.5);
    if (wts.signed_upper_branch) return (area - wts.target_area) / wts.target_area * 0.5;
    return -(std::abs(area - wts.target_area) / wts.target_area) * 0.5;
}

double r_area_scaled_discontinuity(const RewardWeights& wts) {
    const double below = -0.5;
    const double above = -(std::abs(wts.k - wts.target_area) / wts.target_area) * 0.5;
    return std::abs(above - below);
}

double r_combined(const ShotMetrics& metrics, const RewardWeights& wts) {
    return wts.w1 * r_area_scaled(metrics.area_frac, wts) + wts.w2 * r_position(metrics, wts);
}

double r_object_offset(double theta, const RewardWeights& wts) {
    return -std::min(std::abs(theta) / wts.theta_max, 1.0);
}

double smoothness_penalty(const ActionVector& curr, const ActionVector& prev,
                          const RewardWeights& wts) {
    double excess = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (!curr.active[static_cast<std::size_t>(i)]) continue;
        const double d = std::abs(curr.a[static_cast<std::size_t>(i)] -
                                  prev.a[static_cast<std::size_t>(i)]);
        excess += std::max(0.0, d - wts.smooth_threshold);
    }
    return -wts.smooth_coeff * excess;
}

ComplexReward r_complex(const ShotMetrics& metrics, double theta,
                        const ActionVector& curr, const ActionVector& prev,
                        const RewardWeights& wts) {
    ComplexReward r;
    r.area_term = wts.w1 * r_area_scaled(metrics.area_frac, wts);
    r.position_term = wts.w2 * r_position(metrics, wts);
    r.offset_term = wts.w3 * r_object_offset(theta, wts);
    r.smoothness_term = smoothness_penalty(curr, prev, wts);
    r.total = r.area_term + r.position_term + r.offset_term + r.smoothness_term;
    return r;
}

}  // namespace dolly
