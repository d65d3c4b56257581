#pragma once

#include "dolly/imaging.hpp"
#include "dolly/simenv_types.hpp"

namespace dolly {

/// Weights and targets for the per-step reward components. All component
/// rewards are <= 0 with 0 exactly at the target condition, so cumulative
/// episode rewards are negative and closer to 0 is better.
struct RewardWeights {
    double w1 = 0.5;
    double w2 = 0.5;
    double w3 = 0.2;
    double k = 0.05;  // area threshold of the scaled-area reward
    double target_area = 0.10;
    double area_max = 0.60;
    double target_centroid_x = 60.0;  // pixels
    double target_centroid_y = 45.0;
    double frame_width = 120.0;
    double theta_max = 1.8;  // radians; offsets beyond this saturate at -1
    double smooth_coeff = 0.1;
    double smooth_threshold = 0.2;  // per-component action delta allowed for free
    // The published upper branch of the scaled-area reward is signed and
    // rewards overshoot; off by default, kept for fidelity experiments.
    bool signed_upper_branch = false;

    void validate() const;

    static RewardWeights combined_defaults();
    static RewardWeights complex_defaults();
};

/// Weighted term breakdown of the complex reward, for the trajectory log.
struct ComplexReward {
    double total = 0.0;
    double area_term = 0.0;
    double position_term = 0.0;
    double offset_term = 0.0;
    double smoothness_term = 0.0;
};

/// -|delta(area, target_area, area_max)|, in [-1, 0].
double r_area_original(double area, const RewardWeights& wts);

/// -|delta(centroid_x, target_x, frame_width)|, in [-1, 0].
double r_position(double centroid_x, const RewardWeights& wts, double frame_width);

/// Metrics-level wrapper: a lost subject earns the floor value -1.
double r_position(const ShotMetrics& metrics, const RewardWeights& wts);

/// Piecewise scaled-area reward: steep constant-offset branch below the
/// threshold k, proportional branch above it, maximum 0 at the target area.
double r_area_scaled(double area, const RewardWeights& wts);

/// Magnitude of the designed jump of r_area_scaled at the threshold k.
double r_area_scaled_discontinuity(const RewardWeights& wts);

/// w1 * r_area_scaled + w2 * r_position.
double r_combined(const ShotMetrics& metrics, const RewardWeights& wts);

/// -min(|theta| / theta_max, 1).
double r_object_offset(double theta, const RewardWeights& wts);

/// -smooth_coeff * sum over active components of max(0, |da| - threshold).
double smoothness_penalty(const ActionVector& curr, const ActionVector& prev,
                          const RewardWeights& wts);

/// Full reward of the complex agent with per-term breakdown.
ComplexReward r_complex(const ShotMetrics& metrics, double theta,
                        const ActionVector& curr, const ActionVector& prev,
                        const RewardWeights& wts);

}  // namespace dolly
