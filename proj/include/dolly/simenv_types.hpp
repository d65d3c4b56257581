#pragma once

#include <array>

namespace dolly {

/// Ground-truth simulator state: differential-drive base pose, turret
/// angles, and the spherical subject.
struct WorldState {
    double robot_x = 0.0;
    double robot_y = 0.0;
    double robot_heading = 0.0;  // radians, CCW from +x
    double pan = 0.0;            // radians, positive pans the camera right
    double tilt = 0.0;           // radians, positive tilts the camera up
    double subject_x = 0.0;
    double subject_y = 0.0;
    double subject_z = 0.0;  // center height, meters
    double subject_radius = 0.0;
    double camera_height = 0.0;
    long t = 0;  // timestep index within the episode
};

/// Agent-facing state vector (Table-style channels s1..s9):
///   s1 subject area fraction          [0, 1]
///   s2 area error                     [-1, 1]
///   s3 centroid x, normalized         [0, 1]
///   s4 centroid x-error               [-1, 1]
///   s5 centroid y, normalized         [0, 1]
///   s6 centroid y-error               [-1, 1]
///   s7 pan / pan_limit                [-1, 1]
///   s8 tilt / tilt_limit              [-1, 1]
///   s9 subject offset angle / pi      [-1, 1]
struct Observation {
    std::array<double, 9> s{};

    double& operator[](int i) { return s[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return s[static_cast<std::size_t>(i)]; }

    double area() const { return s[0]; }
    double area_error() const { return s[1]; }
    double centroid_x() const { return s[2]; }
    double centroid_x_error() const { return s[3]; }
    double centroid_y() const { return s[4]; }
    double centroid_y_error() const { return s[5]; }
    double pan() const { return s[6]; }
    double tilt() const { return s[7]; }
    double offset_angle() const { return s[8]; }
};

/// Commanded actions in [-1, 1]:
///   a1 throttle (forward/backward), a2 steering (positive turns right),
///   a3 camera pan (positive pans right), a4 camera tilt (positive up).
/// Inactive channels (per agent configuration) are forced to exactly 0.
struct ActionVector {
    std::array<double, 4> a{};
    std::array<bool, 4> active{true, true, true, true};

    double throttle() const { return a[0]; }
    double steering() const { return a[1]; }
    double pan_rate() const { return a[2]; }
    double tilt_rate() const { return a[3]; }

    void apply_mask() {
        for (int i = 0; i < 4; ++i)
            if (!active[static_cast<std::size_t>(i)]) a[static_cast<std::size_t>(i)] = 0.0;
    }
};

}  // namespace dolly
