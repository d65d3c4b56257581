#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace dolly {

/// Fixed camera parameters of the simulated turret webcam.
struct CameraIntrinsics {
    int width_px = 120;
    int height_px = 90;
    double fov_h = 1.0;  // horizontal field of view, radians

    double midpoint_px() const { return 0.5 * width_px; }
    // Pinhole focal length in pixels, from the horizontal FoV.
    double focal_px() const { return midpoint_px() / std::tan(0.5 * fov_h); }
    void validate() const;
};

/// Row-major boolean frame; 1 = subject pixel, 0 = background.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    long total_pixels() const { return static_cast<long>(width) * height; }
    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
};

/// Raw geometric moments of a mask. The centroid is only defined for a
/// non-empty mask; callers must check has_centroid() first.
struct Moments {
    double m00 = 0.0;
    double m10 = 0.0;
    double m01 = 0.0;

    bool has_centroid() const { return m00 > 0.0; }
    double centroid_x() const;  // throws std::logic_error if undefined
    double centroid_y() const;
};

/// Per-frame shot measurements. centroid_x/centroid_y are continuous frame
/// coordinates in [0, w] x [0, h] (pixel i spans [i, i+1]), so a subject on
/// the optical axis lands exactly on the frame midpoint.
struct ShotMetrics {
    double area_frac = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    double pixel_offset = 0.0;    // P = centroid_x - midpoint
    double camera_offset = 0.0;   // alpha, radians
    double subject_offset = 0.0;  // theta = alpha + pan, radians
    bool subject_visible = false;
};

/// Parameters of the normalised relative error metric.
struct DeltaParams {
    double expected = 0.0;
    double maximum = 0.0;
    void validate() const;  // requires 0 < expected < maximum
};

/// Projection of the spherical subject onto the image plane, in continuous
/// frame coordinates. in_front is false when the subject center is at or
/// behind the image plane.
struct DiskProjection {
    bool in_front = false;
    double center_u = 0.0;
    double center_v = 0.0;
    double radius_px = 0.0;
};

/// Camera pose used for mask synthesis.
struct CameraPose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw = 0.0;    // radians, CCW from +x; pan is already folded in
    double pitch = 0.0;  // radians, positive looks up
};

/// Spherical subject in world coordinates.
struct Subject {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double radius = 0.0;
};

DiskProjection project_subject(const CameraPose& pose, const Subject& subject,
                               const CameraIntrinsics& cam);

/// Rasterizes the projected subject disk. A pixel is set when its center
/// lies inside the disk. Subject behind the image plane or fully outside
/// the frame yields an all-zero mask.
BinaryMask render_mask(const CameraPose& pose, const Subject& subject,
                       const CameraIntrinsics& cam);

Moments compute_moments(const BinaryMask& mask);

/// A = m00 / total pixels, in [0, 1].
double area_percentage(const Moments& m, const BinaryMask& mask);

/// alpha = (centroid_x - midpoint) * ((fov/2) / midpoint). centroid_x is the
/// continuous frame coordinate; positive alpha means subject right of center.
double camera_offset_angle(double centroid_x, const CameraIntrinsics& cam);

/// theta = alpha + pan.
double subject_offset_angle(double alpha, double pan);

/// Normalised relative error: positive below the expected value, negative
/// above, zero exactly on target. actual must lie in [0, maximum].
double delta_metric(double actual, const DeltaParams& params);

/// Full metric assembly for a frame. If the mask is empty the result has
/// subject_visible = false and zeroed fields; the environment substitutes
/// held values in that case.
ShotMetrics shot_metrics(const Moments& m, const BinaryMask& mask,
                         const CameraIntrinsics& cam, double pan);

/// Plain-text mask dump: "W H" header then rows of 0/1. Used for golden tests.
std::string mask_to_text(const BinaryMask& mask);
BinaryMask mask_from_text(const std::string& text);

}  // namespace dolly
