#include "dolly/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dolly {

void CameraIntrinsics::validate() const {
    if (width_px <= 0 || height_px <= 0)
        throw std::invalid_argument("camera: frame dimensions must be positive");
    if (!(fov_h > 0.0) || !(fov_h < 3.14159265358979323846))
        throw std::invalid_argument("camera: fov_h must lie in (0, pi)");
}

double Moments::centroid_x() const {
    if (!has_centroid()) throw std::logic_error("centroid undefined for empty mask");
    return m10 / m00;
}

double Moments::centroid_y() const {
    if (!has_centroid()) throw std::logic_error("centroid undefined for empty mask");
    return m01 / m00;
}

void DeltaParams::validate() const {
    if (!(expected > 0.0) || !(expected < maximum))
        throw std::invalid_argument("delta params: need 0 < expected < maximum");
}

DiskProjection project_subject(const CameraPose& pose, const Subject& subject,
                               const CameraIntrinsics& cam) {
    const double dx = subject.x - pose.x;
    const double dy = subject.y - pose.y;
    const double dz = subject.z - pose.z;

    const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
    const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);

    // Camera basis: forward, right (image x), up.
    const double fwd = dx * (cy * cp) + dy * (sy * cp) + dz * sp;
    const double lat = dx * sy - dy * cy;
    const double vert = dx * (-cy * sp) + dy * (-sy * sp) + dz * cp;

    DiskProjection proj;
    if (!(fwd > 1e-9)) return proj;  // at or behind the image plane

    const double focal = cam.focal_px();
    proj.in_front = true;
    // Offsets from the frame midpoint are kept separate from the midpoint
    // itself so that mirrored scenes rasterize to exactly mirrored masks.
    proj.center_u = focal * (lat / fwd);
    proj.center_v = focal * (-vert / fwd);
    proj.radius_px = focal * (subject.radius / fwd);
    return proj;
}

BinaryMask render_mask(const CameraPose& pose, const Subject& subject,
                       const CameraIntrinsics& cam) {
    cam.validate();
    if (!(subject.radius > 0.0))
        throw std::invalid_argument("render_mask: subject radius must be positive");

    BinaryMask mask(cam.width_px, cam.height_px);
    const DiskProjection proj = project_subject(pose, subject, cam);
    if (!proj.in_front) return mask;

    const double half_w = 0.5 * cam.width_px;
    const double half_h = 0.5 * cam.height_px;
    const double r2 = proj.radius_px * proj.radius_px;

    // Scan only the disk's bounding box.
    const double u_abs = half_w + proj.center_u;
    const double v_abs = half_h + proj.center_v;
    const int x0 = std::max(0, static_cast<int>(std::floor(u_abs - proj.radius_px - 1.0)));
    const int x1 = std::min(cam.width_px - 1, static_cast<int>(std::ceil(u_abs + proj.radius_px + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(v_abs - proj.radius_px - 1.0)));
    const int y1 = std::min(cam.height_px - 1, static_cast<int>(std::ceil(v_abs + proj.radius_px + 1.0)));

    for (int y = y0; y <= y1; ++y) {
        const double dv = (y + 0.5 - half_h) - proj.center_v;
        for (int x = x0; x <= x1; ++x) {
            const double du = (x + 0.5 - half_w) - proj.center_u;
            if (du * du + dv * dv <= r2) mask.set(x, y, true);
        }
    }
    return mask;
}

Moments compute_moments(const BinaryMask& mask) {
    Moments m;
    for (int y = 0; y < mask.height; ++y) {
        const std::uint8_t* row = mask.bits.data() + static_cast<std::size_t>(y) * mask.width;
        double row_count = 0.0, row_x = 0.0;
        for (int x = 0; x < mask.width; ++x) {
            if (row[x]) {
                row_count += 1.0;
                row_x += x;
            }
        }
        m.m00 += row_count;
        m.m10 += row_x;
        m.m01 += row_count * y;
    }
    return m;
}

double area_percentage(const Moments& m, const BinaryMask& mask) {
    if (mask.total_pixels() <= 0)
        throw std::invalid_argument("area_percentage: empty frame");
    return m.m00 / static_cast<double>(mask.total_pixels());
}

double camera_offset_angle(double centroid_x, const CameraIntrinsics& cam) {
    const double midpoint = cam.midpoint_px();
    const double pixel_offset = centroid_x - midpoint;
    return pixel_offset * ((0.5 * cam.fov_h) / midpoint);
}

double subject_offset_angle(double alpha, double pan) { return alpha + pan; }

double delta_metric(double actual, const DeltaParams& params) {
    params.validate();
    if (actual < 0.0 || actual > params.maximum)
        throw std::invalid_argument("delta_metric: actual outside [0, maximum]");
    const double diff = std::abs(actual - params.expected);
    if (actual < params.expected) return diff / params.expected;
    return diff / (params.expected - params.maximum);
}

ShotMetrics shot_metrics(const Moments& m, const BinaryMask& mask,
                         const CameraIntrinsics& cam, double pan) {
    ShotMetrics out;
    out.area_frac = area_percentage(m, mask);
    if (!m.has_centroid()) return out;

    out.subject_visible = true;
    // Index-space centroid -> continuous frame coordinate (pixel i spans
    // [i, i+1], center i + 0.5).
    out.centroid_x = m.centroid_x() + 0.5;
    out.centroid_y = m.centroid_y() + 0.5;
    out.pixel_offset = out.centroid_x - cam.midpoint_px();
    out.camera_offset = camera_offset_angle(out.centroid_x, cam);
    out.subject_offset = subject_offset_angle(out.camera_offset, pan);
    return out;
}

std::string mask_to_text(const BinaryMask& mask) {
    std::ostringstream os;
    os << mask.width << ' ' << mask.height << '\n';
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) os << (mask.at(x, y) ? '1' : '0');
        os << '\n';
    }
    return os.str();
}

BinaryMask mask_from_text(const std::string& text) {
    std::istringstream is(text);
    int w = 0, h = 0;
    if (!(is >> w >> h) || w <= 0 || h <= 0)
        throw std::invalid_argument("mask_from_text: bad header");
    BinaryMask mask(w, h);
    std::string row;
    for (int y = 0; y < h; ++y) {
        if (!(is >> row) || static_cast<int>(row.size()) != w)
            throw std::invalid_argument("mask_from_text: bad row");
        for (int x = 0; x < w; ++x) {
            if (row[x] != '0' && row[x] != '1')
                throw std::invalid_argument("mask_from_text: bad cell");
            mask.set(x, y, row[x] == '1');
        }
    }
    return mask;
}

}  // namespace dolly
