#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "deskpilot/driving_sample.hpp"
#include "deskpilot/geom.hpp"
#include "deskpilot/image.hpp"
#include "deskpilot/rng.hpp"

namespace deskpilot {

// Geometry of the 3-camera perspective-shift system. gamma is the ratio of
// inter-camera distance to the recovery distance at which the synthetic
// viewpoint is assumed to rejoin the path.
struct PerspectiveShiftConfig {
    double recovery_distance_m = 10.0;
    double inter_camera_distance_m = 0.95;
    double max_steering_rad = 25.0 * std::numbers::pi / 180.0;

    double gamma() const {
        if (recovery_distance_m <= 0.0 || inter_camera_distance_m <= 0.0)
            throw std::invalid_argument("PerspectiveShiftConfig: distances must be positive");
        return inter_camera_distance_m / recovery_distance_m;
    }
};

// Per-technique application probabilities, one preset per behavior; collision
// avoidance has no side cameras, so its perspective probability is zero.
struct AugmentationProbabilities {
    double perspective = 0.0;
    double shadows = 0.0;
    double brightness = 0.0;
    double flip = 0.0;
    double pan = 0.0;
    double tilt = 0.0;

    void validate() const {
        for (double p : {perspective, shadows, brightness, flip, pan, tilt})
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("AugmentationProbabilities: value outside [0,1]");
    }

    static AugmentationProbabilities none() { return {}; }
    static AugmentationProbabilities simplistic_preset() {
        return {0.50, 0.30, 0.40, 0.50, 0.10, 0.05};
    }
    static AugmentationProbabilities rigorous_preset() {
        return {0.50, 0.30, 0.40, 0.00, 0.10, 0.05};
    }
    static AugmentationProbabilities collision_preset() {
        return {0.00, 0.30, 0.40, 0.50, 0.10, 0.05};
    }
    static AugmentationProbabilities preset_for(BehaviorTag tag) {
        switch (tag) {
            case BehaviorTag::rigorous: return rigorous_preset();
            case BehaviorTag::collision: return collision_preset();
            default: return simplistic_preset();
        }
    }
};

// Steering correction for feeding a side-camera frame as if it came from the
// center camera. For a left frame the corrected angle is theta + delta, for a
// right frame theta - phi, with
//   delta = atan(gamma / (1 + tan^2 theta + gamma tan theta))
//   phi   = atan(gamma / (1 + tan^2 theta - gamma tan theta))
// Angles are radians; positive steering is a right turn.
inline double perspective_correction(double theta, double gamma, FrameSource side) {
    if (!std::isfinite(theta) || !std::isfinite(gamma))
        throw std::invalid_argument("perspective_correction: non-finite input");
    if (gamma < 0.0) throw std::invalid_argument("perspective_correction: gamma < 0");
    if (std::abs(theta) >= std::numbers::pi / 2)
        throw std::invalid_argument("perspective_correction: |theta| >= pi/2");
    const double t = std::tan(theta);
    switch (side) {
        case FrameSource::left:
            return theta + std::atan(gamma / (1.0 + t * t + gamma * t));
        case FrameSource::right:
            return theta - std::atan(gamma / (1.0 + t * t - gamma * t));
        default:
            return theta;
    }
}

// Same correction applied to a normalized label: map through the physical
// steering limit, correct in radians, renormalize, clamp to [-1, 1].
inline double perspective_corrected_label(double steering, FrameSource side,
                                          const PerspectiveShiftConfig& cfg) {
    const double rad = steering * cfg.max_steering_rad;
    const double corrected = perspective_correction(rad, cfg.gamma(), side);
    return std::clamp(corrected / cfg.max_steering_rad, -1.0, 1.0);
}

// Four quadrangular shadows with darkness coefficient 0.65. Vertices are
// drawn X ~ U(0, w), Y ~ U(h/2, h) (lower half of the frame) and ordered by
// angle about their centroid so each quadrangle is simple. Pixels inside the
// union of the quadrangles are darkened once, round to nearest.
inline ImageU8 apply_shadows(const ImageU8& img, Rng& rng) {
    constexpr double kDarkness = 0.65;
    constexpr int kShadowCount = 4;
    ImageU8 out = img;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(img.width) * img.height, 0);
    for (int k = 0; k < kShadowCount; ++k) {
        Quad q;
        for (auto& v : q) {
            v.x = rng.uniform(0.0, static_cast<double>(img.width));
            v.y = rng.uniform(img.height / 2.0, static_cast<double>(img.height));
        }
        q = order_by_angle(q);
        int x_lo = img.width, x_hi = 0, y_lo = img.height, y_hi = 0;
        for (const auto& v : q) {
            x_lo = std::min(x_lo, static_cast<int>(std::floor(v.x)));
            x_hi = std::max(x_hi, static_cast<int>(std::ceil(v.x)));
            y_lo = std::min(y_lo, static_cast<int>(std::floor(v.y)));
            y_hi = std::max(y_hi, static_cast<int>(std::ceil(v.y)));
        }
        x_lo = std::max(x_lo, 0);
        y_lo = std::max(y_lo, 0);
        x_hi = std::min(x_hi, img.width - 1);
        y_hi = std::min(y_hi, img.height - 1);
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x)
                if (point_in_quad({x + 0.5, y + 0.5}, q))
                    mask[static_cast<std::size_t>(y) * img.width + x] = 1;
    }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask[static_cast<std::size_t>(y) * img.width + x])
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = static_cast<std::uint8_t>(
                        std::lround(kDarkness * img.at(x, y, c)));
    return out;
}

// dst = clamp(src + beta, 0, 255) per pixel per channel.
inline ImageU8 adjust_brightness(const ImageU8& img, int beta) {
    ImageU8 out = img;
    for (auto& v : out.data)
        v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + beta, 0, 255));
    return out;
}

// Horizontal mirror with negated steering label. Only center-camera frames
// may be flipped; a flipped side frame would swap the viewpoints and make
// the perspective correction wrong.
inline std::pair<ImageU8, double> flip_horizontal(const ImageU8& img, double steering,
                                                  FrameSource source = FrameSource::center) {
    if (source != FrameSource::center)
        throw std::invalid_argument("flip_horizontal: side-camera frames must not be flipped");
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(img.width - x - 1, y, c);
    return {std::move(out), -steering};
}

// Translate by (tx*w, ty*h) pixels, crop away the null border, resize back
// to the original dimensions.
inline ImageU8 pan(const ImageU8& img, double tx, double ty) {
    if (!std::isfinite(tx) || !std::isfinite(ty)) throw std::invalid_argument("pan: non-finite shift");
    const double sx = tx * img.width;
    const double sy = ty * img.height;
    if (std::abs(sx) >= img.width || std::abs(sy) >= img.height)
        throw std::invalid_argument("pan: shift leaves no valid region");
    const double x0 = std::max(0.0, -sx);
    const double y0 = std::max(0.0, -sy);
    const double w = img.width - std::abs(sx);
    const double h = img.height - std::abs(sy);
    return resample_window(img, x0, y0, w, h, img.width, img.height);
}

// Dimensions of the largest (maximal area) axis-aligned central rectangle
// inside a w x h image rotated by phi about its center. Half-constrained
// case: two crop corners touch the long sides of the rotated image.
// Fully-constrained case: all four corners touch.
inline std::pair<double, double> max_axis_aligned_crop(double w, double h, double phi) {
    if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("max_axis_aligned_crop: w, h > 0");
    if (!(std::abs(phi) <= std::numbers::pi / 4))
        throw std::invalid_argument("max_axis_aligned_crop: |phi| <= pi/4");
    if (phi == 0.0) return {w, h};
    const double s = std::abs(std::sin(phi));
    const double c = std::abs(std::cos(phi));
    const double side_long = std::max(w, h);
    const double side_short = std::min(w, h);
    if (side_short <= 2.0 * s * c * side_long) {
        const double x = 0.5 * side_short;
        return (w >= h) ? std::pair{x / s, x / c} : std::pair{x / c, x / s};
    }
    const double cos2 = c * c - s * s;
    return {(w * c - h * s) / cos2, (h * c - w * s) / cos2};
}

// Rotate by phi (degrees) about the image center, crop the maximal
// axis-aligned central region, resize back to the original dimensions.
// The steering label is not touched by tilting.
inline ImageU8 tilt(const ImageU8& img, double phi_deg) {
    if (phi_deg == 0.0) return img;
    const double rad = phi_deg * std::numbers::pi / 180.0;
    const auto [wr, hr] = max_axis_aligned_crop(img.width, img.height, rad);
    const double cx = img.width / 2.0 - 0.5;
    const double cy = img.height / 2.0 - 0.5;
    const double x0 = (img.width - wr) / 2.0;
    const double y0 = (img.height - hr) / 2.0;
    const double cr = std::cos(rad);
    const double sr = std::sin(rad);
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        const double yr = y0 + (y + 0.5) * hr / img.height - 0.5;
        const double dy = yr - cy;
        for (int x = 0; x < img.width; ++x) {
            const double xr = x0 + (x + 0.5) * wr / img.width - 0.5;
            const double dx = xr - cx;
            const double src_x = cx + cr * dx + sr * dy;
            const double src_y = cy - sr * dx + cr * dy;
            for (int ch = 0; ch < 3; ++ch)
                out.at(x, y, ch) =
                    clamp_u8(std::lround(detail::bilinear_fetch(img, src_x, src_y, ch)));
        }
    }
    return out;
}

// Resolves a frame reference to pixels. Implementations throw on missing or
// unreadable frames; augment_sample propagates those errors untouched.
using FrameLoader = std::function<ImageU8(const std::string&)>;

// Full augmentation chain for one sample, in the fixed order perspective
// shift, shadows, brightness, flip, pan, tilt. Each technique is gated by an
// independent U(0,1) draw against its probability; when the perspective gate
// fires, left and right viewpoints are picked with equal probability (p/2
// each). Flip applies to center frames only and is suppressed after a
// perspective shift, since the shifted frame is a synthetic side frame.
// Returns the augmented frame and the corrected normalized steering label.
// Pure function of (sample, probs, cfg, rng seed/state).
inline std::pair<ImageU8, double> augment_sample(const DrivingSample& sample,
                                                 const AugmentationProbabilities& probs,
                                                 const PerspectiveShiftConfig& cfg,
                                                 const FrameLoader& load, Rng& rng) {
    probs.validate();
    FrameSource src = FrameSource::center;
    bool shifted = false;
    if (probs.perspective > 0.0 && rng.uniform() < probs.perspective) {
        src = rng.uniform() < 0.5 ? FrameSource::left : FrameSource::right;
        shifted = true;
    }
    const std::string& ref = sample.frame_ref(src);
    if (ref.empty())
        throw std::runtime_error("augment_sample: sample at t=" + std::to_string(sample.timestamp) +
                                 " has no " +
                                 (src == FrameSource::left
                                      ? "left"
                                      : src == FrameSource::right ? "right" : "center") +
                                 " frame");
    ImageU8 img = load(ref);
    double steering = sample.steering;
    if (shifted) steering = perspective_corrected_label(steering, src, cfg);

    if (rng.uniform() < probs.shadows) img = apply_shadows(img, rng);
    if (rng.uniform() < probs.brightness)
        img = adjust_brightness(img, static_cast<int>(rng.uniform_int(-100, 100)));
    if (!shifted && rng.uniform() < probs.flip) {
        auto flipped = flip_horizontal(img, steering, FrameSource::center);
        img = std::move(flipped.first);
        steering = flipped.second;
    }
    if (rng.uniform() < probs.pan) {
        const double tx = rng.uniform(-0.05, 0.05);
        const double ty = rng.uniform(-0.05, 0.05);
        img = pan(img, tx, ty);
    }
    if (rng.uniform() < probs.tilt) img = tilt(img, rng.uniform(-1.0, 1.0));
    return {std::move(img), steering};
}

}  // namespace deskpilot
