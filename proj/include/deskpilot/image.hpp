#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace deskpilot {

// Fixed-size interleaved RGB raster, the unit of perception data.
// data holds height rows of width pixels of 3 channels, row-major.
struct ImageU8 {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * channels, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ImageU8: non-positive dimensions");
    }

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_dims(const ImageU8& o) const { return width == o.width && height == o.height; }
};

// 32-bit float raster produced by the preprocessing chain.
struct ImageF32 {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<float> data;

    ImageF32() = default;
    ImageF32(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * channels, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ImageF32: non-positive dimensions");
    }

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

namespace detail {

// Bilinear fetch at real-valued position (edge-clamped).
inline double bilinear_fetch(const ImageU8& img, double x, double y, int c) {
    const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    return (1.0 - fy) * top + fy * bot;
}

}  // namespace detail

// Bilinear resample of the axis-aligned source window [x0, x0+w) x [y0, y0+h)
// onto an out_w x out_h image. Pixel-center convention, so sampling the full
// window at identical dimensions is an exact identity.
inline ImageU8 resample_window(const ImageU8& img, double x0, double y0, double w, double h,
                               int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resample_window: bad output dims");
    if (w <= 0.0 || h <= 0.0) throw std::invalid_argument("resample_window: empty source window");
    ImageU8 out(out_w, out_h);
    const double sx = w / out_w;
    const double sy = h / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = y0 + (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = x0 + (x + 0.5) * sx - 0.5;
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) =
                    clamp_u8(std::lround(detail::bilinear_fetch(img, src_x, src_y, c)));
            }
        }
    }
    return out;
}

// Bilinear-interpolated resize. The default preprocessing call maps the
// 320x160 camera frame to 64x64, deliberately changing the aspect ratio.
inline ImageU8 resize(const ImageU8& img, int out_w, int out_h) {
    if (img.width == out_w && img.height == out_h) return img;
    return resample_window(img, 0.0, 0.0, img.width, img.height, out_w, out_h);
}

// v -> v/255 - 0.5, mapping [0,255] onto [-0.5, 0.5].
inline ImageF32 normalize_center(const ImageU8& img) {
    ImageF32 out(img.width, img.height);
    const std::size_t n = img.data.size();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = static_cast<float>(img.data[i]) / 255.0f - 0.5f;
    return out;
}

// The two-step input pipeline in front of the network: downscale, then
// center the intensity range.
inline ImageF32 preprocess(const ImageU8& img, int out_w = 64, int out_h = 64) {
    return normalize_center(resize(img, out_w, out_h));
}

}  // namespace deskpilot
