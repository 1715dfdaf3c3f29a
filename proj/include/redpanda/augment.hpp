#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "redpanda/rng.hpp"
#include "redpanda/tensor.hpp"

// Image augmentations forming positive contrastive views: Gaussian blur
// (kernel 5, sigma 1), high contrast, high saturation, and crop-and-resize.
// apply() is a pure function of (policy, image, seed).

namespace redpanda::augment {

using numerics::Tensor;

struct AugmentPolicy {
    bool blur = true;
    bool contrast = true;
    bool saturation = true;
    bool crop = true;
    double contrast_lo = 1.8, contrast_hi = 3.0;
    double saturation_lo = 1.8, saturation_hi = 3.0;
    double crop_scale_lo = 0.8, crop_scale_hi = 1.0;

    void validate() const {
        if (!(blur || contrast || saturation || crop))
            throw std::invalid_argument("AugmentPolicy: at least one transform must be enabled");
        if (contrast_lo > contrast_hi || saturation_lo > saturation_hi || crop_scale_lo > crop_scale_hi)
            throw std::invalid_argument("AugmentPolicy: inverted parameter range");
        if (crop_scale_lo <= 0.0 || crop_scale_hi > 1.0)
            throw std::invalid_argument("AugmentPolicy: crop scale must lie in (0,1]");
    }

    // Blur-only configuration (sketch-vs-photo style datasets).
    static AugmentPolicy blur_only() {
        AugmentPolicy p;
        p.contrast = p.saturation = p.crop = false;
        return p;
    }
};

namespace detail {

// 5-tap Gaussian, sigma = 1, normalized to unit sum.
inline const std::array<double, 5>& gauss5() {
    static const std::array<double, 5> k = [] {
        std::array<double, 5> v{};
        double s = 0;
        for (int i = -2; i <= 2; ++i) {
            v[i + 2] = std::exp(-0.5 * i * i);
            s += v[i + 2];
        }
        for (auto& x : v) x /= s;
        return v;
    }();
    return k;
}

inline std::size_t clamp_idx(long long i, std::size_t n) {
    if (i < 0) return 0;
    if (i >= static_cast<long long>(n)) return n - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace detail

// Separable 5x5 Gaussian blur with clamp-to-edge padding (constants map to
// themselves everywhere, including borders).
inline Tensor<float> gaussian_blur5(const Tensor<float>& img) {
    const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
    const auto& k = detail::gauss5();
    std::vector<float> tmp(img.numel()), out(img.numel());
    const auto& src = img.data();
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                double acc = 0;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * src[(y * W + detail::clamp_idx(static_cast<long long>(x) + t, W)) * C + c];
                tmp[(y * W + x) * C + c] = static_cast<float>(acc);
            }
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                double acc = 0;
                for (int t = -2; t <= 2; ++t)
                    acc += k[t + 2] * tmp[(detail::clamp_idx(static_cast<long long>(y) + t, H) * W + x) * C + c];
                out[(y * W + x) * C + c] = static_cast<float>(acc);
            }
    return Tensor<float>::from_data(img.shape(), std::move(out));
}

// pixel' = mean + factor * (pixel - mean), mean = per-image grayscale mean.
inline Tensor<float> adjust_contrast(const Tensor<float>& img, double factor) {
    double mean = 0;
    for (float v : img.data()) mean += v;
    mean /= static_cast<double>(img.numel());
    std::vector<float> out(img.numel());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<float>(std::clamp(mean + factor * (img.data()[i] - mean), 0.0, 1.0));
    return Tensor<float>::from_data(img.shape(), std::move(out));
}

// pixel' = gray + factor * (pixel - gray), gray = per-pixel channel mean.
inline Tensor<float> adjust_saturation(const Tensor<float>& img, double factor) {
    const std::size_t C = img.dim(2), N = img.numel() / C;
    std::vector<float> out(img.numel());
    for (std::size_t p = 0; p < N; ++p) {
        double gray = 0;
        for (std::size_t c = 0; c < C; ++c) gray += img.data()[p * C + c];
        gray /= static_cast<double>(C);
        for (std::size_t c = 0; c < C; ++c)
            out[p * C + c] = static_cast<float>(std::clamp(gray + factor * (img.data()[p * C + c] - gray), 0.0, 1.0));
    }
    return Tensor<float>::from_data(img.shape(), std::move(out));
}

// Crop a (ch x cw) window at (top, left) and bilinearly resize back to the
// original resolution. A full-size crop at (0,0) is the identity.
inline Tensor<float> crop_resize(const Tensor<float>& img, std::size_t top, std::size_t left, std::size_t ch,
                                 std::size_t cw) {
    const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
    if (top + ch > H || left + cw > W || ch == 0 || cw == 0)
        throw std::invalid_argument("crop_resize: window out of bounds");
    std::vector<float> out(img.numel());
    const auto& src = img.data();
    for (std::size_t y = 0; y < H; ++y) {
        const double sy = ch == 1 ? 0.0 : static_cast<double>(y) * (ch - 1) / (H - 1);
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, ch - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < W; ++x) {
            const double sx = cw == 1 ? 0.0 : static_cast<double>(x) * (cw - 1) / (W - 1);
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, cw - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < C; ++c) {
                auto at = [&](std::size_t yy, std::size_t xx) {
                    return static_cast<double>(src[((top + yy) * W + (left + xx)) * C + c]);
                };
                const double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                                 fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
                out[(y * W + x) * C + c] = static_cast<float>(v);
            }
        }
    }
    return Tensor<float>::from_data(img.shape(), std::move(out));
}

// Applies the enabled transforms in a fixed order (crop, blur, contrast,
// saturation) with parameters drawn from the seed substream. Output shape
// equals input shape and values stay in [0,1].
inline Tensor<float> apply(const AugmentPolicy& policy, const Tensor<float>& img, std::uint64_t seed) {
    if (img.ndim() != 3)
        throw std::invalid_argument("augment::apply: expected (H,W,C) image, got " +
                                    numerics::shape_str(img.shape()));
    Rng rng(derive_seed(seed, 0xA06));
    Tensor<float> cur = img;
    if (policy.crop) {
        const std::size_t H = img.dim(0), W = img.dim(1);
        const double s = rng.uniform(policy.crop_scale_lo, policy.crop_scale_hi);
        const std::size_t ch = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s * H)));
        const std::size_t cw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s * W)));
        const std::size_t top = static_cast<std::size_t>(rng.below(H - ch + 1));
        const std::size_t left = static_cast<std::size_t>(rng.below(W - cw + 1));
        cur = crop_resize(cur, top, left, ch, cw);
    }
    if (policy.blur) cur = gaussian_blur5(cur);
    if (policy.contrast) cur = adjust_contrast(cur, rng.uniform(policy.contrast_lo, policy.contrast_hi));
    if (policy.saturation) cur = adjust_saturation(cur, rng.uniform(policy.saturation_lo, policy.saturation_hi));
    // blur/crop interpolate within [0,1]; contrast/saturation already clamp
    return cur;
}

}  // namespace redpanda::augment
