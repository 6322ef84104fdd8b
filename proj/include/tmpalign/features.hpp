#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tmpalign/core.hpp"
#include "tmpalign/parallel.hpp"

namespace tmpalign {

namespace detail {

inline int clamp_coord(int v, int hi) { return std::clamp(v, 0, hi); }

inline void require_luma(const FeatureMap& frame) {
  if (frame.empty()) throw std::invalid_argument("frame must be non-empty");
  if (frame.channels() != 1)
    throw std::invalid_argument("frame must be a single-channel luma grid");
}

}  // namespace detail

inline constexpr int kMotionFeatureChannels = 8;

/// Handcrafted stand-in for the learned motion branch. Per pixel, with
/// r = cfg.patch_radius and clamp-to-edge taps:
///   [0] center value
///   [1] f(x+r, y) - f(x, y)      [2] f(x-r, y) - f(x, y)
///   [3] f(x, y+r) - f(x, y)      [4] f(x, y-r) - f(x, y)
///   [5] mean over the (2r+1)^2 patch
///   [6] f(x+r, y+r) - f(x-r, y-r)
///   [7] f(x+r, y-r) - f(x-r, y+r)
inline FeatureMap extract_motion_features(const FeatureMap& frame, const TmpConfig& cfg) {
  detail::require_luma(frame);
  const int w = frame.width();
  const int h = frame.height();
  const int r = cfg.patch_radius;
  FeatureMap out(w, h, kMotionFeatureChannels);

  auto value = [&](int x, int y) -> float {
    return frame.at(detail::clamp_coord(x, w - 1), detail::clamp_coord(y, h - 1), 0);
  };

  parallel_for_rows(h, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < w; ++x) {
        const float c = frame.at(x, y, 0);
        float* d = out.pixel(x, y);
        d[0] = c;
        d[1] = value(x + r, y) - c;
        d[2] = value(x - r, y) - c;
        d[3] = value(x, y + r) - c;
        d[4] = value(x, y - r) - c;
        double sum = 0.0;
        for (int oy = -r; oy <= r; ++oy)
          for (int ox = -r; ox <= r; ++ox) sum += value(x + ox, y + oy);
        const int taps = (2 * r + 1) * (2 * r + 1);
        d[5] = static_cast<float>(sum / taps);
        d[6] = value(x + r, y + r) - value(x - r, y - r);
        d[7] = value(x + r, y - r) - value(x - r, y + r);
      }
    }
  });
  return out;
}

/// Texture branch stand-in: the luma frame itself, one channel.
inline FeatureMap extract_texture_features(const FeatureMap& frame, const TmpConfig&) {
  detail::require_luma(frame);
  return frame;
}

namespace detail {

// Precomputed clamp-to-edge bilinear footprint.
struct BilinearTaps {
  int x0, y0, x1, y1;
  double w00, w10, w01, w11;
};

inline BilinearTaps bilinear_taps(int width, int height, double x, double y) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(height - 1));
  BilinearTaps t;
  t.x0 = static_cast<int>(std::floor(cx));
  t.y0 = static_cast<int>(std::floor(cy));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  const double fx = cx - t.x0;
  const double fy = cy - t.y0;
  t.w00 = (1.0 - fx) * (1.0 - fy);
  t.w10 = fx * (1.0 - fy);
  t.w01 = (1.0 - fx) * fy;
  t.w11 = fx * fy;
  return t;
}

inline double sample_channel(const FeatureMap& fm, const BilinearTaps& t, int c) {
  return t.w00 * fm.at(t.x0, t.y0, c) + t.w10 * fm.at(t.x1, t.y0, c) +
         t.w01 * fm.at(t.x0, t.y1, c) + t.w11 * fm.at(t.x1, t.y1, c);
}

}  // namespace detail

/// Bilinear sample of all channels at (x, y), clamp-to-edge outside
/// [0, W-1] x [0, H-1]. Exact at integer grid points.
inline std::vector<double> sample_bilinear(const FeatureMap& fm, double x, double y) {
  if (fm.empty()) throw std::invalid_argument("feature map must be non-empty");
  const auto taps = detail::bilinear_taps(fm.width(), fm.height(), x, y);
  std::vector<double> out(fm.channels());
  for (int c = 0; c < fm.channels(); ++c) out[c] = detail::sample_channel(fm, taps, c);
  return out;
}

}  // namespace tmpalign
