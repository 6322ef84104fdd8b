#pragma once

#include <cmath>
#include <stdexcept>

#include "tmpalign/core.hpp"
#include "tmpalign/features.hpp"
#include "tmpalign/parallel.hpp"

namespace tmpalign {

/// Backward warp: out(x, y) samples src at (x + dx, y + dy) with bilinear,
/// clamp-to-edge interpolation.
inline FeatureMap backward_warp(const FeatureMap& src, const MotionField& field) {
  if (!src.same_shape(field))
    throw std::invalid_argument("backward_warp: dimension mismatch");
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  FeatureMap out(w, h, ch);
  parallel_for_rows(h, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x) {
        const Offset o = field.at(x, y);
        const auto taps = detail::bilinear_taps(w, h, x + static_cast<double>(o.dx),
                                                y + static_cast<double>(o.dy));
        float* d = out.pixel(x, y);
        for (int c = 0; c < ch; ++c)
          d[c] = static_cast<float>(detail::sample_channel(src, taps, c));
      }
  });
  return out;
}

/// Motion-confidence weighting: out = conf * warped, per channel.
inline FeatureMap mcwf_weight(const FeatureMap& warped, const ConfidenceMap& conf) {
  if (!warped.same_shape(conf))
    throw std::invalid_argument("mcwf_weight: dimension mismatch");
  FeatureMap out = warped;
  const int ch = warped.channels();
  parallel_for_rows(warped.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < warped.width(); ++x) {
        const double c = conf.at(x, y);
        float* d = out.pixel(x, y);
        for (int i = 0; i < ch; ++i) d[i] = static_cast<float>(c * d[i]);
      }
  });
  return out;
}

/// Similarity-reweighting baseline: per pixel,
/// weight = exp(-||warped - ref||^2 / channels), applied to every channel.
inline FeatureMap srf_weight(const FeatureMap& warped, const FeatureMap& ref) {
  if (!warped.same_shape(ref) || warped.channels() != ref.channels())
    throw std::invalid_argument("srf_weight: dimension mismatch");
  FeatureMap out = warped;
  const int ch = warped.channels();
  parallel_for_rows(warped.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < warped.width(); ++x) {
        const float* a = warped.pixel(x, y);
        const float* b = ref.pixel(x, y);
        double d2 = 0.0;
        for (int i = 0; i < ch; ++i) {
          const double diff = static_cast<double>(a[i]) - b[i];
          d2 += diff * diff;
        }
        const double weight = std::exp(-d2 / ch);
        float* d = out.pixel(x, y);
        for (int i = 0; i < ch; ++i) d[i] = static_cast<float>(weight * d[i]);
      }
  });
  return out;
}

/// Channel concatenation, previous-then-current order.
inline FeatureMap fuse_concat(const FeatureMap& weighted_prev, const FeatureMap& cur) {
  if (!weighted_prev.same_shape(cur))
    throw std::invalid_argument("fuse_concat: dimension mismatch");
  if (weighted_prev.channels() <= 0 || cur.channels() <= 0 || weighted_prev.empty() || cur.empty())
    throw std::invalid_argument("fuse_concat: empty input");
  const int w = cur.width();
  const int h = cur.height();
  const int ca = weighted_prev.channels();
  const int cb = cur.channels();
  FeatureMap out(w, h, ca + cb);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float* d = out.pixel(x, y);
      const float* a = weighted_prev.pixel(x, y);
      const float* b = cur.pixel(x, y);
      for (int i = 0; i < ca; ++i) d[i] = a[i];
      for (int i = 0; i < cb; ++i) d[ca + i] = b[i];
    }
  return out;
}

}  // namespace tmpalign
