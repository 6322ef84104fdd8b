#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "tmpalign/core.hpp"
#include "tmpalign/parallel.hpp"
#include "tmpalign/rng.hpp"
#include "tmpalign/tmp.hpp"

namespace tmpalign {

struct SearchResult {
  MotionField field;
  DistanceMap dmin;
  std::uint64_t distance_evals = 0;
};

/// Exhaustive per-pixel search over integer offsets in [-radius, radius]^2.
/// Global optimum by construction; evaluation count is exactly
/// W * H * (2 * radius + 1)^2. Intentionally naive so it stays trustworthy
/// as a correctness bound and a speedup denominator.
inline SearchResult full_search(const FeatureMap& h_prev, const FeatureMap& h_cur,
                                int radius, const TmpConfig& cfg) {
  if (radius < 0) throw std::invalid_argument("full_search: radius must be non-negative");
  if (!h_prev.same_shape(h_cur) || h_prev.channels() != h_cur.channels())
    throw std::invalid_argument("full_search: feature map mismatch");
  const int w = h_cur.width();
  const int h = h_cur.height();
  MotionField field(w, h);
  DistanceMap dmin(w, h);
  std::atomic<std::uint64_t> evals{0};

  parallel_for_rows(h, [&](int y0, int y1) {
    std::uint64_t local = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x) {
        double best_d = std::numeric_limits<double>::infinity();
        double best_mag = std::numeric_limits<double>::infinity();
        Offset best{0.0f, 0.0f};
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const Offset o{static_cast<float>(dx), static_cast<float>(dy)};
            const double d = matching_distance(h_prev, h_cur, x, y, o, cfg);
            ++local;
            const double mag = o.magnitude_sq();
            // Tie-break: magnitude, then raster order of the scan.
            if (d < best_d || (d == best_d && mag < best_mag)) {
              best_d = d;
              best_mag = mag;
              best = o;
            }
          }
        field.at(x, y) = best;
        dmin.at(x, y) = best_d;
      }
    evals.fetch_add(local);
  });
  return {std::move(field), std::move(dmin), evals.load()};
}

/// Per-frame baseline with no temporal inheritance: random uniform init plus
/// the guaranteed zero candidate, refined by the same finetune as the
/// propagation paths, at the configured sweep count.
inline FinetuneResult scratch_align(const FeatureMap& h_prev, const FeatureMap& h_cur,
                                    const TmpConfig& cfg, const RngStream& rng,
                                    std::int64_t frame_index = 0) {
  if (!h_prev.same_shape(h_cur) || h_prev.channels() != h_cur.channels())
    throw std::invalid_argument("scratch_align: dimension mismatch");
  CandidateBuffer buf = detail::random_candidates(h_prev.width(), h_prev.height(), cfg, rng,
                                                  RngStream::Path::Scratch, frame_index);
  return detail::finetune_sweeps(std::move(buf), h_prev, h_cur, cfg, cfg.sweeps);
}

}  // namespace tmpalign
