#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tmpalign/core.hpp"
#include "tmpalign/features.hpp"
#include "tmpalign/parallel.hpp"
#include "tmpalign/rng.hpp"

namespace tmpalign {

namespace detail {

inline Offset clamp_offset(double dx, double dy, float bound) {
  const double b = bound;
  return {static_cast<float>(std::clamp(dx, -b, b)),
          static_cast<float>(std::clamp(dy, -b, b))};
}

inline int round_coord(double v) { return static_cast<int>(std::lround(v)); }

// Clamp-to-edge sampling gives an offset whose source lies outside the frame
// the exact same distance as the offset projected onto the boundary, so the
// projection is the canonical representative: it names the source that was
// actually sampled. Selected offsets are stored in canonical form, which
// stops out-of-frame offsets from compounding across frames.
inline Offset canonical_offset(int x, int y, int w, int h, Offset o) {
  const double sx = std::clamp(static_cast<double>(x) + o.dx, 0.0, static_cast<double>(w - 1));
  const double sy = std::clamp(static_cast<double>(y) + o.dy, 0.0, static_cast<double>(h - 1));
  return {static_cast<float>(sx - x), static_cast<float>(sy - y)};
}

}  // namespace detail

/// Squared feature difference between the current pixel's descriptor and the
/// offset-designated descriptor of the previous frame. The previous map is
/// sampled bilinearly with clamp-to-edge, so any finite offset yields a
/// finite, non-negative value.
inline double matching_distance(const FeatureMap& h_prev, const FeatureMap& h_cur, int x,
                                int y, Offset offset, const TmpConfig& cfg) {
  if (h_prev.channels() != h_cur.channels())
    throw std::invalid_argument("matching_distance: channel mismatch");
  const auto taps = detail::bilinear_taps(h_prev.width(), h_prev.height(),
                                          static_cast<double>(x) + offset.dx,
                                          static_cast<double>(y) + offset.dy);
  const float* cur = h_cur.pixel(x, y);
  double d = 0.0;
  const int ch = h_cur.channels();
  for (int c = 0; c < ch; ++c) {
    const double diff = detail::sample_channel(h_prev, taps, c) - cur[c];
    d += diff * diff;
  }
  if (cfg.distance_mode == DistanceMode::ChannelMean) d /= ch;
  return d;
}

/// Object path: each source pixel extrapolates its motion, so a candidate
/// equal to the previous offset lands where the object should appear next.
/// The un-jittered offset is deposited first, then k Gaussian jitters with
/// std cfg.sigma. Deposits whose target falls outside the frame are dropped.
inline CandidateBuffer propagate_obj(const MotionField& prev, const TmpConfig& cfg,
                                     const RngStream& rng, std::int64_t frame_index) {
  if (prev.empty()) throw std::invalid_argument("propagate_obj: empty motion field");
  const int w = prev.width();
  const int h = prev.height();
  const float bound = static_cast<float>(resolved_max_offset(cfg, w, h));
  CandidateBuffer buf(w, h, cfg);

  auto deposit = [&](int sx, int sy, Offset o, Provenance tag) {
    const int tx = detail::round_coord(static_cast<double>(sx) - o.dx);
    const int ty = detail::round_coord(static_cast<double>(sy) - o.dy);
    if (tx >= 0 && tx < w && ty >= 0 && ty < h) buf.push(tx, ty, o, tag);
  };

  // Scatter runs serially: deposit order is part of the saturation contract.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Offset o = prev.at(x, y);
      deposit(x, y, detail::clamp_offset(o.dx, o.dy, bound), Provenance::Inherited);
      const std::uint64_t pixel = prev.index(x, y);
      for (int i = 0; i < cfg.k; ++i) {
        const auto [gx, gy] = rng.normal2(frame_index, pixel, RngStream::Path::Obj, i);
        deposit(x, y,
                detail::clamp_offset(o.dx + gx * cfg.sigma, o.dy + gy * cfg.sigma, bound),
                Provenance::Obj);
      }
    }
  return buf;
}

/// Camera path: static regions share the camera motion, so each pixel reuses
/// its own previous offset in place, plus k jittered variants. Every pixel
/// receives at least its inherited candidate.
inline CandidateBuffer propagate_cam(const MotionField& prev, const TmpConfig& cfg,
                                     const RngStream& rng, std::int64_t frame_index) {
  if (prev.empty()) throw std::invalid_argument("propagate_cam: empty motion field");
  const int w = prev.width();
  const int h = prev.height();
  const float bound = static_cast<float>(resolved_max_offset(cfg, w, h));
  CandidateBuffer buf(w, h, cfg);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Offset o = prev.at(x, y);
      buf.push(x, y, detail::clamp_offset(o.dx, o.dy, bound), Provenance::Inherited);
      const std::uint64_t pixel = prev.index(x, y);
      for (int i = 0; i < cfg.k; ++i) {
        const auto [gx, gy] = rng.normal2(frame_index, pixel, RngStream::Path::Cam, i);
        buf.push(x, y,
                 detail::clamp_offset(o.dx + gx * cfg.sigma, o.dy + gy * cfg.sigma, bound),
                 Provenance::Cam);
      }
    }
  return buf;
}

struct FinetuneResult {
  MotionField field;
  DistanceMap dmin;
  std::uint64_t distance_evals = 0;
};

namespace detail {

// Jacobi diffusion: augment every pixel's buffer with the selected offsets of
// its neighborhood, reading only the previous sweep's field. Gather-style, so
// rows can run in parallel with bit-identical results.
inline void diffuse_in_place(CandidateBuffer& buffers, const MotionField& best,
                             const TmpConfig& cfg) {
  const int w = buffers.width();
  const int h = buffers.height();
  const int r = cfg.neighbor_radius;
  parallel_for_rows(h, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < w; ++x)
        for (int oy = -r; oy <= r; ++oy)
          for (int ox = -r; ox <= r; ++ox) {
            if (ox == 0 && oy == 0) continue;
            const int nx = x + ox;
            const int ny = y + oy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            buffers.push(x, y, best.at(nx, ny), Provenance::Neighbor);
          }
  });
}

inline FinetuneResult finetune_sweeps(CandidateBuffer buffers, const FeatureMap& h_prev,
                                      const FeatureMap& h_cur, const TmpConfig& cfg,
                                      int sweeps) {
  if (!h_prev.same_shape(h_cur) || h_prev.channels() != h_cur.channels())
    throw std::invalid_argument("finetune: feature map mismatch");
  if (buffers.width() != h_cur.width() || buffers.height() != h_cur.height())
    throw std::invalid_argument("finetune: candidate buffer dimension mismatch");
  const int w = h_cur.width();
  const int h = h_cur.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (buffers.count(x, y) == 0)
        throw std::logic_error("finetune: empty candidate buffer at pixel (" +
                               std::to_string(x) + ", " + std::to_string(y) + ")");

  MotionField best(w, h);
  DistanceMap dmin(w, h);
  std::atomic<std::uint64_t> evals{0};
  const int r = cfg.neighbor_radius;

  // Each sweep scores the base candidates (distances cached in the buffer),
  // the pixel's incumbent selection (its exact distance carried over, which
  // keeps D_min non-increasing), and the previous sweep's selections of the
  // neighborhood. Neighbor candidates are transient: re-derived every sweep
  // from the evolving field instead of accumulating in the buffer, so
  // diffusion keeps spreading no matter how full the buffer is. Jacobi
  // reads make the result independent of the row schedule.
  for (int s = 0; s < sweeps; ++s) {
    const MotionField prev_best = best;  // previous sweep's state
    const DistanceMap prev_dmin = dmin;
    parallel_for_rows(h, [&](int y0, int y1) {
      std::uint64_t local = 0;
      std::vector<Offset> seen;
      seen.reserve(buffers.capacity() + (2 * r + 1) * (2 * r + 1));
      for (int y = y0; y < y1; ++y)
        for (int x = 0; x < w; ++x) {
          seen.clear();
          double best_d = std::numeric_limits<double>::infinity();
          double best_mag = std::numeric_limits<double>::infinity();
          Offset best_o{0.0f, 0.0f};
          auto consider = [&](Offset o, double d) {
            const double mag = o.magnitude_sq();
            if (d < best_d || (d == best_d && mag < best_mag)) {
              best_d = d;
              best_mag = mag;
              best_o = o;
            }
          };
          auto is_new = [&](Offset o) {
            for (const Offset& p : seen)
              if (p == o) return false;
            seen.push_back(o);
            return true;
          };

          const int n = buffers.count(x, y);
          for (int i = 0; i < n; ++i) {
            Candidate& c = buffers.slot(x, y, i);
            seen.push_back(c.offset);
            if (!c.evaluated()) {
              c.distance = matching_distance(h_prev, h_cur, x, y, c.offset, cfg);
              ++local;
            }
            consider(c.offset, c.distance);
          }
          if (s > 0) {
            if (is_new(prev_best.at(x, y)))
              consider(prev_best.at(x, y), prev_dmin.at(x, y));
            for (int oy = -r; oy <= r; ++oy)
              for (int ox = -r; ox <= r; ++ox) {
                if (ox == 0 && oy == 0) continue;
                const int nx = x + ox;
                const int ny = y + oy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const Offset o = prev_best.at(nx, ny);
                if (!is_new(o)) continue;
                consider(o, matching_distance(h_prev, h_cur, x, y, o, cfg));
                ++local;
              }
          }
          // Integer displacements are exactly representable; probing the
          // rounded best costs one evaluation and lets integer motion lock
          // in exactly instead of hovering at sub-pixel jitter residue.
          const Offset snapped = canonical_offset(
              x, y, w, h, Offset{std::roundf(best_o.dx), std::roundf(best_o.dy)});
          if (is_new(snapped)) {
            consider(snapped, matching_distance(h_prev, h_cur, x, y, snapped, cfg));
            ++local;
          }
          best.at(x, y) = canonical_offset(x, y, w, h, best_o);
          dmin.at(x, y) = best_d;
        }
      evals.fetch_add(local);
    });
  }
  return {std::move(best), std::move(dmin), evals.load()};
}

// Uniform draws in [-bound, bound]^2 plus a guaranteed zero candidate, the
// shared seeding for cold starts and the from-scratch baseline. Draws fill
// the candidate budget; diffusion spreads whichever draw lands well.
inline CandidateBuffer random_candidates(int w, int h, const TmpConfig& cfg,
                                         const RngStream& rng, RngStream::Path path,
                                         std::int64_t frame_index) {
  CandidateBuffer buf(w, h, cfg);
  const double bound = resolved_max_offset(cfg, w, h);
  const float bound_f = static_cast<float>(bound);
  const int draws = std::max(1, cfg.capacity - 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      buf.push(x, y, Offset{0.0f, 0.0f}, Provenance::Inherited);
      const std::uint64_t pixel = static_cast<std::uint64_t>(y) * w + x;
      for (int i = 0; i < draws; ++i) {
        const auto [ux, uy] = rng.uniform2(frame_index, pixel, path, i);
        buf.push(x, y,
                 clamp_offset((2.0 * ux - 1.0) * bound, (2.0 * uy - 1.0) * bound, bound_f),
                 Provenance::Cam);
      }
    }
  return buf;
}

}  // namespace detail

/// Runs cfg.sweeps evaluation sweeps over the candidate buffers. Each sweep
/// measures every candidate (cached across sweeps), selects the per-pixel
/// argmin, and diffuses the selections to neighbors for the next sweep.
inline FinetuneResult finetune(const CandidateBuffer& buffers, const FeatureMap& h_prev,
                               const FeatureMap& h_cur, const TmpConfig& cfg) {
  return detail::finetune_sweeps(buffers, h_prev, h_cur, cfg, cfg.sweeps);
}

/// Public wrapper over the Jacobi diffusion step.
inline CandidateBuffer diffuse_neighbors(const CandidateBuffer& buffers,
                                         const MotionField& current_best,
                                         const TmpConfig& cfg) {
  if (buffers.width() != current_best.width() || buffers.height() != current_best.height())
    throw std::invalid_argument("diffuse_neighbors: dimension mismatch");
  CandidateBuffer out = buffers;
  detail::diffuse_in_place(out, current_best, cfg);
  return out;
}

inline ConfidenceMap confidence_from_distance(const DistanceMap& dmin, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("confidence decay must be positive");
  ConfidenceMap conf(dmin.width(), dmin.height());
  for (std::size_t i = 0; i < dmin.size(); ++i)
    conf.data()[i] = std::exp(-a * dmin.data()[i]);
  return conf;
}

struct AlignResult {
  MotionField field;
  DistanceMap dmin;
  ConfidenceMap conf;
  std::uint64_t distance_evals = 0;
};

/// One recurrent alignment step: propagate the previous motion field along
/// both paths, finetune against the current motion features, and convert the
/// minimum distances to confidences. Deterministic for fixed
/// (cfg.seed, state.frame_index).
inline AlignResult tmp_align(const AlignState& state, const FeatureMap& h0_cur,
                             const TmpConfig& cfg) {
  if (!state.prev_motion.same_shape(h0_cur) ||
      !state.prev_motion_features.same_shape(h0_cur))
    throw std::invalid_argument("tmp_align: state dimension mismatch");
  const RngStream rng(cfg.seed);
  const std::int64_t frame = state.frame_index + 1;
  // CAM first: its un-jittered deposit guarantees every pixel keeps its
  // inherited candidate even if OBJ scatter saturates the buffer later.
  CandidateBuffer buffers = propagate_cam(state.prev_motion, cfg, rng, frame);
  buffers.merge_from(propagate_obj(state.prev_motion, cfg, rng, frame));
  FinetuneResult ft = finetune(buffers, state.prev_motion_features, h0_cur, cfg);
  ConfidenceMap conf = confidence_from_distance(ft.dmin, cfg.a);
  return {std::move(ft.field), std::move(ft.dmin), std::move(conf), ft.distance_evals};
}

/// Cold start for the first frame pair: uniform random candidates plus the
/// zero offset, refined with twice the configured sweep count.
inline FinetuneResult init_motion_field(const FeatureMap& h0_first,
                                        const FeatureMap& h0_second, const TmpConfig& cfg,
                                        const RngStream& rng, std::int64_t frame_index = 1) {
  if (!h0_first.same_shape(h0_second) || h0_first.channels() != h0_second.channels())
    throw std::invalid_argument("init_motion_field: dimension mismatch");
  CandidateBuffer buf = detail::random_candidates(h0_first.width(), h0_first.height(), cfg,
                                                  rng, RngStream::Path::Init, frame_index);
  return detail::finetune_sweeps(std::move(buf), h0_first, h0_second, cfg, 2 * cfg.sweeps);
}

}  // namespace tmpalign
