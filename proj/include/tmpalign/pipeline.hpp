#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "tmpalign/core.hpp"
#include "tmpalign/features.hpp"
#include "tmpalign/oracle.hpp"
#include "tmpalign/tmp.hpp"
#include "tmpalign/warp.hpp"

namespace tmpalign {

enum class AlignMode { Tmp, Scratch, ObjOnly, CamOnly, NoAlign, FullSearch };
enum class WeightingMode { None, Mcwf, Srf };

inline AlignMode parse_align_mode(const std::string& s) {
  if (s == "tmp") return AlignMode::Tmp;
  if (s == "scratch") return AlignMode::Scratch;
  if (s == "obj-only") return AlignMode::ObjOnly;
  if (s == "cam-only") return AlignMode::CamOnly;
  if (s == "no-align") return AlignMode::NoAlign;
  if (s == "full-search") return AlignMode::FullSearch;
  throw std::invalid_argument(
      "unknown mode '" + s + "' (expected tmp|scratch|obj-only|cam-only|no-align|full-search)");
}

inline std::string to_string(AlignMode m) {
  switch (m) {
    case AlignMode::Tmp: return "tmp";
    case AlignMode::Scratch: return "scratch";
    case AlignMode::ObjOnly: return "obj-only";
    case AlignMode::CamOnly: return "cam-only";
    case AlignMode::NoAlign: return "no-align";
    case AlignMode::FullSearch: return "full-search";
  }
  return "?";
}

inline WeightingMode parse_weighting(const std::string& s) {
  if (s == "mcwf") return WeightingMode::Mcwf;
  if (s == "srf") return WeightingMode::Srf;
  if (s == "none") return WeightingMode::None;
  throw std::invalid_argument("unknown weighting '" + s + "' (expected mcwf|srf|none)");
}

struct PipelineOptions {
  TmpConfig cfg;
  AlignMode mode = AlignMode::Tmp;
  WeightingMode weighting = WeightingMode::None;
  int full_search_radius = 15;
};

struct FrameOutput {
  std::int64_t frame_index = 0;
  MotionField flow;
  DistanceMap dmin;
  ConfidenceMap conf;
  FeatureMap warped;  // previous luma warped by flow, weighting applied
  double ms = 0.0;
  std::uint64_t distance_evals = 0;
};

/// Drives alignment over an online sequence: feed luma frames in order, get
/// the per-frame flow, distance, confidence, and warped previous frame back.
/// The first frame only primes the recurrent state.
class SequenceAligner {
 public:
  explicit SequenceAligner(PipelineOptions opts) : opts_(std::move(opts)) {
    opts_.cfg = validate_config(opts_.cfg);
    rng_ = RngStream(opts_.cfg.seed);
    if (opts_.full_search_radius < 0)
      throw std::invalid_argument("full-search radius must be non-negative");
  }

  const TmpConfig& config() const { return opts_.cfg; }
  const AlignState& state() const { return state_; }

  std::optional<FrameOutput> push(const FeatureMap& frame) {
    detail::require_luma(frame);
    const auto t_start = std::chrono::steady_clock::now();
    const TmpConfig& cfg = opts_.cfg;
    FeatureMap h0 = extract_motion_features(frame, cfg);

    if (!primed_) {
      state_.prev_motion = MotionField(frame.width(), frame.height());
      state_.prev_motion_features = std::move(h0);
      state_.prev_texture = frame;
      state_.frame_index = 0;
      primed_ = true;
      return std::nullopt;
    }
    if (frame.width() != state_.prev_texture.width() ||
        frame.height() != state_.prev_texture.height())
      throw std::invalid_argument("dimension changes mid-sequence");

    const std::int64_t t = state_.frame_index + 1;
    MotionField flow;
    DistanceMap dmin;
    std::uint64_t evals = 0;

    switch (opts_.mode) {
      case AlignMode::NoAlign: {
        // Table-style baseline: fuse the previous frame as-is.
        flow = MotionField(frame.width(), frame.height());
        dmin = DistanceMap(frame.width(), frame.height());
        const FeatureMap& h_prev = state_.prev_motion_features;
        parallel_for_rows(frame.height(), [&](int y0, int y1) {
          for (int y = y0; y < y1; ++y)
            for (int x = 0; x < frame.width(); ++x)
              dmin.at(x, y) = matching_distance(h_prev, h0, x, y, Offset{0.0f, 0.0f}, cfg);
        });
        evals = static_cast<std::uint64_t>(frame.width()) * frame.height();
        break;
      }
      case AlignMode::FullSearch: {
        SearchResult r =
            full_search(state_.prev_motion_features, h0, opts_.full_search_radius, cfg);
        flow = std::move(r.field);
        dmin = std::move(r.dmin);
        evals = r.distance_evals;
        break;
      }
      case AlignMode::Scratch: {
        FinetuneResult r = scratch_align(state_.prev_motion_features, h0, cfg, rng_, t);
        flow = std::move(r.field);
        dmin = std::move(r.dmin);
        evals = r.distance_evals;
        break;
      }
      case AlignMode::Tmp: {
        if (t == 1) {
          FinetuneResult r = init_motion_field(state_.prev_motion_features, h0, cfg, rng_, t);
          flow = std::move(r.field);
          dmin = std::move(r.dmin);
          evals = r.distance_evals;
        } else {
          AlignResult r = tmp_align(state_, h0, cfg);
          flow = std::move(r.field);
          dmin = std::move(r.dmin);
          evals = r.distance_evals;
        }
        break;
      }
      case AlignMode::ObjOnly:
      case AlignMode::CamOnly: {
        if (t == 1) {
          FinetuneResult r = init_motion_field(state_.prev_motion_features, h0, cfg, rng_, t);
          flow = std::move(r.field);
          dmin = std::move(r.dmin);
          evals = r.distance_evals;
        } else {
          CandidateBuffer buffers = opts_.mode == AlignMode::ObjOnly
                                        ? propagate_obj(state_.prev_motion, cfg, rng_, t)
                                        : propagate_cam(state_.prev_motion, cfg, rng_, t);
          if (opts_.mode == AlignMode::ObjOnly) ensure_covered(buffers);
          FinetuneResult r = finetune(buffers, state_.prev_motion_features, h0, cfg);
          flow = std::move(r.field);
          dmin = std::move(r.dmin);
          evals = r.distance_evals;
        }
        break;
      }
    }

    ConfidenceMap conf = confidence_from_distance(dmin, cfg.a);
    FeatureMap warped = backward_warp(state_.prev_texture, flow);
    if (opts_.weighting == WeightingMode::Mcwf) {
      warped = mcwf_weight(warped, conf);
    } else if (opts_.weighting == WeightingMode::Srf) {
      warped = srf_weight(warped, extract_texture_features(frame, cfg));
    }

    state_.prev_motion = flow;
    state_.prev_motion_features = std::move(h0);
    state_.prev_texture = frame;
    state_.frame_index = t;

    FrameOutput out;
    out.frame_index = t;
    out.flow = std::move(flow);
    out.dmin = std::move(dmin);
    out.conf = std::move(conf);
    out.warped = std::move(warped);
    out.distance_evals = evals;
    out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                       t_start)
                 .count();
    return out;
  }

 private:
  // OBJ scatter leaves gaps where no source maps into a pixel. Those pixels
  // carry no motion information in this mode, so they get the neutral zero
  // candidate; handing them their previous offset would re-create the CAM
  // path's inheritance and blur the ablation.
  static void ensure_covered(CandidateBuffer& buffers) {
    for (int y = 0; y < buffers.height(); ++y)
      for (int x = 0; x < buffers.width(); ++x)
        if (buffers.count(x, y) == 0)
          buffers.push(x, y, Offset{0.0f, 0.0f}, Provenance::Inherited);
  }

  PipelineOptions opts_;
  RngStream rng_;
  AlignState state_;
  bool primed_ = false;
};

}  // namespace tmpalign
