#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmpalign/core.hpp"
#include "tmpalign/rng.hpp"

namespace tmpalign {

struct SpriteSpec {
  enum class Shape { Rect, Disk };
  Shape shape = Shape::Rect;
  int width = 8;
  int height = 8;
  double x0 = 0.0;  // top-left at frame 0
  double y0 = 0.0;
  double vx = 0.0;  // first-step velocity, pixels/frame
  double vy = 0.0;
  double ax = 0.0;  // per-frame velocity change
  double ay = 0.0;
  std::uint64_t texture_seed = 1;
};

struct SceneSpec {
  std::string name = "custom";
  int width = 64;
  int height = 64;
  int frames = 8;
  std::uint64_t background_seed = 1;
  int background_cell = 5;    // value-noise lattice spacing in pixels
  int background_cell_y = 0;  // 0 -> same as background_cell (isotropic)
  double cam_vx = 0.0;        // background content translation, pixels/frame
  double cam_vy = 0.0;
  std::vector<SpriteSpec> sprites;
};

struct Sequence {
  std::vector<FeatureMap> frames;     // luma in [0, 1], quantized to 8-bit levels
  std::vector<MotionField> gt;        // gt[t-1] maps frame t back to frame t-1
  std::vector<ValidityMask> valid;    // false where the gt source does not exist
};

namespace detail {

// Band-limited value noise: bilinear interpolation of hashed lattice values,
// two octaves, plus a faint per-texel grain. White noise would make sub-pixel
// matching ill-posed and flat texture would tie every argmin; the grain keeps
// 8-bit quantization from creating plateaus where wrong offsets also match
// exactly. Quantized to 8-bit levels so in-memory frames match their PNG
// round-trip exactly.
inline FeatureMap value_noise(int w, int h, std::uint64_t seed, int cell_x, int cell_y) {
  FeatureMap out(w, h, 1);
  const int cx[2] = {std::max(2, cell_x), std::max(2, cell_x / 2)};
  const int cy[2] = {std::max(2, cell_y), std::max(2, cell_y / 2)};
  const double weights[2] = {0.62, 0.28};
  const double grain = 0.10;
  auto lattice = [&](int octave, long gx, long gy) {
    std::uint64_t v = mix64(seed ^ (0x543ul + octave));
    v = hash_u64(v, static_cast<std::uint64_t>(gx));
    v = hash_u64(v, static_cast<std::uint64_t>(gy));
    return to_unit(v);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int o = 0; o < 2; ++o) {
        const long gx = x / cx[o];
        const long gy = y / cy[o];
        const double fx = static_cast<double>(x % cx[o]) / cx[o];
        const double fy = static_cast<double>(y % cy[o]) / cy[o];
        const double v00 = lattice(o, gx, gy);
        const double v10 = lattice(o, gx + 1, gy);
        const double v01 = lattice(o, gx, gy + 1);
        const double v11 = lattice(o, gx + 1, gy + 1);
        v += weights[o] * ((1 - fy) * ((1 - fx) * v00 + fx * v10) +
                           fy * ((1 - fx) * v01 + fx * v11));
      }
      v += grain * lattice(7, x, y);
      // keep away from pure black/white, then snap to 8-bit levels
      v = 0.06 + 0.88 * v;
      out.at(x, y, 0) = static_cast<float>(std::round(v * 255.0) / 255.0);
    }
  return out;
}

inline FeatureMap value_noise(int w, int h, std::uint64_t seed, int cell) {
  return value_noise(w, h, seed, cell, cell);
}

struct IVec {
  long x = 0;
  long y = 0;
};

inline bool sprite_covers(const SpriteSpec& s, int ux, int uy) {
  if (ux < 0 || ux >= s.width || uy < 0 || uy >= s.height) return false;
  if (s.shape == SpriteSpec::Shape::Rect) return true;
  const double cx = (s.width - 1) / 2.0;
  const double cy = (s.height - 1) / 2.0;
  const double r = std::min(s.width, s.height) / 2.0;
  const double dx = ux - cx;
  const double dy = uy - cy;
  return dx * dx + dy * dy <= r * r;
}

}  // namespace detail

/// Renders the scene with exact backward ground truth. Positions are rounded
/// to integers before rendering, so for integer velocities the frames are
/// plain texel copies and warping frame t-1 by the ground-truth field
/// reproduces frame t bit-exactly on valid pixels.
inline Sequence generate_sequence(const SceneSpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("scene must have at least one frame");
  detail::checked_extent(spec.width, spec.height);
  for (const SpriteSpec& s : spec.sprites) {
    if (s.width <= 0 || s.height <= 0)
      throw std::invalid_argument("sprite dimensions must be positive");
    if (s.width > spec.width || s.height > spec.height)
      throw std::invalid_argument("sprite larger than frame");
  }
  const int w = spec.width;
  const int h = spec.height;
  const int frames = spec.frames;
  const int n_sprites = static_cast<int>(spec.sprites.size());

  // Integer camera positions and per-sprite positions and steps per frame.
  std::vector<detail::IVec> cam(frames);
  for (int t = 0; t < frames; ++t)
    cam[t] = {std::lround(spec.cam_vx * t), std::lround(spec.cam_vy * t)};

  std::vector<std::vector<detail::IVec>> pos(n_sprites, std::vector<detail::IVec>(frames));
  std::vector<std::vector<detail::IVec>> step(n_sprites, std::vector<detail::IVec>(frames));
  for (int i = 0; i < n_sprites; ++i) {
    const SpriteSpec& s = spec.sprites[i];
    pos[i][0] = {std::lround(s.x0), std::lround(s.y0)};
    for (int t = 1; t < frames; ++t) {
      step[i][t] = {std::lround(s.vx + s.ax * (t - 1)), std::lround(s.vy + s.ay * (t - 1))};
      pos[i][t] = {pos[i][t - 1].x + step[i][t].x, pos[i][t - 1].y + step[i][t].y};
    }
  }

  // Background texture sized to cover every camera window.
  long min_sx = 0, max_sx = 0, min_sy = 0, max_sy = 0;
  for (int t = 0; t < frames; ++t) {
    min_sx = std::min(min_sx, -cam[t].x);
    max_sx = std::max(max_sx, -cam[t].x);
    min_sy = std::min(min_sy, -cam[t].y);
    max_sy = std::max(max_sy, -cam[t].y);
  }
  const int tex_w = static_cast<int>(w + max_sx - min_sx);
  const int tex_h = static_cast<int>(h + max_sy - min_sy);
  const FeatureMap bg = detail::value_noise(
      tex_w, tex_h, spec.background_seed, spec.background_cell,
      spec.background_cell_y > 0 ? spec.background_cell_y : spec.background_cell);
  const long off_x = -min_sx;
  const long off_y = -min_sy;

  std::vector<FeatureMap> sprite_tex;
  sprite_tex.reserve(n_sprites);
  for (int i = 0; i < n_sprites; ++i)
    sprite_tex.push_back(detail::value_noise(spec.sprites[i].width, spec.sprites[i].height,
                                             spec.sprites[i].texture_seed, 3));

  Sequence seq;
  seq.frames.reserve(frames);
  std::vector<Grid<int>> owner;
  owner.reserve(frames);

  for (int t = 0; t < frames; ++t) {
    FeatureMap f(w, h, 1);
    Grid<int> own(w, h, -1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        f.at(x, y, 0) = bg.at(static_cast<int>(x - cam[t].x + off_x),
                              static_cast<int>(y - cam[t].y + off_y), 0);
    for (int i = 0; i < n_sprites; ++i) {
      const SpriteSpec& s = spec.sprites[i];
      for (int uy = 0; uy < s.height; ++uy)
        for (int ux = 0; ux < s.width; ++ux) {
          if (!detail::sprite_covers(s, ux, uy)) continue;
          const long gx = pos[i][t].x + ux;
          const long gy = pos[i][t].y + uy;
          if (gx < 0 || gx >= w || gy < 0 || gy >= h) continue;
          f.at(static_cast<int>(gx), static_cast<int>(gy), 0) = sprite_tex[i].at(ux, uy, 0);
          own.at(static_cast<int>(gx), static_cast<int>(gy)) = i;
        }
    }
    seq.frames.push_back(std::move(f));
    owner.push_back(std::move(own));
  }

  for (int t = 1; t < frames; ++t) {
    MotionField gt(w, h);
    ValidityMask valid(w, h, 0);
    const detail::IVec cam_step{cam[t].x - cam[t - 1].x, cam[t].y - cam[t - 1].y};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int o = owner[t].at(x, y);
        detail::IVec mstep = cam_step;
        if (o >= 0) mstep = step[o][t];
        const Offset off{static_cast<float>(-mstep.x), static_cast<float>(-mstep.y)};
        gt.at(x, y) = off;
        const long sx = x - mstep.x;
        const long sy = y - mstep.y;
        const bool ok = sx >= 0 && sx < w && sy >= 0 && sy < h &&
                        owner[t - 1].at(static_cast<int>(sx), static_cast<int>(sy)) == o;
        valid.at(x, y) = ok ? 1 : 0;
      }
    seq.gt.push_back(std::move(gt));
    seq.valid.push_back(std::move(valid));
  }
  return seq;
}

inline std::vector<std::string> preset_names() {
  return {"pan", "sprite", "disocclusion", "accel", "occluder"};
}

/// Concrete scene for a named preset at the requested geometry.
inline SceneSpec scenario_preset(const std::string& name, int width, int height, int frames,
                                 std::uint64_t seed) {
  SceneSpec spec;
  spec.name = name;
  spec.width = width;
  spec.height = height;
  spec.frames = frames;
  spec.background_seed = seed;
  const int side = std::min(width, height);
  auto sprite_seed = [&](int i) { return detail::hash_u64(seed, 0xBEEF + i); };

  if (name == "pan") {
    spec.cam_vx = 2;
    spec.cam_vy = 1;
    return spec;
  }
  if (name == "sprite") {
    SpriteSpec s;
    s.width = s.height = std::max(6, side / 4);
    s.x0 = width / 8;
    s.y0 = (height - s.height) / 2;
    s.vx = 3;
    s.texture_seed = sprite_seed(0);
    spec.sprites.push_back(s);
    return spec;
  }
  if (name == "disocclusion") {
    // Full-height bars drift slower than the pan, so background keeps
    // being revealed beside them. The revealed pixels' true source hides
    // under the bar, which starves the OBJ path of exactly the candidate
    // the CAM path carries over from the pixel's own history. The
    // background is smooth along the pan direction and detailed across
    // it, the structure that lets a carried-over camera offset score well
    // even where its literal source was covered.
    spec.cam_vx = 3;
    spec.cam_vy = 0;
    spec.background_cell = 20;
    spec.background_cell_y = 4;
    const int bar_w = std::max(6, width / 6);
    for (int i = 0; i < 2; ++i) {
      SpriteSpec s;
      s.width = bar_w;
      s.height = height;
      s.x0 = (2 * i + 1) * width / 6 + i * bar_w;
      s.y0 = 0;
      s.vx = 1;
      s.texture_seed = sprite_seed(i);
      spec.sprites.push_back(s);
    }
    return spec;
  }
  if (name == "accel") {
    SpriteSpec s;
    s.width = s.height = std::max(6, side / 5);
    s.x0 = width / 10;
    s.y0 = (height - s.height) / 2;
    s.vx = 1;
    s.ax = 1;
    s.texture_seed = sprite_seed(0);
    spec.sprites.push_back(s);
    return spec;
  }
  if (name == "occluder") {
    SpriteSpec s;
    s.width = s.height = std::max(8, side / 4);
    s.x0 = width / 12;
    s.y0 = height / 3;
    s.vx = 5;
    s.texture_seed = sprite_seed(0);
    spec.sprites.push_back(s);
    return spec;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

inline std::vector<SceneSpec> scenario_presets(int width = 64, int height = 64,
                                               int frames = 8, std::uint64_t seed = 1) {
  std::vector<SceneSpec> out;
  for (const std::string& n : preset_names())
    out.push_back(scenario_preset(n, width, height, frames, seed));
  return out;
}

}  // namespace tmpalign
