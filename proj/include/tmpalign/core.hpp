#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmpalign {

// Coordinate convention, used everywhere without exception:
//   x = column, y = row, origin top-left.
// A motion field stores backward offsets: pixel (x, y) of frame t sources
// from (x + dx, y + dy) in frame t-1.
struct Offset {
  float dx = 0.0f;
  float dy = 0.0f;

  double magnitude_sq() const {
    return static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
  }
};

inline bool operator==(Offset a, Offset b) { return a.dx == b.dx && a.dy == b.dy; }
inline bool operator!=(Offset a, Offset b) { return !(a == b); }

enum class DistanceMode { Sum, ChannelMean };

struct TmpConfig {
  int k = 2;                // jittered candidates per propagation path per pixel
  double sigma = 30.0;      // jitter std in LR pixels
  double a = 1.0;           // confidence decay in C = exp(-a * D_min)
  int sweeps = 2;           // finetune iterations
  int neighbor_radius = 1;  // 1 -> 8-connected diffusion
  int capacity = 16;        // per-pixel candidate cap
  std::optional<double> max_offset;  // unset -> min(3 * sigma, max(W, H))
  int patch_radius = 1;     // descriptor patch half-width
  std::uint64_t seed = 0;
  DistanceMode distance_mode = DistanceMode::ChannelMean;
};

/// Checks every config invariant, throws std::invalid_argument with a
/// distinct message per violation, and returns the config unchanged.
inline TmpConfig validate_config(TmpConfig cfg) {
  if (cfg.k < 0) throw std::invalid_argument("candidate count k must be non-negative");
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("jitter sigma must be non-negative");
  if (!(cfg.a > 0.0)) throw std::invalid_argument("confidence decay must be positive");
  if (cfg.sweeps < 1) throw std::invalid_argument("sweeps must be at least 1");
  if (cfg.capacity < 2 * cfg.k + 2)
    throw std::invalid_argument("capacity must be at least 2k+2");
  if (cfg.neighbor_radius < 0)
    throw std::invalid_argument("neighbor radius must be non-negative");
  if (cfg.patch_radius < 0)
    throw std::invalid_argument("patch radius must be non-negative");
  if (cfg.max_offset && !(*cfg.max_offset >= 0.0))
    throw std::invalid_argument("max offset must be non-negative");
  return cfg;
}

/// Offset clamp bound for a given frame geometry. At sigma = 0 jitter is off
/// and the clamp must not bind, or inherited offsets could not survive.
inline double resolved_max_offset(const TmpConfig& cfg, int width, int height) {
  if (cfg.max_offset) return *cfg.max_offset;
  const double extent = std::max(width, height);
  return cfg.sigma > 0.0 ? std::min(3.0 * cfg.sigma, extent) : extent;
}

namespace detail {
inline std::size_t checked_extent(int width, int height) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("frame dimensions must be positive");
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}
}  // namespace detail

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(detail::checked_extent(width, height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  template <typename OtherGrid>
  bool same_shape(const OtherGrid& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Per-pixel backward offsets in pixels (dx, dy), real-valued.
class MotionField : public Grid<Offset> {
 public:
  using Grid<Offset>::Grid;

  bool all_finite() const {
    for (const Offset& o : data())
      if (!std::isfinite(o.dx) || !std::isfinite(o.dy)) return false;
    return true;
  }

  double max_abs_component() const {
    double m = 0.0;
    for (const Offset& o : data())
      m = std::max({m, std::abs(static_cast<double>(o.dx)), std::abs(static_cast<double>(o.dy))});
    return m;
  }
};

/// Minimum matching distance attained by the chosen offset, per pixel.
class DistanceMap : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

/// C = exp(-a * D_min), values in (0, 1].
class ConfidenceMap : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

using ValidityMask = Grid<std::uint8_t>;

/// H x W x C descriptor grid with interleaved channels. A plain luma frame
/// is the single-channel case.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int width, int height, int channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels) {
    detail::checked_extent(width, height);
    if (channels <= 0) throw std::invalid_argument("channel count must be positive");
    values_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return values_.empty(); }

  float& at(int x, int y, int c) { return values_[index(x, y, c)]; }
  const float& at(int x, int y, int c) const { return values_[index(x, y, c)]; }

  const float* pixel(int x, int y) const {
    return values_.data() + index(x, y, 0);
  }
  float* pixel(int x, int y) { return values_.data() + index(x, y, 0); }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  template <typename OtherGrid>
  bool same_shape(const OtherGrid& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool all_finite() const {
    for (float v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::vector<float>& data() { return values_; }
  const std::vector<float>& data() const { return values_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> values_;
};

enum class Provenance : std::uint8_t { Inherited, Obj, Cam, Neighbor };

struct Candidate {
  Offset offset;
  // Matching distance cache, NaN until evaluated. The cache keeps repeated
  // sweeps from re-measuring the same offset.
  double distance = std::numeric_limits<double>::quiet_NaN();
  Provenance tag = Provenance::Inherited;

  bool evaluated() const { return !std::isnan(distance); }
};

/// Bounded per-pixel set of offset candidates. Insertion order is preserved,
/// exact duplicates (same dx and dy bits) are dropped, and a full pixel
/// rejects later arrivals so the scan order alone decides survival.
class CandidateBuffer {
 public:
  CandidateBuffer() = default;
  CandidateBuffer(int width, int height, int capacity)
      : width_(width), height_(height), capacity_(capacity) {
    detail::checked_extent(width, height);
    if (capacity < 1) throw std::invalid_argument("candidate capacity must be positive");
    slots_.resize(static_cast<std::size_t>(width) * height * capacity);
    counts_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  CandidateBuffer(int width, int height, const TmpConfig& cfg)
      : CandidateBuffer(width, height, cfg.capacity) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int capacity() const { return capacity_; }

  int count(int x, int y) const { return counts_[pixel_index(x, y)]; }

  Candidate& slot(int x, int y, int i) {
    return slots_[pixel_index(x, y) * capacity_ + i];
  }
  const Candidate& slot(int x, int y, int i) const {
    return slots_[pixel_index(x, y) * capacity_ + i];
  }

  /// Returns true if stored; false when deduplicated or saturated.
  bool push(int x, int y, Offset offset, Provenance tag) {
    const std::size_t p = pixel_index(x, y);
    const int n = counts_[p];
    Candidate* base = slots_.data() + p * capacity_;
    for (int i = 0; i < n; ++i)
      if (base[i].offset == offset) return false;
    if (n >= capacity_) return false;
    base[n].offset = offset;
    base[n].distance = std::numeric_limits<double>::quiet_NaN();
    base[n].tag = tag;
    counts_[p] = n + 1;
    return true;
  }

  bool contains(int x, int y, Offset offset) const {
    const std::size_t p = pixel_index(x, y);
    const Candidate* base = slots_.data() + p * capacity_;
    for (int i = 0; i < counts_[p]; ++i)
      if (base[i].offset == offset) return true;
    return false;
  }

  /// Appends the other buffer's candidates pixel by pixel, keeping this
  /// buffer's entries first. Dedup and saturation rules apply.
  void merge_from(const CandidateBuffer& other) {
    if (other.width_ != width_ || other.height_ != height_)
      throw std::invalid_argument("candidate buffer dimension mismatch");
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) {
        const int n = other.count(x, y);
        for (int i = 0; i < n; ++i) {
          const Candidate& c = other.slot(x, y, i);
          push(x, y, c.offset, c.tag);
        }
      }
  }

 private:
  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int capacity_ = 0;
  std::vector<Candidate> slots_;
  std::vector<int> counts_;
};

/// Recurrent carry between frames: everything alignment needs from frame t-1.
struct AlignState {
  MotionField prev_motion;
  FeatureMap prev_motion_features;  // H0 of frame t-1
  FeatureMap prev_texture;          // H1 of frame t-1
  std::int64_t frame_index = 0;     // index of the frame this state describes
};

}  // namespace tmpalign
