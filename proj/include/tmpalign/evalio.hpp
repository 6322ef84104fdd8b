#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmpalign/core.hpp"
#include "tmpalign/png_io.hpp"

namespace tmpalign {

static_assert(std::endian::native == std::endian::little,
              "flow file I/O assumes a little-endian host");

// ---------------------------------------------------------------------------
// Metrics

struct EpeStats {
  double mean = 0.0;
  double median = 0.0;
  double frac_le_1px = 0.0;
  std::size_t count = 0;
};

/// Euclidean endpoint error between estimated and ground-truth offsets over
/// the masked-in pixels (all pixels when mask is null).
inline EpeStats epe(const MotionField& est, const MotionField& gt,
                    const ValidityMask* mask = nullptr) {
  if (!est.same_shape(gt)) throw std::invalid_argument("epe: dimension mismatch");
  if (mask && !est.same_shape(*mask)) throw std::invalid_argument("epe: mask dimension mismatch");
  std::vector<double> errors;
  errors.reserve(est.size());
  for (int y = 0; y < est.height(); ++y)
    for (int x = 0; x < est.width(); ++x) {
      if (mask && !mask->at(x, y)) continue;
      const Offset a = est.at(x, y);
      const Offset b = gt.at(x, y);
      errors.push_back(std::hypot(static_cast<double>(a.dx) - b.dx,
                                  static_cast<double>(a.dy) - b.dy));
    }
  if (errors.empty()) throw std::invalid_argument("epe: empty mask");

  EpeStats stats;
  stats.count = errors.size();
  double sum = 0.0;
  std::size_t le1 = 0;
  for (double e : errors) {
    sum += e;
    if (e <= 1.0) ++le1;
  }
  stats.mean = sum / errors.size();
  stats.frac_le_1px = static_cast<double>(le1) / errors.size();
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  stats.median = (n % 2 == 1) ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  return stats;
}

/// 10*log10(1 / MSE) over included pixels, inputs in [0, 1]. A perfect match
/// (MSE = 0) reports the +infinity sentinel.
inline double warping_psnr(const FeatureMap& frame_cur, const FeatureMap& warped_prev,
                           const ValidityMask* mask = nullptr) {
  if (!frame_cur.same_shape(warped_prev) || frame_cur.channels() != warped_prev.channels())
    throw std::invalid_argument("warping_psnr: dimension mismatch");
  if (mask && !frame_cur.same_shape(*mask))
    throw std::invalid_argument("warping_psnr: mask dimension mismatch");
  double se = 0.0;
  std::size_t n = 0;
  const int ch = frame_cur.channels();
  for (int y = 0; y < frame_cur.height(); ++y)
    for (int x = 0; x < frame_cur.width(); ++x) {
      if (mask && !mask->at(x, y)) continue;
      const float* a = frame_cur.pixel(x, y);
      const float* b = warped_prev.pixel(x, y);
      for (int c = 0; c < ch; ++c) {
        const double d = static_cast<double>(a[c]) - b[c];
        se += d * d;
      }
      ++n;
    }
  if (n == 0) throw std::invalid_argument("warping_psnr: no pixels selected");
  const double mse = se / (static_cast<double>(n) * ch);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

struct StratifiedPsnr {
  double psnr_high = 0.0;
  double psnr_all = 0.0;
};

/// Warping PSNR over pixels with confidence >= threshold vs. over all pixels.
inline StratifiedPsnr confidence_stratified_psnr(const FeatureMap& frame_cur,
                                                 const FeatureMap& warped_prev,
                                                 const ConfidenceMap& conf,
                                                 double threshold = 0.9) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("confidence threshold must lie in (0, 1)");
  if (!frame_cur.same_shape(conf))
    throw std::invalid_argument("confidence_stratified_psnr: dimension mismatch");
  ValidityMask high(conf.width(), conf.height(), 0);
  std::size_t n_high = 0;
  for (int y = 0; y < conf.height(); ++y)
    for (int x = 0; x < conf.width(); ++x)
      if (conf.at(x, y) >= threshold) {
        high.at(x, y) = 1;
        ++n_high;
      }
  if (n_high == 0) throw std::invalid_argument("no pixel above confidence threshold");
  return {warping_psnr(frame_cur, warped_prev, &high), warping_psnr(frame_cur, warped_prev)};
}

// ---------------------------------------------------------------------------
// Middlebury .flo interchange

inline constexpr float kFloMagic = 202021.25f;

/// Middlebury layout: float magic 202021.25, int32 width, int32 height, then
/// row-major interleaved (dx, dy) float pairs, all little-endian.
inline void write_flo(const MotionField& field, const std::string& path) {
  if (field.empty()) throw std::invalid_argument("write_flo: empty field");
  if (!field.all_finite()) throw std::invalid_argument("write_flo: non-finite value");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::int32_t w = field.width();
  const std::int32_t h = field.height();
  out.write(reinterpret_cast<const char*>(&kFloMagic), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(field.data().data()),
            static_cast<std::streamsize>(field.size() * sizeof(Offset)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline MotionField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  float magic = 0.0f;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (!in || magic != kFloMagic) throw std::runtime_error("not a flow file: " + path);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || w <= 0 || h <= 0 || static_cast<std::int64_t>(w) * h > (1ll << 30))
    throw std::runtime_error("bad flow file header: " + path);
  MotionField field(w, h);
  in.read(reinterpret_cast<char*>(field.data().data()),
          static_cast<std::streamsize>(field.size() * sizeof(Offset)));
  if (in.gcount() != static_cast<std::streamsize>(field.size() * sizeof(Offset)))
    throw std::runtime_error("truncated flow file: " + path);
  return field;
}

// ---------------------------------------------------------------------------
// Visualization

namespace detail {

// Middlebury flow color wheel (Baker et al. benchmark convention).
inline const std::vector<std::array<double, 3>>& colorwheel() {
  static const std::vector<std::array<double, 3>> wheel = [] {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<double, 3>> w;
    w.reserve(RY + YG + GC + CB + BM + MR);
    for (int i = 0; i < RY; ++i) w.push_back({1.0, static_cast<double>(i) / RY, 0.0});
    for (int i = 0; i < YG; ++i) w.push_back({1.0 - static_cast<double>(i) / YG, 1.0, 0.0});
    for (int i = 0; i < GC; ++i) w.push_back({0.0, 1.0, static_cast<double>(i) / GC});
    for (int i = 0; i < CB; ++i) w.push_back({0.0, 1.0 - static_cast<double>(i) / CB, 1.0});
    for (int i = 0; i < BM; ++i) w.push_back({static_cast<double>(i) / BM, 0.0, 1.0});
    for (int i = 0; i < MR; ++i) w.push_back({1.0, 0.0, 1.0 - static_cast<double>(i) / MR});
    return w;
  }();
  return wheel;
}

inline std::array<std::uint8_t, 3> flow_color(double fx, double fy) {
  const auto& wheel = colorwheel();
  const int ncols = static_cast<int>(wheel.size());
  const double rad = std::sqrt(fx * fx + fy * fy);
  const double a = std::atan2(-fy, -fx) / 3.14159265358979323846;
  const double fk = (a + 1.0) / 2.0 * (ncols - 1);
  const int k0 = static_cast<int>(std::floor(fk));
  const int k1 = (k0 + 1) % ncols;
  const double f = fk - k0;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
    if (rad <= 1.0)
      col = 1.0 - rad * (1.0 - col);  // desaturate toward white at the center
    else
      col *= 0.75;
    out[c] = static_cast<std::uint8_t>(std::lround(255.0 * col));
  }
  return out;
}

}  // namespace detail

/// Flow color-wheel PNG, hue from direction, saturation from magnitude
/// normalized by the field's maximum. The zero field renders white.
inline void write_flow_png(const MotionField& field, const std::string& path) {
  if (field.empty()) throw std::invalid_argument("write_flow_png: empty field");
  if (!field.all_finite()) throw std::invalid_argument("write_flow_png: non-finite value");
  double max_rad = 0.0;
  for (const Offset& o : field.data())
    max_rad = std::max(max_rad, std::sqrt(o.magnitude_sq()));
  if (max_rad == 0.0) max_rad = 1.0;
  std::vector<std::uint8_t> rgb(field.size() * 3);
  for (int y = 0; y < field.height(); ++y)
    for (int x = 0; x < field.width(); ++x) {
      const Offset o = field.at(x, y);
      const auto c = detail::flow_color(o.dx / max_rad, o.dy / max_rad);
      const std::size_t i = field.index(x, y) * 3;
      rgb[i] = c[0];
      rgb[i + 1] = c[1];
      rgb[i + 2] = c[2];
    }
  write_png_rgb(path, field.width(), field.height(), rgb);
}

/// Confidence heatmap as grayscale: 0 -> black, 1 -> white.
inline void write_confidence_png(const ConfidenceMap& conf, const std::string& path) {
  if (conf.empty()) throw std::invalid_argument("write_confidence_png: empty map");
  FeatureMap img(conf.width(), conf.height(), 1);
  for (int y = 0; y < conf.height(); ++y)
    for (int x = 0; x < conf.width(); ++x)
      img.at(x, y, 0) = static_cast<float>(std::clamp(conf.at(x, y), 0.0, 1.0));
  write_png_gray(path, img);
}

inline ConfidenceMap read_confidence_png(const std::string& path) {
  const FeatureMap img = read_png_gray(path);
  ConfidenceMap conf(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) conf.at(x, y) = img.at(x, y, 0);
  return conf;
}

// ---------------------------------------------------------------------------
// CSV reports

struct FrameReport {
  std::string frame;  // frame index, or "all" for the aggregate row
  double mean_epe = std::numeric_limits<double>::quiet_NaN();
  double median_epe = std::numeric_limits<double>::quiet_NaN();
  double pct_le_1px = std::numeric_limits<double>::quiet_NaN();
  double warp_psnr = std::numeric_limits<double>::quiet_NaN();
  double mean_conf = std::numeric_limits<double>::quiet_NaN();
  double ms_per_frame = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> warp_psnr_high;
};

namespace detail {
inline std::string csv_cell(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<FrameReport>& rows,
                      bool stratified) {
  out << "frame,mean_epe,median_epe,pct_le_1px,warp_psnr,mean_conf,ms_per_frame";
  if (stratified) out << ",warp_psnr_high";
  out << "\n";
  for (const FrameReport& r : rows) {
    out << r.frame << ',' << detail::csv_cell(r.mean_epe) << ',' << detail::csv_cell(r.median_epe)
        << ',' << detail::csv_cell(r.pct_le_1px) << ',' << detail::csv_cell(r.warp_psnr) << ','
        << detail::csv_cell(r.mean_conf) << ',' << detail::csv_cell(r.ms_per_frame);
    if (stratified)
      out << ',' << (r.warp_psnr_high ? detail::csv_cell(*r.warp_psnr_high) : std::string());
    out << "\n";
  }
}

inline void write_csv(const std::string& path, const std::vector<FrameReport>& rows,
                      bool stratified) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(out, rows, stratified);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace tmpalign
