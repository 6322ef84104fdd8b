#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "tmpalign/oracle.hpp"
#include "tmpalign/rng.hpp"

using namespace tmpalign;

namespace {

FeatureMap random_features(int w, int h, int ch, std::uint64_t seed) {
  const RngStream rng(seed);
  FeatureMap f(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        f.at(x, y, c) = static_cast<float>(
            rng.uniform2(c, f.index(x, y, 0), RngStream::Path::Scene, 1).first);
  return f;
}

// Independent re-implementation of the exhaustive search: direct clamped
// lookups instead of bilinear taps, its own accumulation and tie rules.
void reference_search(const FeatureMap& prev, const FeatureMap& cur, int radius,
                      bool channel_mean, MotionField& field, DistanceMap& dmin) {
  const int w = cur.width();
  const int h = cur.height();
  field = MotionField(w, h);
  dmin = DistanceMap(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best_d = std::numeric_limits<double>::infinity();
      double best_mag = std::numeric_limits<double>::infinity();
      Offset best{0.0f, 0.0f};
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int sx = std::clamp(x + dx, 0, w - 1);
          const int sy = std::clamp(y + dy, 0, h - 1);
          double d = 0.0;
          for (int c = 0; c < cur.channels(); ++c) {
            const double diff =
                static_cast<double>(prev.at(sx, sy, c)) - static_cast<double>(cur.at(x, y, c));
            d += diff * diff;
          }
          if (channel_mean) d /= cur.channels();
          const double mag = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
          if (d < best_d || (d == best_d && mag < best_mag)) {
            best_d = d;
            best_mag = mag;
            best = Offset{static_cast<float>(dx), static_cast<float>(dy)};
          }
        }
      field.at(x, y) = best;
      dmin.at(x, y) = best_d;
    }
}

}  // namespace

TEST_CASE("full search on identical frames picks the zero offset everywhere") {
  TmpConfig cfg = validate_config(TmpConfig{});
  const FeatureMap f = random_features(10, 8, 4, 2);
  const SearchResult r = full_search(f, f, 3, cfg);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) {
      CHECK(r.field.at(x, y) == Offset{0.0f, 0.0f});
      CHECK(r.dmin.at(x, y) == 0.0);
    }
}

TEST_CASE("full search recovers an impulse displacement exactly") {
  TmpConfig cfg = validate_config(TmpConfig{});
  // cur(x, y) = prev(x + 3, y - 2): the impulse at prev (6, 2) shows up at
  // cur (3, 4), where the offset (3, -2) is the unique zero-distance match.
  FeatureMap prev(9, 9, 1, 0.0f);
  FeatureMap cur(9, 9, 1, 0.0f);
  prev.at(6, 2, 0) = 1.0f;
  cur.at(3, 4, 0) = 1.0f;
  const SearchResult r = full_search(prev, cur, 4, cfg);
  CHECK(r.field.at(3, 4) == Offset{3.0f, -2.0f});
  CHECK(r.dmin.at(3, 4) == 0.0);
}

TEST_CASE("full search matches an independent brute-force re-implementation") {
  for (const bool channel_mean : {true, false}) {
    TmpConfig cfg;
    cfg.distance_mode = channel_mean ? DistanceMode::ChannelMean : DistanceMode::Sum;
    cfg = validate_config(cfg);
    const FeatureMap prev = random_features(16, 16, 3, 41);
    const FeatureMap cur = random_features(16, 16, 3, 42);
    const SearchResult r = full_search(prev, cur, 4, cfg);
    MotionField ref_field;
    DistanceMap ref_dmin;
    reference_search(prev, cur, 4, channel_mean, ref_field, ref_dmin);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        CHECK(r.field.at(x, y) == ref_field.at(x, y));
        CHECK(r.dmin.at(x, y) == ref_dmin.at(x, y));
      }
  }
}

TEST_CASE("full search evaluation count is exactly W H (2r+1)^2") {
  TmpConfig cfg = validate_config(TmpConfig{});
  const FeatureMap f = random_features(16, 16, 2, 7);
  const SearchResult r = full_search(f, f, 4, cfg);
  CHECK(r.distance_evals == 16ull * 16ull * 81ull);
  const SearchResult r0 = full_search(f, f, 0, cfg);
  CHECK(r0.distance_evals == 256ull);
}

TEST_CASE("scratch alignment settles on the zero field for identical frames") {
  TmpConfig cfg = validate_config(TmpConfig{});
  cfg.max_offset = 8.0;
  const FeatureMap f = random_features(12, 12, 4, 19);
  const FinetuneResult r = scratch_align(f, f, cfg, RngStream(5), 0);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) CHECK(r.field.at(x, y) == Offset{0.0f, 0.0f});
}

TEST_CASE("scratch alignment is deterministic in the seed and frame index") {
  TmpConfig cfg = validate_config(TmpConfig{});
  cfg.max_offset = 6.0;
  const FeatureMap a = random_features(10, 10, 4, 23);
  const FeatureMap b = random_features(10, 10, 4, 24);
  const FinetuneResult r1 = scratch_align(a, b, cfg, RngStream(5), 2);
  const FinetuneResult r2 = scratch_align(a, b, cfg, RngStream(5), 2);
  CHECK(r1.field.data() == r2.field.data());
  CHECK(r1.dmin.data() == r2.dmin.data());
  const FinetuneResult r3 = scratch_align(a, b, cfg, RngStream(5), 3);
  CHECK(r1.field.data() != r3.field.data());  // frames draw distinct candidates
}
