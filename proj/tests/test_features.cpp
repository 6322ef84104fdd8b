#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tmpalign/features.hpp"
#include "tmpalign/rng.hpp"

using namespace tmpalign;

namespace {

FeatureMap random_frame(int w, int h, std::uint64_t seed) {
  const RngStream rng(seed);
  FeatureMap f(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto [u, v] = rng.uniform2(0, f.index(x, y, 0), RngStream::Path::Scene, 0);
      f.at(x, y, 0) = static_cast<float>(u);
      (void)v;
    }
  return f;
}

}  // namespace

TEST_CASE("motion features on a constant frame") {
  TmpConfig cfg;
  FeatureMap frame(5, 4, 1, 0.37f);
  const FeatureMap fm = extract_motion_features(frame, cfg);
  REQUIRE(fm.channels() == kMotionFeatureChannels);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      CHECK(fm.at(x, y, 0) == 0.37f);
      for (int c : {1, 2, 3, 4, 6, 7}) CHECK(fm.at(x, y, c) == 0.0f);
      CHECK(fm.at(x, y, 5) == Catch::Approx(0.37).margin(1e-7));
    }
}

TEST_CASE("motion features have eight channels at the default config") {
  TmpConfig cfg;
  const FeatureMap fm = extract_motion_features(random_frame(6, 6, 3), cfg);
  CHECK(fm.channels() == 8);
}

TEST_CASE("motion features match the hand-evaluated 3x3 descriptor") {
  // Frame values 0..8 row-major: f(x, y) = 3y + x, patch_radius 1. The eight
  // descriptor formulas evaluated by hand at the center pixel (1, 1):
  //   center 4, +x 1, -x -1, +y 3, -y -3, mean 4, diag 8, anti-diag -4.
  TmpConfig cfg;
  FeatureMap frame(3, 3, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) frame.at(x, y, 0) = static_cast<float>(3 * y + x);
  const FeatureMap fm = extract_motion_features(frame, cfg);
  const float expected[8] = {4.0f, 1.0f, -1.0f, 3.0f, -3.0f, 4.0f, 8.0f, -4.0f};
  for (int c = 0; c < 8; ++c) CHECK(fm.at(1, 1, c) == Catch::Approx(expected[c]).margin(1e-6));
}

TEST_CASE("motion features reject empty or multi-channel frames") {
  TmpConfig cfg;
  CHECK_THROWS_AS(extract_motion_features(FeatureMap{}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(extract_motion_features(FeatureMap(2, 2, 3), cfg), std::invalid_argument);
}

TEST_CASE("motion features are translation-equivariant in the interior") {
  TmpConfig cfg;
  const int w = 16, h = 12, sx = 3, sy = 2;
  const FeatureMap big = random_frame(w + sx, h + sy, 11);
  FeatureMap a(w, h, 1), b(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      a.at(x, y, 0) = big.at(x, y, 0);
      b.at(x, y, 0) = big.at(x + sx, y + sy, 0);  // b is a shifted by (sx, sy)
    }
  const FeatureMap fa = extract_motion_features(a, cfg);
  const FeatureMap fb = extract_motion_features(b, cfg);
  const int r = cfg.patch_radius;
  for (int y = r; y < h - r - sy; ++y)
    for (int x = r; x < w - r - sx; ++x)
      for (int c = 0; c < 8; ++c) CHECK(fb.at(x, y, c) == fa.at(x + sx, y + sy, c));
}

TEST_CASE("texture features are the identity on luma") {
  TmpConfig cfg;
  FeatureMap checker(2, 2, 1);
  checker.at(0, 0, 0) = 0.0f;
  checker.at(1, 0, 0) = 1.0f;
  checker.at(0, 1, 0) = 1.0f;
  checker.at(1, 1, 0) = 0.0f;
  const FeatureMap t = extract_texture_features(checker, cfg);
  REQUIRE(t.channels() == 1);
  CHECK(t.data() == checker.data());

  const FeatureMap c = extract_texture_features(FeatureMap(3, 3, 1, 0.5f), cfg);
  for (float v : c.data()) CHECK(v == 0.5f);

  CHECK_THROWS_AS(extract_texture_features(FeatureMap{}, cfg), std::invalid_argument);
}

TEST_CASE("bilinear sampling reproduces stored values at integer coordinates") {
  const FeatureMap f = random_frame(7, 5, 21);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x)
      CHECK(sample_bilinear(f, x, y)[0] == static_cast<double>(f.at(x, y, 0)));
}

TEST_CASE("bilinear sampling interpolates midpoints and clamps to edges") {
  FeatureMap f(2, 1, 1);
  f.at(0, 0, 0) = 0.0f;
  f.at(1, 0, 0) = 1.0f;
  CHECK(sample_bilinear(f, 0.5, 0.0)[0] == Catch::Approx(0.5));

  FeatureMap g(3, 3, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) g.at(x, y, 0) = static_cast<float>(3 * y + x);
  CHECK(sample_bilinear(g, -5.0, -5.0)[0] == static_cast<double>(g.at(0, 0, 0)));
  CHECK(sample_bilinear(g, 99.0, 99.0)[0] == static_cast<double>(g.at(2, 2, 0)));
  CHECK(sample_bilinear(g, -1.0, 1.0)[0] == static_cast<double>(g.at(0, 1, 0)));
}
