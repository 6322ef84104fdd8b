#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "tmpalign/evalio.hpp"
#include "tmpalign/rng.hpp"

using namespace tmpalign;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::path("evalio_test_out");
  fs::create_directories(dir);
  return dir / name;
}

MotionField random_field(int w, int h, std::uint64_t seed) {
  const RngStream rng(seed);
  MotionField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto [u, v] = rng.uniform2(0, f.index(x, y), RngStream::Path::Scene, 0);
      f.at(x, y) = Offset{static_cast<float>(40.0 * u - 20.0), static_cast<float>(40.0 * v - 20.0)};
    }
  return f;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("epe of a field against itself is zero") {
  const MotionField f = random_field(6, 4, 1);
  const EpeStats s = epe(f, f);
  CHECK(s.mean == 0.0);
  CHECK(s.median == 0.0);
  CHECK(s.frac_le_1px == 1.0);
  CHECK(s.count == 24);
}

TEST_CASE("epe of a constant bias is the bias magnitude") {
  const MotionField gt = random_field(5, 5, 2);
  MotionField est = gt;
  for (Offset& o : est.data()) o.dx += 1.0f;
  const EpeStats s = epe(est, gt);
  CHECK(s.mean == Catch::Approx(1.0).margin(1e-12));
  CHECK(s.median == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("epe matches hand arithmetic on a 2x2 case") {
  // Per-pixel errors {0, 0, 3, 4}: mean 1.75, median 1.5, half within 1px.
  MotionField gt(2, 2);
  MotionField est(2, 2);
  est.at(0, 1) = Offset{3.0f, 0.0f};
  est.at(1, 1) = Offset{0.0f, 4.0f};
  const EpeStats s = epe(est, gt);
  CHECK(s.mean == Catch::Approx(1.75).margin(1e-12));
  CHECK(s.median == Catch::Approx(1.5).margin(1e-12));
  CHECK(s.frac_le_1px == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("epe honors the validity mask and rejects an empty one") {
  MotionField gt(2, 2);
  MotionField est(2, 2);
  est.at(0, 0) = Offset{5.0f, 0.0f};
  ValidityMask mask(2, 2, 1);
  mask.at(0, 0) = 0;
  CHECK(epe(est, gt, &mask).mean == 0.0);
  ValidityMask none(2, 2, 0);
  CHECK_THROWS_AS(epe(est, gt, &none), std::invalid_argument);
  CHECK_THROWS_AS(epe(est, MotionField(3, 2)), std::invalid_argument);
}

TEST_CASE("warping psnr reports the infinity sentinel on identical inputs") {
  const FeatureMap f(4, 4, 1, 0.5f);
  CHECK(std::isinf(warping_psnr(f, f)));
}

TEST_CASE("warping psnr is 20 dB at MSE 0.01") {
  const FeatureMap cur(4, 4, 1, 0.5f);
  const FeatureMap warped(4, 4, 1, 0.6f);
  CHECK(warping_psnr(cur, warped) == Catch::Approx(20.0).margin(1e-9));
}

TEST_CASE("warping psnr strictly decreases when noise is added") {
  FeatureMap cur(8, 8, 1);
  const RngStream rng(3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      cur.at(x, y, 0) =
          static_cast<float>(rng.uniform2(0, cur.index(x, y, 0), RngStream::Path::Scene, 0).first);
  FeatureMap near = cur;
  FeatureMap far = cur;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const auto [n1, n2] =
          rng.uniform2(1, cur.index(x, y, 0), RngStream::Path::Scene, 1);
      near.at(x, y, 0) += static_cast<float>(0.01 * (n1 - 0.5));
      far.at(x, y, 0) += static_cast<float>(0.2 * (n2 - 0.5));
    }
  CHECK(warping_psnr(cur, near) > warping_psnr(cur, far));
}

TEST_CASE("stratified psnr degenerates when every pixel is confident") {
  const FeatureMap cur(4, 4, 1, 0.2f);
  const FeatureMap warped(4, 4, 1, 0.3f);
  const ConfidenceMap conf(4, 4, 1.0);
  const StratifiedPsnr s = confidence_stratified_psnr(cur, warped, conf, 0.9);
  CHECK(s.psnr_high == s.psnr_all);
  ConfidenceMap low(4, 4, 0.1);
  CHECK_THROWS_AS(confidence_stratified_psnr(cur, warped, low, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(confidence_stratified_psnr(cur, warped, conf, 1.5), std::invalid_argument);
}

TEST_CASE("flo files round-trip bit-exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int w = 1 + static_cast<int>(seed % 7);
    const int h = 1 + static_cast<int>((seed / 7) % 5);
    const MotionField f = random_field(w, h, seed + 100);
    const fs::path path = temp_file("roundtrip.flo");
    write_flo(f, path.string());
    const MotionField g = read_flo(path.string());
    REQUIRE(g.width() == f.width());
    REQUIRE(g.height() == f.height());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(f.data()[i] == g.data()[i]);
  }
}

TEST_CASE("the 1x1 golden flo file matches byte for byte") {
  MotionField f(1, 1);
  f.at(0, 0) = Offset{0.5f, -0.25f};
  const fs::path path = temp_file("golden.flo");
  write_flo(f, path.string());
  const auto bytes = read_bytes(path);
  const std::array<std::uint8_t, 20> expected{0x50, 0x49, 0x45, 0x48, 0x01, 0x00, 0x00,
                                              0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00,
                                              0x00, 0x3F, 0x00, 0x00, 0x80, 0xBE};
  REQUIRE(bytes.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(bytes[i] == expected[i]);
}

TEST_CASE("flo reader rejects bad magic and truncation") {
  const fs::path bad = temp_file("bad.flo");
  {
    std::ofstream out(bad, std::ios::binary);
    const float wrong = 123.0f;
    const std::int32_t one = 1;
    out.write(reinterpret_cast<const char*>(&wrong), 4);
    out.write(reinterpret_cast<const char*>(&one), 4);
    out.write(reinterpret_cast<const char*>(&one), 4);
  }
  CHECK_THROWS_WITH(read_flo(bad.string()), Catch::Matchers::ContainsSubstring("not a flow file"));

  const fs::path trunc = temp_file("trunc.flo");
  {
    MotionField f(4, 4);
    write_flo(f, trunc.string());
    fs::resize_file(trunc, 20);  // header plus a partial payload
  }
  CHECK_THROWS_WITH(read_flo(trunc.string()),
                    Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("flo writer rejects non-finite fields") {
  MotionField f(2, 2);
  f.at(1, 1).dy = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(write_flo(f, temp_file("nonfinite.flo").string()), std::invalid_argument);
}

TEST_CASE("flow visualization renders the zero field as uniform white") {
  const MotionField f(5, 4);
  const fs::path path = temp_file("zero_flow.png");
  write_flow_png(f, path.string());
  const FeatureMap img = read_png_gray(path.string());
  for (float v : img.data()) CHECK(v == 1.0f);  // white under any luma weighting
}

TEST_CASE("flow visualization renders a constant field as a single hue") {
  const MotionField f(6, 3, Offset{4.0f, 0.0f});
  const fs::path path = temp_file("const_flow.png");
  write_flow_png(f, path.string());
  const FeatureMap img = read_png_gray(path.string());
  const float first = img.at(0, 0, 0);
  CHECK(first < 1.0f);  // saturated, not white
  for (float v : img.data()) CHECK(v == first);
}

TEST_CASE("confidence visualization maps 1 to white") {
  const ConfidenceMap conf(3, 3, 1.0);
  const fs::path path = temp_file("conf.png");
  write_confidence_png(conf, path.string());
  const FeatureMap img = read_png_gray(path.string());
  for (float v : img.data()) CHECK(v == 1.0f);
}

TEST_CASE("gray png round-trips 8-bit quantized values") {
  FeatureMap img(9, 5, 1);
  const RngStream rng(8);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 9; ++x) {
      const double u = rng.uniform2(0, img.index(x, y, 0), RngStream::Path::Scene, 0).first;
      img.at(x, y, 0) = static_cast<float>(std::round(u * 255.0) / 255.0);
    }
  const fs::path path = temp_file("gray.png");
  write_png_gray(path.string(), img);
  const FeatureMap back = read_png_gray(path.string());
  REQUIRE(back.width() == 9);
  REQUIRE(back.height() == 5);
  for (std::size_t i = 0; i < img.data().size(); ++i)
    CHECK(back.data()[i] == Catch::Approx(img.data()[i]).margin(1e-7));
}

TEST_CASE("csv report carries the spec header and aggregate row") {
  std::vector<FrameReport> rows(1);
  rows[0].frame = "1";
  rows[0].mean_epe = 0.25;
  rows[0].ms_per_frame = 3.5;
  FrameReport agg;
  agg.frame = "all";
  agg.mean_epe = 0.25;
  rows.push_back(agg);
  std::ostringstream out;
  write_csv(out, rows, false);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "frame,mean_epe,median_epe,pct_le_1px,warp_psnr,mean_conf,ms_per_frame");
  std::string row1, row2;
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(row1 == "1,0.25,,,,,3.5");
  CHECK(row2.rfind("all,0.25", 0) == 0);
}
