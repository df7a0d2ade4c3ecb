#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wsseg/cam.hpp"

using wsseg::CamStack;
using wsseg::CamWeights;
using wsseg::ForegroundMap;
using wsseg::Grid2;
using wsseg::Grid3;
using wsseg::ProbMaps;

namespace {

Grid3 random_features(oracle::Stream& rng, int k, int h, int w) {
  Grid3 f(k, h, w);
  for (double& x : f.v) x = rng.range(-2.0, 2.0);
  return f;
}

}  // namespace

TEST_CASE("one-hot weights select exactly one rescaled unit map") {
  oracle::Stream rng(301);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + rng.below(4), h = 2 + rng.below(5), w = 2 + rng.below(5);
    const Grid3 f = random_features(rng, k, h, w);
    const int pick = rng.below(k);
    CamWeights wts(1, k, 0.0);
    wts.at(0, pick) = 1.0;
    const CamStack cams = wsseg::compute_cam(f, wts);
    const Grid2 expect = wsseg::minmax_normalize(f.channel(pick));
    for (int i = 0; i < expect.size(); ++i) CHECK(cams.maps.v[i] == expect.v[i]);
  }
}

TEST_CASE("a zero weight row yields an all-zero map") {
  Grid3 f(3, 4, 4);
  oracle::Stream rng(302);
  for (double& x : f.v) x = rng.range(-1.0, 1.0);
  CamWeights wts(2, 3, 0.0);
  wts.at(1, 0) = 0.7;  // row 0 stays all zero
  const CamStack cams = wsseg::compute_cam(f, wts);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(cams.maps.at(0, y, x) == 0.0);
}

TEST_CASE("two-unit weighted sum matches the hand computation") {
  Grid3 f(2, 2, 2);
  f.at(0, 0, 0) = 1.0;
  f.at(0, 0, 1) = 2.0;
  f.at(0, 1, 0) = 3.0;
  f.at(0, 1, 1) = 4.0;
  f.at(1, 0, 0) = 0.0;
  f.at(1, 0, 1) = 1.0;
  f.at(1, 1, 0) = 1.0;
  f.at(1, 1, 1) = 0.0;
  CamWeights wts(1, 2);
  wts.at(0, 0) = 1.0;
  wts.at(0, 1) = -1.0;
  // Weighted sum: [[1,1],[2,4]]; min 1, max 4.
  const CamStack cams = wsseg::compute_cam(f, wts);
  CHECK(cams.maps.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(cams.maps.at(0, 0, 1) == doctest::Approx(0.0));
  CHECK(cams.maps.at(0, 1, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(cams.maps.at(0, 1, 1) == doctest::Approx(1.0));

  const CamStack raw = wsseg::compute_cam(f, wts, false);
  CHECK(raw.maps.at(0, 1, 1) == doctest::Approx(4.0));
}

TEST_CASE("compute_cam rejects a unit-count mismatch") {
  Grid3 f(3, 2, 2, 0.5);
  CamWeights wts(2, 4, 0.1);
  CHECK_THROWS_AS(wsseg::compute_cam(f, wts), wsseg::DimensionError);
}

TEST_CASE("binarization hand case, degenerate cases, and scale invariance") {
  Grid2 m(1, 3);
  m.at(0, 0) = 1.0;
  m.at(0, 1) = 0.3;
  m.at(0, 2) = 0.1;
  const Grid2 b = wsseg::binarize_cam(m, 0.2);
  CHECK(b.at(0, 0) == 1.0);
  CHECK(b.at(0, 1) == 1.0);
  CHECK(b.at(0, 2) == 0.0);

  const Grid2 zeros = wsseg::binarize_cam(Grid2(2, 2, 0.0), 0.2);
  for (double v : zeros.v) CHECK(v == 0.0);
  const Grid2 ones = wsseg::binarize_cam(Grid2(2, 2, 0.4), 0.2);
  for (double v : ones.v) CHECK(v == 1.0);

  oracle::Stream rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    Grid2 r(3, 3);
    for (double& x : r.v) x = rng.range(0.0, 1.0);
    const Grid2 base = wsseg::binarize_cam(r, 0.2);
    const double s = rng.range(0.1, 50.0);
    for (double& x : r.v) x *= s;
    const Grid2 scaled = wsseg::binarize_cam(r, 0.2);
    for (int i = 0; i < base.size(); ++i) CHECK(scaled.v[i] == base.v[i]);
  }

  CHECK_THROWS_AS(wsseg::binarize_cam(m, 0.0), wsseg::DimensionError);
  CHECK_THROWS_AS(wsseg::binarize_cam(m, 1.0), wsseg::DimensionError);
}

TEST_CASE("combination collapses as stated at the alpha extremes") {
  oracle::Stream rng(304);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + rng.below(4), w = 2 + rng.below(4);
    ForegroundMap pf;
    pf.p = Grid2(h, w);
    for (double& x : pf.p.v) x = rng.range(0.05, 0.95);

    // alpha=1 with a single class whose map is constant positive: B=1
    // everywhere, so channels reduce to (1-pf, pf).
    CamStack one;
    one.maps = Grid3(1, h, w, 0.6);
    const ProbMaps a1 = wsseg::combine_multiclass(pf, one, 1.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        CHECK(a1.p.at(0, y, x) == doctest::Approx(1.0 - pf.p.at(y, x)).epsilon(1e-9));
        CHECK(a1.p.at(1, y, x) == doctest::Approx(pf.p.at(y, x)).epsilon(1e-9));
      }

    // alpha=0: channels proportional to (M_0, M_1, ..., M_C) pixelwise.
    const int C = 1 + rng.below(3);
    CamStack cams;
    cams.maps = Grid3(C, h, w);
    for (double& x : cams.maps.v) x = rng.range(0.0, 1.0);
    const ProbMaps a0 = wsseg::combine_multiclass(pf, cams, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double msum = 0.0;
        for (int c = 0; c < C; ++c) msum += cams.maps.at(c, y, x);
        double m0 = 1.0 - msum / C;
        m0 = std::min(1.0, std::max(0.0, m0));
        std::vector<double> expect{m0};
        for (int c = 0; c < C; ++c) expect.push_back(cams.maps.at(c, y, x));
        double total = 0.0;
        for (double& e : expect) {
          e = std::max(e, 1e-12);
          total += e;
        }
        for (int c = 0; c <= C; ++c)
          CHECK(a0.p.at(c, y, x) == doctest::Approx(expect[c] / total).epsilon(1e-9));
      }
  }
}

TEST_CASE("combination matches the straight-line oracle") {
  oracle::Stream rng(305);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + rng.below(4), w = 2 + rng.below(4);
    const int C = 1 + rng.below(4);
    ForegroundMap pf;
    pf.p = Grid2(h, w);
    for (double& x : pf.p.v) x = rng.range(0.0, 1.0);
    CamStack cams;
    cams.maps = Grid3(C, h, w);
    for (double& x : cams.maps.v) x = rng.range(0.0, 1.0);
    const double alpha = rng.unit();
    const double rho = rng.range(0.05, 0.9);

    std::vector<Grid2> planes;
    for (int c = 0; c < C; ++c) planes.push_back(cams.maps.channel(c));
    const ProbMaps got = wsseg::combine_multiclass(pf, cams, alpha, rho);
    const ProbMaps want = oracle::combine(pf.p, planes, alpha, rho);
    REQUIRE(got.p.c == want.p.c);
    for (size_t i = 0; i < got.p.v.size(); ++i)
      CHECK(got.p.v[i] == doctest::Approx(want.p.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("combined maps always form a per-pixel simplex") {
  oracle::Stream rng(306);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + rng.below(5), w = 2 + rng.below(5), C = 1 + rng.below(4);
    ForegroundMap pf;
    pf.p = Grid2(h, w);
    for (double& x : pf.p.v) x = rng.range(0.0, 1.0);
    CamStack cams;
    cams.maps = Grid3(C, h, w);
    for (double& x : cams.maps.v) x = rng.range(0.0, 1.0);
    const ProbMaps pm = wsseg::combine_multiclass(pf, cams, rng.unit());
    const int n = h * w;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c <= C; ++c) {
        const double v = pm.p.v[static_cast<size_t>(c) * n + i];
        CHECK(v > 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("raising the prior never lowers an unmasked foreground entry") {
  oracle::Stream rng(307);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + rng.below(3), w = 2 + rng.below(3), C = 1 + rng.below(3);
    ForegroundMap pf;
    pf.p = Grid2(h, w);
    for (double& x : pf.p.v) x = rng.range(0.0, 0.8);
    CamStack cams;
    cams.maps = Grid3(C, h, w);
    for (double& x : cams.maps.v) x = rng.range(0.1, 1.0);
    const double alpha = rng.range(0.1, 1.0);
    const Grid3 before = wsseg::combine_raw(pf, cams, alpha);

    const int py = rng.below(h), px = rng.below(w);
    ForegroundMap bumped = pf;
    bumped.p.at(py, px) = std::min(1.0, pf.p.at(py, px) + rng.range(0.0, 0.2));
    const Grid3 after = wsseg::combine_raw(bumped, cams, alpha);
    for (int c = 1; c <= C; ++c) {
      const Grid2 b = wsseg::binarize_cam(cams.maps.channel(c - 1));
      if (b.at(py, px) == 1.0) CHECK(after.at(c, py, px) >= before.at(c, py, px));
    }
  }
}

TEST_CASE("the two-channel prior adapter emits complements that sum to one") {
  ForegroundMap pf;
  pf.p = Grid2(1, 3);
  pf.p.at(0, 0) = 0.7;
  pf.p.at(0, 1) = 0.0;
  pf.p.at(0, 2) = 1.0;
  const ProbMaps pm = wsseg::fgbg_to_probmaps(pf);
  CHECK(pm.p.at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(pm.p.at(1, 0, 0) == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(pm.p.at(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pm.p.at(1, 0, 1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pm.p.at(0, 0, 2) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pm.p.at(1, 0, 2) == doctest::Approx(1.0).epsilon(1e-9));

  oracle::Stream rng(308);
  ForegroundMap r;
  r.p = Grid2(5, 5);
  for (double& x : r.p.v) x = rng.unit();
  const ProbMaps pr = wsseg::fgbg_to_probmaps(r);
  for (int i = 0; i < 25; ++i)
    CHECK(pr.p.v[i] + pr.p.v[25 + i] == doctest::Approx(1.0).epsilon(1e-12));
}
