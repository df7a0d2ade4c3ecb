#include "wsseg/cam.hpp"

#include <algorithm>
#include <cmath>

namespace wsseg {

CamStack compute_cam(const Grid3& features, const CamWeights& w, bool rescale) {
  if (w.units != features.c)
    throw DimensionError("compute_cam: weight columns must match feature channels");
  Grid3 maps(w.classes, features.h, features.w);
  const int n = features.plane_size();
  for (int c = 0; c < w.classes; ++c) {
    double* out = maps.plane(c);
    for (int k = 0; k < w.units; ++k) {
      const double wk = w.at(c, k);
      const double* f = features.plane(k);
      for (int i = 0; i < n; ++i) out[i] += wk * f[i];
    }
  }
  if (rescale) {
    for (int c = 0; c < w.classes; ++c) {
      Grid2 norm = minmax_normalize(maps.channel(c));
      std::copy(norm.v.begin(), norm.v.end(), maps.plane(c));
    }
  }
  return CamStack{std::move(maps)};
}

Grid2 binarize_cam(const Grid2& m, double rho) {
  if (rho <= 0.0 || rho >= 1.0) throw DimensionError("binarize_cam: rho must be in (0, 1)");
  Grid2 out(m.h, m.w);
  const double mx = *std::max_element(m.v.begin(), m.v.end());
  if (mx <= 0.0) return out;
  const double thresh = rho * mx;
  for (int i = 0; i < m.size(); ++i) out.v[i] = m.v[i] > thresh ? 1.0 : 0.0;
  return out;
}

Grid3 combine_raw(const ForegroundMap& pf, const CamStack& cams, double alpha, double rho) {
  const Grid2& p = pf.p;
  if (cams.maps.h != p.h || cams.maps.w != p.w)
    throw DimensionError("combine_raw: map dims disagree");
  if (alpha < 0.0 || alpha > 1.0) throw DimensionError("combine_raw: alpha must be in [0, 1]");
  const int C = cams.class_count();
  const int n = p.size();
  Grid3 raw(C + 1, p.h, p.w);

  // Background activation: complement of the mean foreground map, clamped.
  {
    double* bg = raw.plane(0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += cams.maps.v[static_cast<size_t>(c) * n + i];
      const double m0 = std::clamp(1.0 - s / C, 0.0, 1.0);
      bg[i] = alpha * (1.0 - p.v[i]) + (1.0 - alpha) * m0;
    }
  }
  for (int c = 0; c < C; ++c) {
    Grid2 b = binarize_cam(cams.maps.channel(c), rho);
    const double* m = cams.maps.plane(c);
    double* out = raw.plane(c + 1);
    for (int i = 0; i < n; ++i)
      out[i] = alpha * (p.v[i] * b.v[i]) + (1.0 - alpha) * m[i];
  }
  for (double& x : raw.v) x = std::max(x, kProbFloor);
  return raw;
}

static ProbMaps normalize_per_pixel(Grid3 raw) {
  const int n = raw.plane_size();
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < raw.c; ++c) s += raw.v[static_cast<size_t>(c) * n + i];
    for (int c = 0; c < raw.c; ++c) raw.v[static_cast<size_t>(c) * n + i] /= s;
  }
  return ProbMaps{std::move(raw)};
}

ProbMaps combine_multiclass(const ForegroundMap& pf, const CamStack& cams, double alpha,
                            double rho) {
  return normalize_per_pixel(combine_raw(pf, cams, alpha, rho));
}

ProbMaps fgbg_to_probmaps(const ForegroundMap& pf) {
  Grid3 raw(2, pf.p.h, pf.p.w);
  const int n = pf.p.size();
  for (int i = 0; i < n; ++i) {
    raw.v[i] = std::max(1.0 - pf.p.v[i], kProbFloor);
    raw.v[n + i] = std::max(pf.p.v[i], kProbFloor);
  }
  return normalize_per_pixel(std::move(raw));
}

}  // namespace wsseg
