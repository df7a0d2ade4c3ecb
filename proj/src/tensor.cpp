#include "wsseg/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace wsseg {

Grid2 channel_mean_pool(const Grid3& t) {
  if (t.c <= 0 || t.h <= 0 || t.w <= 0) throw DimensionError("channel_mean_pool: empty stack");
  Grid2 out(t.h, t.w);
  const int n = t.plane_size();
  for (int ch = 0; ch < t.c; ++ch) {
    const double* p = t.plane(ch);
    for (int i = 0; i < n; ++i) out.v[i] += p[i];
  }
  const double inv = 1.0 / t.c;
  for (int i = 0; i < n; ++i) out.v[i] *= inv;
  return out;
}

Grid2 minmax_normalize(const Grid2& m) {
  if (m.h <= 0 || m.w <= 0) throw DimensionError("minmax_normalize: empty grid");
  auto [mn_it, mx_it] = std::minmax_element(m.v.begin(), m.v.end());
  const double mn = *mn_it, mx = *mx_it;
  Grid2 out(m.h, m.w);
  if (mx == mn) return out;  // constant map: all zeros
  const double d = mx - mn;
  for (int i = 0; i < m.size(); ++i) out.v[i] = (m.v[i] - mn) / d;
  return out;
}

Grid2 resize_bilinear(const Grid2& m, int out_h, int out_w) {
  if (m.h <= 0 || m.w <= 0) throw DimensionError("resize_bilinear: empty grid");
  if (out_h < 1 || out_w < 1) throw DimensionError("resize_bilinear: target dims must be >= 1");
  Grid2 out(out_h, out_w);
  const double sy = out_h > 1 ? double(m.h - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? double(m.w - 1) / (out_w - 1) : 0.0;
  for (int y = 0; y < out_h; ++y) {
    const double fy = out_h > 1 ? y * sy : (m.h - 1) / 2.0;
    int y0 = static_cast<int>(std::floor(fy));
    y0 = std::clamp(y0, 0, m.h - 1);
    const int y1 = std::min(y0 + 1, m.h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = out_w > 1 ? x * sx : (m.w - 1) / 2.0;
      int x0 = static_cast<int>(std::floor(fx));
      x0 = std::clamp(x0, 0, m.w - 1);
      const int x1 = std::min(x0 + 1, m.w - 1);
      const double tx = fx - x0;
      // Skip interpolation on exact hits so same-size resizes are bit-exact.
      double top = m.at(y0, x0);
      if (tx > 0.0) top = (1.0 - tx) * top + tx * m.at(y0, x1);
      double val = top;
      if (ty > 0.0) {
        double bot = m.at(y1, x0);
        if (tx > 0.0) bot = (1.0 - tx) * bot + tx * m.at(y1, x1);
        val = (1.0 - ty) * top + ty * bot;
      }
      out.at(y, x) = val;
    }
  }
  return out;
}

}  // namespace wsseg
