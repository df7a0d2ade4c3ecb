#pragma once

#include <cstddef>
#include <vector>

#include "wsseg/errors.hpp"

namespace wsseg {

// Dense row-major rank-2 grid of doubles.
struct Grid2 {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Grid2() = default;
  Grid2(int h_, int w_, double fill = 0.0) : h(h_), w(w_) {
    if (h_ <= 0 || w_ <= 0) throw DimensionError("Grid2: dims must be positive");
    v.assign(static_cast<size_t>(h_) * w_, fill);
  }

  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  int size() const { return h * w; }
};

// Dense row-major rank-3 grid, channel-major: index (c, y, x).
struct Grid3 {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Grid3() = default;
  Grid3(int c_, int h_, int w_, double fill = 0.0) : c(c_), h(h_), w(w_) {
    if (c_ <= 0 || h_ <= 0 || w_ <= 0) throw DimensionError("Grid3: dims must be positive");
    v.assign(static_cast<size_t>(c_) * h_ * w_, fill);
  }

  double& at(int ch, int y, int x) {
    return v[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  double at(int ch, int y, int x) const {
    return v[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  double* plane(int ch) { return v.data() + static_cast<size_t>(ch) * h * w; }
  const double* plane(int ch) const { return v.data() + static_cast<size_t>(ch) * h * w; }
  int plane_size() const { return h * w; }

  Grid2 channel(int ch) const {
    Grid2 out(h, w);
    const double* src = plane(ch);
    std::copy(src, src + plane_size(), out.v.begin());
    return out;
  }
};

// Mean over the channel axis; output is h x w.
Grid2 channel_mean_pool(const Grid3& t);

// Affine rescale to [0, 1]; a constant input maps to all zeros.
Grid2 minmax_normalize(const Grid2& m);

// Corner-aligned bilinear resampling. Output dims must be >= 1; a singleton
// output extent samples the source center along that axis. Resizing to the
// source dims reproduces the input bit for bit.
Grid2 resize_bilinear(const Grid2& m, int out_h, int out_w);

}  // namespace wsseg
