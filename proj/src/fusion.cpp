#include "wsseg/fusion.hpp"

namespace wsseg {

ForegroundMap fuse_foreground(const Grid3& conv4, const Grid3& conv5, int out_h, int out_w) {
  if (conv4.c <= 0 || conv5.c <= 0)
    throw DimensionError("fuse_foreground: activation stacks must be non-empty");
  if (out_h < 1 || out_w < 1)
    throw DimensionError("fuse_foreground: target dims must be >= 1");
  Grid2 a = resize_bilinear(channel_mean_pool(conv4), out_h, out_w);
  Grid2 b = resize_bilinear(channel_mean_pool(conv5), out_h, out_w);
  for (int i = 0; i < a.size(); ++i) a.v[i] += b.v[i];
  return ForegroundMap{minmax_normalize(a)};
}

}  // namespace wsseg
