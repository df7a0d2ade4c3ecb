#pragma once

#include "wsseg/tensor.hpp"

namespace wsseg {

// Foreground prior map; values in [0, 1] after fusion.
struct ForegroundMap {
  Grid2 p;
};

// Mean-pool each activation stack over channels, resample both to the target
// size, sum, then rescale the sum to [0, 1]. The two stacks may have different
// spatial dims; each is resampled independently after pooling.
ForegroundMap fuse_foreground(const Grid3& conv4, const Grid3& conv5, int out_h, int out_w);

}  // namespace wsseg
