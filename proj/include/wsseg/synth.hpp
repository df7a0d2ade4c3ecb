#pragma once

#include <cstdint>

#include "wsseg/cam.hpp"
#include "wsseg/crf.hpp"
#include "wsseg/loss.hpp"

namespace wsseg {

struct SynthConfig {
  int h = 48;
  int w = 48;
  int classes = 4;      // foreground classes; labels 0..classes
  int max_objects = 3;  // at most one object per class, so <= classes
};

// A generated desk scene: colored geometric shapes on a textured background,
// with stand-ins for mid/late conv activations and classifier-unit maps.
//   image       3 x h x w, values in [0, 255]
//   gt          per-pixel labels, 0 = background
//   tags        labels that actually appear
//   conv4/conv5 blurred foreground evidence at half / quarter resolution
//   cam_features one unit per class, peaking on that class's core sub-region
//   cam_weights  near-identity class-by-unit matrix
struct SynthScene {
  Grid3 image;
  LabelMap gt;
  TagSet tags;
  Grid3 conv4;
  Grid3 conv5;
  Grid3 cam_features;
  CamWeights cam_weights;
};

SynthScene synth_scene(uint64_t seed, const SynthConfig& cfg = {});

// Over-segmentation for higher-order terms: ground-truth segments cut by a
// coarse grid, standing in for an external boundary-preserving partition.
RegionPartition make_regions(const LabelMap& gt, int cell = 12);

// Per-pixel head features: image channels scaled to [0, 1], the two pooled
// activation stacks resampled to full resolution, and the class-unit maps.
Grid3 build_features(const SynthScene& scene);

}  // namespace wsseg
