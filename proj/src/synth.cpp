#include "wsseg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "wsseg/rng.hpp"

namespace wsseg {

namespace {

const double kPalette[8][3] = {
    {210, 60, 55}, {70, 195, 80}, {65, 90, 215},  {225, 200, 60},
    {195, 70, 200}, {60, 200, 200}, {235, 140, 50}, {120, 75, 35},
};

// Truncated separable Gaussian; border taps renormalize over what is in
// bounds, so constant maps stay constant.
Grid2 gaussian_blur(const Grid2& m, double sigma) {
  const int rad = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * rad + 1);
  for (int d = -rad; d <= rad; ++d) k[d + rad] = std::exp(-0.5 * d * d / (sigma * sigma));
  Grid2 tmp(m.h, m.w), out(m.h, m.w);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int d = -rad; d <= rad; ++d) {
        const int xx = x + d;
        if (xx < 0 || xx >= m.w) continue;
        acc += k[d + rad] * m.at(y, xx);
        wsum += k[d + rad];
      }
      tmp.at(y, x) = acc / wsum;
    }
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int d = -rad; d <= rad; ++d) {
        const int yy = y + d;
        if (yy < 0 || yy >= m.h) continue;
        acc += k[d + rad] * tmp.at(yy, x);
        wsum += k[d + rad];
      }
      out.at(y, x) = acc / wsum;
    }
  return out;
}

struct Placed {
  int cls, cy, cx, rr, kind;
  double aspect;
};

bool inside_shape(const Placed& p, int y, int x, double scale) {
  const double dy = y - p.cy, dx = x - p.cx;
  const double r = p.rr * scale;
  switch (p.kind) {
    case 0:  // rectangle
      return std::abs(dy) <= r * p.aspect && std::abs(dx) <= r;
    case 1:  // disk
      return dy * dy + dx * dx <= r * r;
    case 2:  // diamond
      return std::abs(dy) + std::abs(dx) <= r;
    default:  // cross
      return (std::abs(dy) <= r * 0.4 && std::abs(dx) <= r) ||
             (std::abs(dx) <= r * 0.4 && std::abs(dy) <= r);
  }
}

// Blurred indicator resampled to the stack resolution, one channel per gain.
Grid3 emulated_stack(const Grid2& indicator, double sigma, int sh, int sw, int channels, Rng& rng,
                     double noise_sigma) {
  const Grid2 blurred = resize_bilinear(gaussian_blur(indicator, sigma), sh, sw);
  Grid3 out(channels, sh, sw);
  for (int c = 0; c < channels; ++c) {
    const double gain = rng.uniform(0.7, 1.3);
    double* p = out.plane(c);
    for (int i = 0; i < blurred.size(); ++i)
      p[i] = gain * blurred.v[i] + rng.normal(0.0, noise_sigma);
  }
  return out;
}

}  // namespace

SynthScene synth_scene(uint64_t seed, const SynthConfig& cfg) {
  if (cfg.h < 16 || cfg.w < 16) throw DimensionError("synth_scene: dims must be >= 16");
  if (cfg.classes < 1) throw DimensionError("synth_scene: need at least one class");
  if (cfg.max_objects < 1 || cfg.max_objects > cfg.classes)
    throw DimensionError("synth_scene: max_objects must be in [1, classes]");

  Rng rng(seed);
  const int h = cfg.h, w = cfg.w, C = cfg.classes;

  const int n_obj = 1 + rng.uniform_int(cfg.max_objects);
  std::vector<int> order(C);
  for (int i = 0; i < C; ++i) order[i] = i + 1;
  for (int i = 0; i < n_obj; ++i)
    std::swap(order[i], order[i + rng.uniform_int(C - i)]);

  const int rmin = std::max(3, std::min(h, w) / 10);
  const int rmax = std::max(rmin, std::min(h, w) / 5);
  std::vector<Placed> placed;
  for (int i = 0; i < n_obj; ++i) {
    const int cls = order[i];
    for (int attempt = 0; attempt < 64; ++attempt) {
      Placed p;
      p.cls = cls;
      p.rr = rmin + rng.uniform_int(rmax - rmin + 1);
      p.kind = (cls - 1) % 4;
      p.aspect = rng.uniform(0.55, 1.0);
      const int lo_y = p.rr + 1, hi_y = h - p.rr - 2;
      const int lo_x = p.rr + 1, hi_x = w - p.rr - 2;
      if (hi_y < lo_y || hi_x < lo_x) continue;
      p.cy = lo_y + rng.uniform_int(hi_y - lo_y + 1);
      p.cx = lo_x + rng.uniform_int(hi_x - lo_x + 1);
      bool clash = false;
      for (const Placed& q : placed)
        if (std::abs(p.cy - q.cy) <= p.rr + q.rr + 2 && std::abs(p.cx - q.cx) <= p.rr + q.rr + 2) {
          clash = true;
          break;
        }
      if (!clash) {
        placed.push_back(p);
        break;
      }
    }
  }

  SynthScene scene;
  scene.gt = LabelMap(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const Placed& p : placed)
        if (inside_shape(p, y, x, 1.0)) {
          scene.gt.at(y, x) = p.cls;
          break;
        }

  // Textured background: per-scene base gray, gentle ramp, per-channel noise.
  scene.image = Grid3(3, h, w);
  const double base = rng.uniform(70.0, 120.0);
  const double ramp = rng.uniform(-18.0, 18.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int cls = scene.gt.at(y, x);
      for (int c = 0; c < 3; ++c) {
        double val;
        if (cls == 0)
          val = base + ramp * (double(x) / (w - 1)) + rng.normal(0.0, 9.0);
        else
          val = kPalette[(cls - 1) % 8][c] + rng.normal(0.0, 7.0);
        scene.image.at(c, y, x) = std::clamp(val, 0.0, 255.0);
      }
    }

  Grid2 fg(h, w);
  for (int i = 0; i < fg.size(); ++i) fg.v[i] = scene.gt.label[i] != 0 ? 1.0 : 0.0;

  const int h2 = std::max(4, h / 2), w2 = std::max(4, w / 2);
  const int h4 = std::max(4, h / 4), w4 = std::max(4, w / 4);
  scene.conv4 = emulated_stack(fg, 2.0, h2, w2, 4, rng, 0.08);
  scene.conv5 = emulated_stack(fg, 4.0, h4, w4, 4, rng, 0.08);

  // One unit per class, firing on the core (half-size) sub-region of its
  // shape: classifier units key on discriminative parts, not whole objects.
  scene.cam_features = Grid3(C, h2, w2);
  for (int k = 1; k <= C; ++k) {
    Grid2 core(h, w);
    for (const Placed& p : placed)
      if (p.cls == k)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            if (inside_shape(p, y, x, 0.55)) core.at(y, x) = 1.0;
    const Grid2 resized = resize_bilinear(gaussian_blur(core, 2.0), h2, w2);
    double* plane = scene.cam_features.plane(k - 1);
    for (int i = 0; i < resized.size(); ++i)
      plane[i] = resized.v[i] + rng.normal(0.0, 0.04);
  }

  scene.cam_weights = CamWeights(C, C);
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < C; ++k)
      scene.cam_weights.at(c, k) = (c == k ? 1.0 : 0.0) + rng.normal(0.0, 0.03);

  std::vector<int> present;
  std::vector<uint8_t> seen(C + 1, 0);
  for (int lab : scene.gt.label)
    if (lab > 0 && !seen[lab]) {
      seen[lab] = 1;
      present.push_back(lab);
    }
  std::sort(present.begin(), present.end());
  scene.tags = TagSet::from_present(C, present);
  return scene;
}

RegionPartition make_regions(const LabelMap& gt, int cell) {
  if (cell < 1) throw DimensionError("make_regions: cell size must be positive");
  const int cells_x = (gt.w + cell - 1) / cell;
  std::vector<int> raw(gt.size());
  int max_label = 0;
  for (int lab : gt.label) max_label = std::max(max_label, lab);
  for (int y = 0; y < gt.h; ++y)
    for (int x = 0; x < gt.w; ++x) {
      const int c = (y / cell) * cells_x + (x / cell);
      raw[static_cast<size_t>(y) * gt.w + x] = c * (max_label + 1) + gt.at(y, x);
    }
  return RegionPartition::from_ids(gt.h, gt.w, raw);
}

Grid3 build_features(const SynthScene& scene) {
  const int h = scene.image.h, w = scene.image.w;
  const int K = scene.cam_features.c;
  Grid3 f(3 + 2 + K, h, w);
  for (int c = 0; c < 3; ++c) {
    const double* src = scene.image.plane(c);
    double* dst = f.plane(c);
    for (int i = 0; i < h * w; ++i) dst[i] = src[i] / 255.0;
  }
  const Grid2 p4 = resize_bilinear(channel_mean_pool(scene.conv4), h, w);
  const Grid2 p5 = resize_bilinear(channel_mean_pool(scene.conv5), h, w);
  std::copy(p4.v.begin(), p4.v.end(), f.plane(3));
  std::copy(p5.v.begin(), p5.v.end(), f.plane(4));
  for (int k = 0; k < K; ++k) {
    const Grid2 cm = resize_bilinear(scene.cam_features.channel(k), h, w);
    std::copy(cm.v.begin(), cm.v.end(), f.plane(5 + k));
  }
  return f;
}

}  // namespace wsseg
