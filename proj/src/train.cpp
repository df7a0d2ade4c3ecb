#include "wsseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "wsseg/rng.hpp"

namespace wsseg {

Grid3 predict(const HeadParams& p, const Grid3& features) {
  if (features.c != p.feats) throw DimensionError("predict: feature channels mismatch");
  Grid3 s(p.labels, features.h, features.w);
  const int n = features.plane_size();
  for (int l = 0; l < p.labels; ++l) {
    double* out = s.plane(l);
    for (int i = 0; i < n; ++i) out[i] = p.b[l];
    for (int f = 0; f < p.feats; ++f) {
      const double wf = p.wat(l, f);
      const double* feat = features.plane(f);
      for (int i = 0; i < n; ++i) out[i] += wf * feat[i];
    }
  }
  return s;
}

namespace {

// Indices of the top ceil(1%) pixels of one probability plane; ties resolve
// toward lower pixel index so the fallback is reproducible.
BinaryMask top_percent_mask(const Grid3& probs, int channel, int h, int w) {
  const int n = h * w;
  const int keep = std::max(1, n / 100);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const double* p = probs.plane(channel);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p[a] > p[b]; });
  BinaryMask m(h, w);
  for (int u = 0; u < keep; ++u) m.m[idx[u]] = 1;
  return m;
}

}  // namespace

MaskSet generate_masks(const SynthScene& scene, const TrainConfig& cfg) {
  MaskSet masks;
  if (cfg.variant == LossVariant::weak) return masks;

  const int h = scene.image.h, w = scene.image.w;
  const ForegroundMap pf = fuse_foreground(scene.conv4, scene.conv5, h, w);

  // Tags are known at mask-building time, so only the present classes compete
  // for foreground; absent-class maps would be rescaled noise.
  std::vector<int> fg_labels;
  for (int k : scene.tags.present)
    if (k != 0) fg_labels.push_back(k);

  ProbMaps probs;
  if (cfg.variant == LossVariant::fgbg) {
    probs = fgbg_to_probmaps(pf);
  } else {
    const CamStack cams = compute_cam(scene.cam_features, scene.cam_weights);
    Grid3 up(static_cast<int>(fg_labels.size()), h, w);
    for (size_t t = 0; t < fg_labels.size(); ++t) {
      const Grid2 r = resize_bilinear(cams.maps.channel(fg_labels[t] - 1), h, w);
      std::copy(r.v.begin(), r.v.end(), up.plane(static_cast<int>(t)));
    }
    probs = combine_multiclass(pf, CamStack{std::move(up)}, cfg.alpha, cfg.rho);
  }

  const UnaryField unary = unary_from_probs(probs);
  RegionPartition regions;
  RegionCosts costs;
  const RegionPartition* rp = nullptr;
  const RegionCosts* rc = nullptr;
  if (cfg.higher_order) {
    regions = make_regions(scene.gt, cfg.region_cell);
    costs = region_costs(probs, regions, cfg.theta_max);
    rp = &regions;
    rc = &costs;
  }
  InferOptions opt;
  opt.iters = cfg.crf_iters;
  const Marginals marg = mean_field_infer(unary, scene.image, cfg.crf, rp, rc, opt);
  const LabelMap lab = map_labeling(marg);

  if (cfg.variant == LossVariant::fgbg) {
    BinaryMask fg(h, w);
    for (int i = 0; i < lab.size(); ++i) fg.m[i] = lab.label[i] != 0 ? 1 : 0;
    const int cnt = fg.count();
    if (cnt == 0) {
      std::cerr << "note: empty foreground mask after inference, keeping top-1% prior pixels\n";
      fg = top_percent_mask(probs.p, 1, h, w);
    } else if (cnt == fg.size()) {
      std::cerr << "note: full foreground mask after inference, freeing top-1% background pixels\n";
      const BinaryMask bg = top_percent_mask(probs.p, 0, h, w);
      for (int i = 0; i < fg.size(); ++i)
        if (bg.m[i]) fg.m[i] = 0;
    }
    masks.fg = std::move(fg);
    return masks;
  }

  for (size_t t = 0; t < fg_labels.size(); ++t) {
    const int channel = static_cast<int>(t) + 1;  // reduced label index in probs/lab
    BinaryMask m(h, w);
    for (int i = 0; i < lab.size(); ++i) m.m[i] = lab.label[i] == channel ? 1 : 0;
    if (m.count() == 0) {
      std::cerr << "note: empty mask for label " << fg_labels[t]
                << " after inference, keeping top-1% prior pixels\n";
      m = top_percent_mask(probs.p, channel, h, w);
    }
    masks.per_class.emplace(fg_labels[t], std::move(m));
  }
  return masks;
}

void sgd_update(HeadParams& p, HeadParams& vel, const HeadParams& grad, double lr, double momentum,
                double decay) {
  if (vel.labels != p.labels || vel.feats != p.feats || grad.labels != p.labels ||
      grad.feats != p.feats)
    throw DimensionError("sgd_update: parameter shapes disagree");
  for (size_t i = 0; i < p.w.size(); ++i) {
    vel.w[i] = momentum * vel.w[i] - lr * (grad.w[i] + decay * p.w[i]);
    p.w[i] += vel.w[i];
  }
  for (size_t i = 0; i < p.b.size(); ++i) {
    vel.b[i] = momentum * vel.b[i] - lr * (grad.b[i] + decay * p.b[i]);
    p.b[i] += vel.b[i];
  }
}

TrainResult train_head(const std::vector<SynthScene>& scenes, const TrainConfig& cfg) {
  if (scenes.empty()) throw DimensionError("train_head: empty dataset");
  if (cfg.epochs < 1) throw DimensionError("train_head: need at least one epoch");

  std::vector<Grid3> feats;
  std::vector<MaskSet> masks;
  feats.reserve(scenes.size());
  masks.reserve(scenes.size());
  for (const SynthScene& sc : scenes) {
    feats.push_back(build_features(sc));
    masks.push_back(generate_masks(sc, cfg));
  }

  const int labels = scenes[0].tags.class_count + 1;
  const int F = feats[0].c;
  HeadParams p(labels, F), vel(labels, F);
  TrainResult res;
  Rng rng(cfg.seed);
  std::vector<int> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  const int drop_epoch = (2 * cfg.epochs + 2) / 3;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = epoch < drop_epoch ? cfg.lr : cfg.lr * cfg.lr_drop;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);
    double loss_sum = 0.0;
    for (int si : order) {
      const Grid3 scores = predict(p, feats[si]);
      const LossResult lg =
          loss_grad(cfg.variant, scores, scenes[si].tags, &masks[si], cfg.r);
      if (!std::isfinite(lg.value))
        throw NumericError("train_head: non-finite loss at epoch " + std::to_string(epoch) +
                           ", sample " + std::to_string(si));
      loss_sum += lg.value;

      HeadParams grad(labels, F);
      const int n = feats[si].plane_size();
      for (int l = 0; l < labels; ++l) {
        const double* g = lg.grad.plane(l);
        double gb = 0.0;
        for (int i = 0; i < n; ++i) gb += g[i];
        grad.b[l] = gb;
        for (int f = 0; f < F; ++f) {
          const double* feat = feats[si].plane(f);
          double gw = 0.0;
          for (int i = 0; i < n; ++i) gw += g[i] * feat[i];
          grad.wat(l, f) = gw;
        }
      }
      sgd_update(p, vel, grad, lr, cfg.momentum, cfg.decay);
    }
    res.epoch_loss.push_back(loss_sum / scenes.size());
  }
  res.params = std::move(p);
  return res;
}

}  // namespace wsseg
