#include "wsseg/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wsseg {

TagSet TagSet::from_present(int class_count, const std::vector<int>& fg_present) {
  if (class_count < 1) throw DimensionError("TagSet: need at least one foreground class");
  TagSet t;
  t.class_count = class_count;
  t.is_present.assign(class_count + 1, 0);
  t.is_present[0] = 1;
  for (int k : fg_present) {
    if (k < 0 || k > class_count) throw DimensionError("TagSet: label out of range");
    if (k > 0 && t.is_present[k]) throw DimensionError("TagSet: duplicate label");
    t.is_present[k] = 1;
  }
  for (int k = 0; k <= class_count; ++k)
    (t.is_present[k] ? t.present : t.absent).push_back(k);
  return t;
}

int BinaryMask::count() const {
  int c = 0;
  for (uint8_t b : m) c += b ? 1 : 0;
  return c;
}

Grid3 softmax_scores(const Grid3& scores) {
  Grid3 out(scores.c, scores.h, scores.w);
  const int n = scores.plane_size();
  for (int i = 0; i < n; ++i) {
    double mx = scores.v[i];
    for (int k = 1; k < scores.c; ++k)
      mx = std::max(mx, scores.v[static_cast<size_t>(k) * n + i]);
    double z = 0.0;
    for (int k = 0; k < scores.c; ++k) {
      const double e = std::exp(scores.v[static_cast<size_t>(k) * n + i] - mx);
      out.v[static_cast<size_t>(k) * n + i] = e;
      z += e;
    }
    for (int k = 0; k < scores.c; ++k) out.v[static_cast<size_t>(k) * n + i] /= z;
  }
  return out;
}

double lse_pool(std::span<const double> values, double r) {
  if (values.empty()) throw DimensionError("lse_pool: empty list");
  if (!(r > 0.0)) throw DimensionError("lse_pool: sharpness must be positive");
  const double mx = *std::max_element(values.begin(), values.end());
  double z = 0.0;
  for (double v : values) z += std::exp(r * (v - mx));
  return mx + (std::log(z) - std::log(static_cast<double>(values.size()))) / r;
}

namespace {

// Pooled value over the listed pixels of one channel plane; when wts is given
// it receives d pooled / d value for each listed pixel.
double pool_subset(const double* plane, const std::vector<int>& idx, double r,
                   std::vector<double>* wts) {
  double mx = plane[idx[0]];
  for (int t : idx) mx = std::max(mx, plane[t]);
  double z = 0.0;
  for (int t : idx) z += std::exp(r * (plane[t] - mx));
  if (wts) {
    wts->resize(idx.size());
    for (size_t u = 0; u < idx.size(); ++u) (*wts)[u] = std::exp(r * (plane[idx[u]] - mx)) / z;
  }
  return mx + (std::log(z) - std::log(static_cast<double>(idx.size()))) / r;
}

// -log(max(x, floor)) plus the matching derivative coefficient (zero when the
// floor is active, so value and gradient stay consistent).
double floored_neg_log(double x, double* dcoef) {
  if (x > kLossLogFloor) {
    if (dcoef) *dcoef = -1.0 / x;
    return -std::log(x);
  }
  if (dcoef) *dcoef = 0.0;
  return -std::log(kLossLogFloor);
}

std::vector<int> all_pixels(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> mask_pixels(const BinaryMask& m, bool inverted) {
  std::vector<int> idx;
  for (int i = 0; i < m.size(); ++i)
    if ((m.m[i] != 0) != inverted) idx.push_back(i);
  return idx;
}

void check_scores(const Grid3& scores, const TagSet& tags) {
  if (scores.c != tags.class_count + 1)
    throw DimensionError("loss: score channels must equal class count + 1");
}

// dS accumulates d loss / d softmax probabilities when non-null.
double weak_core(const Grid3& S, const TagSet& tags, double r, Grid3* dS) {
  const int n = S.plane_size();
  const std::vector<int> idx = all_pixels(n);
  std::vector<double> wts;
  double loss = 0.0;
  const double inv_p = 1.0 / tags.present.size();
  for (int k : tags.present) {
    double dcoef;
    const double pooled = pool_subset(S.plane(k), idx, r, dS ? &wts : nullptr);
    loss += inv_p * floored_neg_log(pooled, &dcoef);
    if (dS)
      for (size_t u = 0; u < idx.size(); ++u)
        dS->plane(k)[idx[u]] += inv_p * dcoef * wts[u];
  }
  if (!tags.absent.empty()) {
    const double inv_a = 1.0 / tags.absent.size();
    for (int k : tags.absent) {
      double dcoef;
      const double pooled = pool_subset(S.plane(k), idx, r, dS ? &wts : nullptr);
      loss += inv_a * floored_neg_log(1.0 - pooled, &dcoef);
      if (dS)
        for (size_t u = 0; u < idx.size(); ++u)
          dS->plane(k)[idx[u]] += inv_a * (-dcoef) * wts[u];
    }
  }
  return loss;
}

// Shared absent-label term of the masked losses: plain per-pixel sums.
double absent_pixelwise(const Grid3& S, const TagSet& tags, Grid3* dS) {
  if (tags.absent.empty()) return 0.0;
  const int n = S.plane_size();
  const double norm = 1.0 / (static_cast<double>(tags.absent.size()) * n);
  double loss = 0.0;
  for (int k : tags.absent) {
    const double* plane = S.plane(k);
    double* gplane = dS ? dS->plane(k) : nullptr;
    for (int i = 0; i < n; ++i) {
      double dcoef;
      loss += norm * floored_neg_log(1.0 - plane[i], &dcoef);
      if (gplane) gplane[i] += norm * (-dcoef);
    }
  }
  return loss;
}

double fgbg_core(const Grid3& S, const TagSet& tags, const BinaryMask& fg_mask, double r,
                 Grid3* dS) {
  if (fg_mask.h != S.h || fg_mask.w != S.w)
    throw DimensionError("loss_fgbg: mask dims must match score dims");
  const std::vector<int> fg = mask_pixels(fg_mask, false);
  const std::vector<int> bg = mask_pixels(fg_mask, true);
  if (fg.empty()) throw MaskError("loss_fgbg: empty foreground mask");
  if (bg.empty()) throw MaskError("loss_fgbg: empty background mask");

  std::vector<double> wts;
  double loss = 0.0;
  const int fg_present = static_cast<int>(tags.present.size()) - 1;
  if (fg_present > 0) {
    const double inv_p = 1.0 / fg_present;
    for (int k : tags.present) {
      if (k == 0) continue;
      double dcoef;
      const double pooled = pool_subset(S.plane(k), fg, r, dS ? &wts : nullptr);
      loss += inv_p * floored_neg_log(pooled, &dcoef);
      if (dS)
        for (size_t u = 0; u < fg.size(); ++u) dS->plane(k)[fg[u]] += inv_p * dcoef * wts[u];
    }
  }
  {
    double dcoef;
    const double pooled = pool_subset(S.plane(0), bg, r, dS ? &wts : nullptr);
    loss += floored_neg_log(pooled, &dcoef);
    if (dS)
      for (size_t u = 0; u < bg.size(); ++u) dS->plane(0)[bg[u]] += dcoef * wts[u];
  }
  return loss + absent_pixelwise(S, tags, dS);
}

double multiclass_core(const Grid3& S, const TagSet& tags, const std::map<int, BinaryMask>& masks,
                       double r, Grid3* dS) {
  // Background mask defaults to pixels outside every foreground mask.
  BinaryMask bg_default;
  const BinaryMask* bg = nullptr;
  if (auto it = masks.find(0); it != masks.end()) {
    bg = &it->second;
  } else {
    bg_default = BinaryMask(S.h, S.w);
    std::fill(bg_default.m.begin(), bg_default.m.end(), uint8_t{1});
    for (const auto& [k, m] : masks) {
      if (k < 0 || k >= static_cast<int>(tags.is_present.size()) || !tags.is_present[k])
        continue;  // stray masks for absent or unknown labels carry no term
      if (m.h != S.h || m.w != S.w)
        throw DimensionError("loss_multiclass: mask dims must match score dims");
      for (int i = 0; i < m.size(); ++i)
        if (m.m[i]) bg_default.m[i] = 0;
    }
    bg = &bg_default;
  }

  std::vector<double> wts;
  double loss = 0.0;
  const double inv_p = 1.0 / tags.present.size();
  for (int k : tags.present) {
    const BinaryMask* mk;
    if (k == 0) {
      mk = bg;
    } else {
      auto it = masks.find(k);
      if (it == masks.end()) throw MaskError("loss_multiclass: missing mask for a present label");
      mk = &it->second;
    }
    if (mk->h != S.h || mk->w != S.w)
      throw DimensionError("loss_multiclass: mask dims must match score dims");
    const std::vector<int> idx = mask_pixels(*mk, false);
    if (idx.empty()) throw MaskError("loss_multiclass: empty mask for a present label");
    double dcoef;
    const double pooled = pool_subset(S.plane(k), idx, r, dS ? &wts : nullptr);
    loss += inv_p * floored_neg_log(pooled, &dcoef);
    if (dS)
      for (size_t u = 0; u < idx.size(); ++u) dS->plane(k)[idx[u]] += inv_p * dcoef * wts[u];
  }
  return loss + absent_pixelwise(S, tags, dS);
}

double dispatch(LossVariant variant, const Grid3& S, const TagSet& tags, const MaskSet* masks,
                double r, Grid3* dS) {
  switch (variant) {
    case LossVariant::weak:
      return weak_core(S, tags, r, dS);
    case LossVariant::fgbg:
      if (!masks || !masks->fg) throw DimensionError("loss: fgbg variant needs a mask");
      return fgbg_core(S, tags, *masks->fg, r, dS);
    case LossVariant::multiclass:
      if (!masks) throw DimensionError("loss: multiclass variant needs masks");
      return multiclass_core(S, tags, masks->per_class, r, dS);
  }
  throw DimensionError("loss: unknown variant");
}

}  // namespace

double loss_weak(const Grid3& scores, const TagSet& tags, double r) {
  check_scores(scores, tags);
  return weak_core(softmax_scores(scores), tags, r, nullptr);
}

double loss_fgbg(const Grid3& scores, const TagSet& tags, const BinaryMask& fg_mask, double r) {
  check_scores(scores, tags);
  return fgbg_core(softmax_scores(scores), tags, fg_mask, r, nullptr);
}

double loss_multiclass(const Grid3& scores, const TagSet& tags,
                       const std::map<int, BinaryMask>& masks, double r) {
  check_scores(scores, tags);
  return multiclass_core(softmax_scores(scores), tags, masks, r, nullptr);
}

LossResult loss_grad(LossVariant variant, const Grid3& scores, const TagSet& tags,
                     const MaskSet* masks, double r) {
  check_scores(scores, tags);
  const Grid3 S = softmax_scores(scores);
  Grid3 dS(scores.c, scores.h, scores.w);
  LossResult res;
  res.value = dispatch(variant, S, tags, masks, r, &dS);
  // Softmax backward per pixel: g_k = S_k * (dS_k - sum_k' dS_k' * S_k').
  res.grad = Grid3(scores.c, scores.h, scores.w);
  const int n = scores.plane_size();
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int k = 0; k < scores.c; ++k)
      dot += dS.v[static_cast<size_t>(k) * n + i] * S.v[static_cast<size_t>(k) * n + i];
    for (int k = 0; k < scores.c; ++k) {
      const size_t o = static_cast<size_t>(k) * n + i;
      res.grad.v[o] = S.v[o] * (dS.v[o] - dot);
    }
  }
  return res;
}

}  // namespace wsseg
