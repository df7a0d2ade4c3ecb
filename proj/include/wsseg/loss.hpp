#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wsseg/tensor.hpp"

namespace wsseg {

// Image-level supervision: which labels appear. Label 0 (background) is
// always present; foreground labels run 1..class_count.
struct TagSet {
  int class_count = 0;              // foreground classes; labels span 0..class_count
  std::vector<uint8_t> is_present;  // size class_count + 1
  std::vector<int> present;         // ascending, always starts with 0
  std::vector<int> absent;          // ascending

  // fg_present lists foreground labels; 0 may appear and is folded in.
  static TagSet from_present(int class_count, const std::vector<int>& fg_present);
};

struct BinaryMask {
  int h = 0;
  int w = 0;
  std::vector<uint8_t> m;

  BinaryMask() = default;
  BinaryMask(int h_, int w_) : h(h_), w(w_) {
    if (h_ <= 0 || w_ <= 0) throw DimensionError("BinaryMask: dims must be positive");
    m.assign(static_cast<size_t>(h_) * w_, 0);
  }
  int count() const;
  int size() const { return h * w; }
};

// Per-pixel stabilized softmax over the channel axis.
Grid3 softmax_scores(const Grid3& scores);

// Smooth-maximum pooling: (1/r) * log((1/n) * sum exp(r * v)). Lies between
// the mean and the max, within ln(n)/r of the max, and grows with r.
double lse_pool(std::span<const double> values, double r = 5.0);

inline constexpr double kLossLogFloor = 1e-12;
inline constexpr double kDefaultLseSharpness = 5.0;

// Tag-only loss: every channel pools over the whole image. Present labels
// (background included) pay -log of their pooled score, absent labels pay
// -log(1 - pooled score); each group is averaged over its size.
double loss_weak(const Grid3& scores, const TagSet& tags, double r = kDefaultLseSharpness);

// Foreground/background mask loss: present foreground labels pool over the
// mask, background pools over its complement, absent labels pay per-pixel
// -log(1 - S) averaged over all pixels and absent labels. The mask must be
// neither empty nor full.
double loss_fgbg(const Grid3& scores, const TagSet& tags, const BinaryMask& fg_mask,
                 double r = kDefaultLseSharpness);

// Per-class mask loss: each present label pools over its own mask (a missing
// background mask defaults to the complement of the union of the foreground
// masks); the absent term matches loss_fgbg.
double loss_multiclass(const Grid3& scores, const TagSet& tags,
                       const std::map<int, BinaryMask>& masks, double r = kDefaultLseSharpness);

enum class LossVariant { weak, fgbg, multiclass };

// Mask inputs for loss_grad; fg for the fgbg variant, per_class for multiclass.
struct MaskSet {
  std::optional<BinaryMask> fg;
  std::map<int, BinaryMask> per_class;
};

struct LossResult {
  double value = 0.0;
  Grid3 grad;  // d loss / d scores, same shape as the scores
};

// Loss value plus its analytic gradient with respect to the raw scores.
// Floored log arguments contribute zero gradient, consistent with the value.
LossResult loss_grad(LossVariant variant, const Grid3& scores, const TagSet& tags,
                     const MaskSet* masks = nullptr, double r = kDefaultLseSharpness);

}  // namespace wsseg
