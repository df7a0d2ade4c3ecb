#pragma once

#include <cstdint>
#include <vector>

#include "wsseg/cam.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

// Per-pixel per-label costs (lower = preferred).
struct UnaryField {
  Grid3 theta;  // labels x h x w
  int label_count() const { return theta.c; }
};

// Dense pairwise kernel
//   k(i,j) = w_app * exp(-|dp|^2 / (2 ta^2) - |dc|^2 / (2 tb^2))
//          + w_smooth * exp(-|dp|^2 / (2 tg^2))
// with dp the pixel position difference and dc the color difference in
// 8-bit intensity units.
struct PairwiseParams {
  double w_app = 5.0;
  double theta_alpha = 30.0;
  double theta_beta = 13.0;
  double w_smooth = 3.0;
  double theta_gamma = 3.0;
};

// Pixel -> region id partition; ids are dense in [0, region_count).
struct RegionPartition {
  int h = 0;
  int w = 0;
  int region_count = 0;
  std::vector<int> id;  // row-major, size h*w

  // Builds a partition from arbitrary non-negative ids, remapping them to a
  // dense range in order of first appearance.
  static RegionPartition from_ids(int h, int w, const std::vector<int>& raw);
};

// Per-region per-label costs plus the uniformity-violation penalty.
struct RegionCosts {
  int regions = 0;
  int labels = 0;
  std::vector<double> cost;  // regions x labels
  double theta_max = 0.0;

  double at(int s, int l) const { return cost[static_cast<size_t>(s) * labels + l]; }
};

// Per-pixel label marginals; each pixel sums to 1.
struct Marginals {
  Grid3 q;  // labels x h x w
  int label_count() const { return q.c; }
};

struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<int> label;

  LabelMap() = default;
  LabelMap(int h_, int w_, int fill = 0) : h(h_), w(w_) {
    if (h_ <= 0 || w_ <= 0) throw DimensionError("LabelMap: dims must be positive");
    label.assign(static_cast<size_t>(h_) * w_, fill);
  }
  int& at(int y, int x) { return label[static_cast<size_t>(y) * w + x]; }
  int at(int y, int x) const { return label[static_cast<size_t>(y) * w + x]; }
  int size() const { return h * w; }
};

inline constexpr double kDefaultThetaMax = 6.907755278982137;  // -log(1e-3)
inline constexpr double kRegionProbFloor = 1e-3;

enum class UnaryMode {
  softmax_log,  // theta = -log softmax(p); compresses the input range
  neg_log,      // theta = -log max(p, floor); uses the probabilities directly
};

// Unary costs from per-pixel label distributions.
UnaryField unary_from_probs(const ProbMaps& p, UnaryMode mode = UnaryMode::softmax_log);

// Per-region label costs: -log of the label's mean probability over the
// region, floored so no cost exceeds -log(floor).
RegionCosts region_costs(const ProbMaps& p, const RegionPartition& r,
                         double theta_max = kDefaultThetaMax,
                         double floor = kRegionProbFloor);

// Symmetric pairwise kernel between two pixels; col* point at 3 color values.
double kernel_value(const PairwiseParams& pp, int y1, int x1, const double* col1, int y2, int x2,
                    const double* col2);

struct InferOptions {
  int iters = 10;
  bool approximate = false;     // truncated sliding-window kernels
  int max_exact_pixels = 16384; // refuse larger inputs in exact mode
};

// Synchronous mean-field: all pixels update from the previous iterate, then
// marginals renormalize. Init is proportional to exp(-theta). regions/costs
// must be supplied together or not at all.
Marginals mean_field_infer(const UnaryField& unary, const Grid3& image, const PairwiseParams& pp,
                           const RegionPartition* regions = nullptr,
                           const RegionCosts* costs = nullptr, const InferOptions& opt = {});

// Total labeling cost: sum of unaries, kernel over distinct-label pairs
// (each unordered pair once), and per-region cost (region's own cost when
// uniformly labeled, theta_max otherwise). Always exact, O(N^2).
double gibbs_energy(const LabelMap& labels, const UnaryField& unary, const Grid3& image,
                    const PairwiseParams& pp, const RegionPartition* regions = nullptr,
                    const RegionCosts* costs = nullptr);

// Per-pixel argmax of the marginals; ties go to the smaller label.
LabelMap map_labeling(const Marginals& m);

}  // namespace wsseg
