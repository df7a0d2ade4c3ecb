#include "wsseg/crf.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace wsseg {

RegionPartition RegionPartition::from_ids(int h, int w, const std::vector<int>& raw) {
  if (h <= 0 || w <= 0) throw DimensionError("RegionPartition: dims must be positive");
  if (raw.size() != static_cast<size_t>(h) * w)
    throw DimensionError("RegionPartition: id count does not match dims");
  RegionPartition out;
  out.h = h;
  out.w = w;
  out.id.resize(raw.size());
  std::unordered_map<int, int> remap;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) throw DimensionError("RegionPartition: ids must be non-negative");
    auto [it, fresh] = remap.emplace(raw[i], static_cast<int>(remap.size()));
    (void)fresh;
    out.id[i] = it->second;
  }
  out.region_count = static_cast<int>(remap.size());
  return out;
}

UnaryField unary_from_probs(const ProbMaps& p, UnaryMode mode) {
  const int L = p.label_count();
  const int n = p.p.plane_size();
  Grid3 theta(L, p.p.h, p.p.w);
  if (mode == UnaryMode::neg_log) {
    for (size_t i = 0; i < p.p.v.size(); ++i)
      theta.v[i] = -std::log(std::max(p.p.v[i], kProbFloor));
    return UnaryField{std::move(theta)};
  }
  // Softmax over the per-pixel probability vector, then -log. Probabilities
  // live in [0, 1], so exp never overflows; still subtract the max for tidy
  // round-trips of hand-built inputs.
  std::vector<double> e(L);
  for (int i = 0; i < n; ++i) {
    double mx = p.p.v[i];
    for (int l = 1; l < L; ++l) mx = std::max(mx, p.p.v[static_cast<size_t>(l) * n + i]);
    double z = 0.0;
    for (int l = 0; l < L; ++l) {
      e[l] = std::exp(p.p.v[static_cast<size_t>(l) * n + i] - mx);
      z += e[l];
    }
    for (int l = 0; l < L; ++l)
      theta.v[static_cast<size_t>(l) * n + i] = -std::log(e[l] / z);
  }
  return UnaryField{std::move(theta)};
}

RegionCosts region_costs(const ProbMaps& p, const RegionPartition& r, double theta_max,
                         double floor) {
  if (r.h != p.p.h || r.w != p.p.w) throw DimensionError("region_costs: partition dims disagree");
  if (floor <= 0.0 || floor >= 1.0) throw DimensionError("region_costs: floor must be in (0, 1)");
  const int L = p.label_count();
  const int n = p.p.plane_size();
  RegionCosts out;
  out.regions = r.region_count;
  out.labels = L;
  out.theta_max = theta_max;
  out.cost.assign(static_cast<size_t>(r.region_count) * L, 0.0);
  std::vector<double> size(r.region_count, 0.0);
  for (int i = 0; i < n; ++i) size[r.id[i]] += 1.0;
  for (int l = 0; l < L; ++l) {
    const double* pl = p.p.plane(l);
    for (int i = 0; i < n; ++i) out.cost[static_cast<size_t>(r.id[i]) * L + l] += pl[i];
  }
  for (int s = 0; s < r.region_count; ++s)
    for (int l = 0; l < L; ++l) {
      double& c = out.cost[static_cast<size_t>(s) * L + l];
      c = -std::log(std::max(c / size[s], floor));
    }
  return out;
}

double kernel_value(const PairwiseParams& pp, int y1, int x1, const double* col1, int y2, int x2,
                    const double* col2) {
  const double dy = y1 - y2, dx = x1 - x2;
  const double dp2 = dy * dy + dx * dx;
  double dc2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = col1[c] - col2[c];
    dc2 += d * d;
  }
  return pp.w_app * std::exp(-dp2 / (2.0 * pp.theta_alpha * pp.theta_alpha) -
                             dc2 / (2.0 * pp.theta_beta * pp.theta_beta)) +
         pp.w_smooth * std::exp(-dp2 / (2.0 * pp.theta_gamma * pp.theta_gamma));
}

namespace {

// Colors of pixel i as a pointer triple into the image planes.
struct PixelColors {
  const double* r;
  const double* g;
  const double* b;
  void fetch(int i, double* col) const { col[0] = r[i]; col[1] = g[i]; col[2] = b[i]; }
};

void check_crf_inputs(const UnaryField& unary, const Grid3& image, const RegionPartition* regions,
                      const RegionCosts* costs) {
  if (image.c != 3) throw DimensionError("crf: image must have 3 channels");
  if (image.h != unary.theta.h || image.w != unary.theta.w)
    throw DimensionError("crf: image dims must match unary dims");
  if ((regions == nullptr) != (costs == nullptr))
    throw DimensionError("crf: region partition and region costs must come together");
  if (regions) {
    if (regions->h != unary.theta.h || regions->w != unary.theta.w)
      throw DimensionError("crf: partition dims must match unary dims");
    if (costs->regions != regions->region_count)
      throw DimensionError("crf: cost table region count mismatch");
    if (costs->labels != unary.label_count())
      throw DimensionError("crf: cost table label count mismatch");
  }
}

// Kernel matrices up to this many pixels are precomputed (float, ~67 MB at
// the limit); larger exact-mode inputs recompute kernel values per sweep.
constexpr int kKernelCacheLimit = 4096;

constexpr double kLogFloor = 1e-300;

void normalize_rows(Grid3& q, const std::vector<double>& neg_energy, int i) {
  // neg_energy holds -(theta + messages) for one pixel across labels.
  const int L = q.c;
  const int n = q.plane_size();
  double mx = neg_energy[0];
  for (int l = 1; l < L; ++l) mx = std::max(mx, neg_energy[l]);
  double z = 0.0;
  for (int l = 0; l < L; ++l) z += std::exp(neg_energy[l] - mx);
  for (int l = 0; l < L; ++l)
    q.v[static_cast<size_t>(l) * n + i] = std::exp(neg_energy[l] - mx) / z;
}

}  // namespace

Marginals mean_field_infer(const UnaryField& unary, const Grid3& image, const PairwiseParams& pp,
                           const RegionPartition* regions, const RegionCosts* costs,
                           const InferOptions& opt) {
  check_crf_inputs(unary, image, regions, costs);
  if (opt.iters < 0) throw DimensionError("crf: iteration count must be >= 0");
  const int h = unary.theta.h, w = unary.theta.w;
  const int n = h * w;
  const int L = unary.label_count();
  if (!opt.approximate && n > opt.max_exact_pixels)
    throw DimensionError("crf: pixel count exceeds the exact-mode cap; use approximate mode");

  Grid3 q(L, h, w);
  std::vector<double> ne(L);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < L; ++l) ne[l] = -unary.theta.v[static_cast<size_t>(l) * n + i];
    normalize_rows(q, ne, i);
  }
  if (opt.iters == 0) return Marginals{std::move(q)};

  const PixelColors cols{image.plane(0), image.plane(1), image.plane(2)};
  const bool cache_kernel = !opt.approximate && n <= kKernelCacheLimit;
  std::vector<float> K;
  std::vector<double> rowsum(n, 0.0);
  if (cache_kernel) {
    K.assign(static_cast<size_t>(n) * n, 0.0f);
    double ci[3], cj[3];
    for (int i = 0; i < n; ++i) {
      cols.fetch(i, ci);
      for (int j = i + 1; j < n; ++j) {
        cols.fetch(j, cj);
        const double k = kernel_value(pp, i / w, i % w, ci, j / w, j % w, cj);
        K[static_cast<size_t>(i) * n + j] = static_cast<float>(k);
        K[static_cast<size_t>(j) * n + i] = static_cast<float>(k);
        rowsum[i] += k;
        rowsum[j] += k;
      }
    }
  } else if (!opt.approximate) {
    double ci[3], cj[3];
    for (int i = 0; i < n; ++i) {
      cols.fetch(i, ci);
      for (int j = i + 1; j < n; ++j) {
        cols.fetch(j, cj);
        const double k = kernel_value(pp, i / w, i % w, ci, j / w, j % w, cj);
        rowsum[i] += k;
        rowsum[j] += k;
      }
    }
  }

  const int rad_app = static_cast<int>(std::ceil(3.0 * pp.theta_alpha));
  const int rad_smooth = static_cast<int>(std::ceil(3.0 * pp.theta_gamma));

  Grid3 q_next(L, h, w);
  std::vector<double> msg(static_cast<size_t>(L) * n);
  std::vector<double> ho;
  std::vector<double> region_logq;
  if (regions) {
    ho.resize(static_cast<size_t>(L) * n);
    region_logq.resize(static_cast<size_t>(regions->region_count) * L);
  }

  for (int iter = 0; iter < opt.iters; ++iter) {
    // Pairwise messages: sum over j != i of k(i,j) * (1 - q_j(label)), i.e.
    // the expected kernel mass from neighbors holding a different label.
    if (cache_kernel) {
      for (int l = 0; l < L; ++l) {
        const double* ql = q.plane(l);
        double* ml = msg.data() + static_cast<size_t>(l) * n;
        for (int i = 0; i < n; ++i) {
          const float* row = K.data() + static_cast<size_t>(i) * n;
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += row[j] * ql[j];
          ml[i] = rowsum[i] - acc;
        }
      }
    } else if (!opt.approximate) {
      std::fill(msg.begin(), msg.end(), 0.0);
      double ci[3], cj[3];
      for (int i = 0; i < n; ++i) {
        cols.fetch(i, ci);
        for (int j = i + 1; j < n; ++j) {
          cols.fetch(j, cj);
          const double k = kernel_value(pp, i / w, i % w, ci, j / w, j % w, cj);
          for (int l = 0; l < L; ++l) {
            msg[static_cast<size_t>(l) * n + i] += k * q.v[static_cast<size_t>(l) * n + j];
            msg[static_cast<size_t>(l) * n + j] += k * q.v[static_cast<size_t>(l) * n + i];
          }
        }
      }
      for (int l = 0; l < L; ++l)
        for (int i = 0; i < n; ++i) {
          double& m = msg[static_cast<size_t>(l) * n + i];
          m = rowsum[i] - m;
        }
    } else {
      // Truncated kernels: each Gaussian only reaches 3 bandwidths out.
      std::fill(msg.begin(), msg.end(), 0.0);
      const double inv2a = 1.0 / (2.0 * pp.theta_alpha * pp.theta_alpha);
      const double inv2b = 1.0 / (2.0 * pp.theta_beta * pp.theta_beta);
      const double inv2g = 1.0 / (2.0 * pp.theta_gamma * pp.theta_gamma);
      double ci[3], cj[3];
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int i = y * w + x;
          cols.fetch(i, ci);
          double rs = 0.0;
          std::vector<double> acc(L, 0.0);
          const int rad = std::max(rad_app, rad_smooth);
          for (int dy = -rad; dy <= rad; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h) continue;
            for (int dx = -rad; dx <= rad; ++dx) {
              if (dy == 0 && dx == 0) continue;
              const int xx = x + dx;
              if (xx < 0 || xx >= w) continue;
              const int j = yy * w + xx;
              const double dp2 = double(dy) * dy + double(dx) * dx;
              double k = 0.0;
              if (std::abs(dy) <= rad_app && std::abs(dx) <= rad_app) {
                cols.fetch(j, cj);
                double dc2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                  const double d = ci[c] - cj[c];
                  dc2 += d * d;
                }
                k += pp.w_app * std::exp(-dp2 * inv2a - dc2 * inv2b);
              }
              if (std::abs(dy) <= rad_smooth && std::abs(dx) <= rad_smooth)
                k += pp.w_smooth * std::exp(-dp2 * inv2g);
              if (k == 0.0) continue;
              rs += k;
              for (int l = 0; l < L; ++l) acc[l] += k * q.v[static_cast<size_t>(l) * n + j];
            }
          }
          for (int l = 0; l < L; ++l) msg[static_cast<size_t>(l) * n + i] = rs - acc[l];
        }
    }

    // Region messages: expected region cost given this pixel holds the label.
    // The co-labeling probability is a product over region mates, tracked in
    // the log domain per region so each pixel divides its own factor out.
    if (regions) {
      std::fill(region_logq.begin(), region_logq.end(), 0.0);
      for (int i = 0; i < n; ++i) {
        const int s = regions->id[i];
        for (int l = 0; l < L; ++l)
          region_logq[static_cast<size_t>(s) * L + l] +=
              std::log(std::max(q.v[static_cast<size_t>(l) * n + i], kLogFloor));
      }
      for (int i = 0; i < n; ++i) {
        const int s = regions->id[i];
        for (int l = 0; l < L; ++l) {
          const double lq = std::log(std::max(q.v[static_cast<size_t>(l) * n + i], kLogFloor));
          double prod = std::exp(region_logq[static_cast<size_t>(s) * L + l] - lq);
          prod = std::clamp(prod, 0.0, 1.0);
          ho[static_cast<size_t>(l) * n + i] =
              costs->at(s, l) * prod + costs->theta_max * (1.0 - prod);
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < L; ++l) {
        double e = unary.theta.v[static_cast<size_t>(l) * n + i] +
                   msg[static_cast<size_t>(l) * n + i];
        if (regions) e += ho[static_cast<size_t>(l) * n + i];
        ne[l] = -e;
      }
      normalize_rows(q_next, ne, i);
    }
    std::swap(q.v, q_next.v);
  }
  return Marginals{std::move(q)};
}

double gibbs_energy(const LabelMap& labels, const UnaryField& unary, const Grid3& image,
                    const PairwiseParams& pp, const RegionPartition* regions,
                    const RegionCosts* costs) {
  check_crf_inputs(unary, image, regions, costs);
  if (labels.h != unary.theta.h || labels.w != unary.theta.w)
    throw DimensionError("gibbs_energy: label dims must match unary dims");
  const int n = labels.size();
  const int L = unary.label_count();
  const int w = labels.w;
  for (int i = 0; i < n; ++i)
    if (labels.label[i] < 0 || labels.label[i] >= L)
      throw DimensionError("gibbs_energy: label out of range");

  double e = 0.0;
  for (int i = 0; i < n; ++i)
    e += unary.theta.v[static_cast<size_t>(labels.label[i]) * n + i];

  const PixelColors cols{image.plane(0), image.plane(1), image.plane(2)};
  double ci[3], cj[3];
  for (int i = 0; i < n; ++i) {
    cols.fetch(i, ci);
    for (int j = i + 1; j < n; ++j) {
      if (labels.label[i] == labels.label[j]) continue;
      cols.fetch(j, cj);
      e += kernel_value(pp, i / w, i % w, ci, j / w, j % w, cj);
    }
  }

  if (regions) {
    std::vector<int> region_label(regions->region_count, -1);
    std::vector<bool> uniform(regions->region_count, true);
    for (int i = 0; i < n; ++i) {
      const int s = regions->id[i];
      if (region_label[s] < 0)
        region_label[s] = labels.label[i];
      else if (region_label[s] != labels.label[i])
        uniform[s] = false;
    }
    for (int s = 0; s < regions->region_count; ++s)
      e += uniform[s] ? costs->at(s, region_label[s]) : costs->theta_max;
  }
  return e;
}

LabelMap map_labeling(const Marginals& m) {
  LabelMap out(m.q.h, m.q.w);
  const int n = out.size();
  const int L = m.label_count();
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bq = m.q.v[i];
    for (int l = 1; l < L; ++l) {
      const double ql = m.q.v[static_cast<size_t>(l) * n + i];
      if (ql > bq) {
        bq = ql;
        best = l;
      }
    }
    out.label[i] = best;
  }
  return out;
}

}  // namespace wsseg
