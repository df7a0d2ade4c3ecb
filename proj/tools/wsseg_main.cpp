// Command-line front end: each subcommand wires file formats to one stage of
// the pipeline. Exit codes: 0 ok, 2 usage, 3 malformed input file, 4 numeric
// failure.
#include <CLI11.hpp>
#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "wsseg/io.hpp"
#include "wsseg/metrics.hpp"
#include "wsseg/rng.hpp"
#include "wsseg/synth.hpp"
#include "wsseg/train.hpp"

namespace fs = std::filesystem;
using namespace wsseg;

namespace {

std::string indexed(const std::string& dir, const char* stem, int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, i, ext);
  return (fs::path(dir) / buf).string();
}

Grid3 resize_stack(const Grid3& maps, int h, int w) {
  Grid3 out(maps.c, h, w);
  for (int c = 0; c < maps.c; ++c) {
    const Grid2 r = resize_bilinear(maps.channel(c), h, w);
    std::copy(r.v.begin(), r.v.end(), out.plane(c));
  }
  return out;
}

LossVariant parse_variant(const std::string& name) {
  if (name == "weak") return LossVariant::weak;
  if (name == "fgbg") return LossVariant::fgbg;
  if (name == "multiclass") return LossVariant::multiclass;
  throw DimensionError("unknown loss variant '" + name + "'");
}

struct FuseArgs {
  std::string conv4, conv5, out;
  int h = 0, w = 0;
};

void run_fuse(const FuseArgs& a) {
  const Grid3 c4 = grid3_from(read_tensor(a.conv4));
  const Grid3 c5 = grid3_from(read_tensor(a.conv5));
  const int h = a.h > 0 ? a.h : c4.h;
  const int w = a.w > 0 ? a.w : c4.w;
  write_tensor(a.out, tensor_from(fuse_foreground(c4, c5, h, w).p));
}

struct CamArgs {
  std::string features, weights, out, binarized_out;
  double rho = 0.2;
  int h = 0, w = 0;
};

void run_cam(const CamArgs& a) {
  const Grid3 f = grid3_from(read_tensor(a.features));
  const Tensor wt = read_tensor(a.weights);
  if (wt.dims.size() != 2) throw FormatError(a.weights + ": expected a rank-2 tensor");
  CamWeights w(static_cast<int>(wt.dims[0]), static_cast<int>(wt.dims[1]));
  w.w = wt.v;
  CamStack cams = compute_cam(f, w);
  if (a.h > 0 || a.w > 0)
    cams.maps = resize_stack(cams.maps, a.h > 0 ? a.h : cams.maps.h, a.w > 0 ? a.w : cams.maps.w);
  write_tensor(a.out, tensor_from(cams.maps));
  if (!a.binarized_out.empty()) {
    Grid3 bin(cams.maps.c, cams.maps.h, cams.maps.w);
    for (int c = 0; c < cams.maps.c; ++c) {
      const Grid2 b = binarize_cam(cams.maps.channel(c), a.rho);
      std::copy(b.v.begin(), b.v.end(), bin.plane(c));
    }
    write_tensor(a.binarized_out, tensor_from(bin));
  }
}

struct CombineArgs {
  std::string pf, cams, out;
  std::vector<int> present;
  double alpha = 0.5, rho = 0.2;
};

void run_combine(const CombineArgs& a) {
  const ForegroundMap pf{grid2_from(read_tensor(a.pf))};
  ProbMaps probs;
  if (a.cams.empty()) {
    if (!a.present.empty()) throw std::invalid_argument("--present needs --cams");
    probs = fgbg_to_probmaps(pf);
  } else {
    CamStack cams{grid3_from(read_tensor(a.cams))};
    if (!a.present.empty()) {
      // Keep only the listed classes' maps: the output channels become
      // background plus the listed classes, in the order given.
      Grid3 kept(static_cast<int>(a.present.size()), cams.maps.h, cams.maps.w);
      const int n = cams.maps.plane_size();
      for (size_t t = 0; t < a.present.size(); ++t) {
        const int cls = a.present[t];
        if (cls < 1 || cls > cams.maps.c)
          throw std::invalid_argument("--present: class " + std::to_string(cls) +
                                      " outside 1.." + std::to_string(cams.maps.c));
        std::copy_n(cams.maps.v.begin() + static_cast<size_t>(cls - 1) * n, n,
                    kept.v.begin() + static_cast<size_t>(t) * n);
      }
      cams.maps = std::move(kept);
    }
    probs = combine_multiclass(pf, cams, a.alpha, a.rho);
  }
  write_tensor(a.out, tensor_from(probs.p));
}

struct CrfArgs {
  std::string probs, image, out_labels, out_marginals, regions;
  std::string unary_mode = "softmax";
  PairwiseParams pp;
  int iters = 10;
  double theta_max = kDefaultThetaMax;
  double region_floor = kRegionProbFloor;
  bool approx = false;
};

void run_crf(const CrfArgs& a) {
  const ProbMaps probs{grid3_from(read_tensor(a.probs))};
  const Grid3 image = read_ppm(a.image);
  const UnaryField unary =
      unary_from_probs(probs, a.unary_mode == "neg-log" ? UnaryMode::neg_log
                                                        : UnaryMode::softmax_log);
  RegionPartition regions;
  RegionCosts costs;
  const RegionPartition* rp = nullptr;
  const RegionCosts* rc = nullptr;
  if (!a.regions.empty()) {
    regions = read_regions_pgm(a.regions);
    costs = region_costs(probs, regions, a.theta_max, a.region_floor);
    rp = &regions;
    rc = &costs;
  }
  InferOptions opt;
  opt.iters = a.iters;
  opt.approximate = a.approx;
  const Marginals marg = mean_field_infer(unary, image, a.pp, rp, rc, opt);
  write_pgm_labels(a.out_labels, map_labeling(marg));
  if (!a.out_marginals.empty()) write_tensor(a.out_marginals, tensor_from(marg.q));
}

struct LossArgs {
  std::string scores, tags, variant, mask, masks_dir, grad_out;
  double r = kDefaultLseSharpness;
};

void run_loss(const LossArgs& a) {
  const Grid3 scores = grid3_from(read_tensor(a.scores));
  const TagSet tags = read_tags(a.tags, scores.c - 1);
  const LossVariant variant = parse_variant(a.variant);
  MaskSet masks;
  if (variant == LossVariant::fgbg) {
    if (a.mask.empty()) throw DimensionError("fgbg variant needs --mask");
    masks.fg = read_pgm_mask(a.mask);
  } else if (variant == LossVariant::multiclass) {
    if (a.masks_dir.empty()) throw DimensionError("multiclass variant needs --masks");
    for (int k = 0; k <= tags.class_count; ++k) {
      const std::string p = indexed(a.masks_dir, "mask", k, "pgm");
      if (fs::exists(p)) masks.per_class.emplace(k, read_pgm_mask(p));
    }
  }
  const LossResult res = loss_grad(variant, scores, tags, &masks, a.r);
  if (!std::isfinite(res.value)) throw NumericError("loss came out non-finite");
  std::printf("loss=%.17g\n", res.value);
  if (!a.grad_out.empty()) write_tensor(a.grad_out, tensor_from(res.grad));
}

struct SynthArgs {
  std::string out;
  uint64_t seed = 0;
  int count = 1;
  SynthConfig cfg;
  int region_cell = 12;
};

void run_synth(const SynthArgs& a) {
  if (a.count < 1) throw DimensionError("--count must be >= 1");
  fs::create_directories(a.out);
  Rng seeder(a.seed);
  for (int i = 0; i < a.count; ++i) {
    const SynthScene sc = synth_scene(seeder.next_u64(), a.cfg);
    write_ppm(indexed(a.out, "image", i, "ppm"), sc.image);
    write_pgm_labels(indexed(a.out, "gt", i, "pgm"), sc.gt);
    write_tags(indexed(a.out, "tags", i, "txt"), sc.tags);
    write_tensor(indexed(a.out, "conv4", i, "tsr"), tensor_from(sc.conv4));
    write_tensor(indexed(a.out, "conv5", i, "tsr"), tensor_from(sc.conv5));
    write_tensor(indexed(a.out, "camfeat", i, "tsr"), tensor_from(sc.cam_features));
    Tensor wt;
    wt.dims = {static_cast<uint32_t>(sc.cam_weights.classes),
               static_cast<uint32_t>(sc.cam_weights.units)};
    wt.v = sc.cam_weights.w;
    write_tensor(indexed(a.out, "camw", i, "tsr"), wt);
    write_regions_pgm(indexed(a.out, "regions", i, "pgm"), make_regions(sc.gt, a.region_cell));
  }
}

std::vector<SynthScene> load_dataset(const std::string& dir) {
  std::vector<SynthScene> scenes;
  for (int i = 0;; ++i) {
    const std::string img = indexed(dir, "image", i, "ppm");
    if (!fs::exists(img)) break;
    SynthScene sc;
    sc.image = read_ppm(img);
    sc.gt = read_pgm_labels(indexed(dir, "gt", i, "pgm"));
    sc.conv4 = grid3_from(read_tensor(indexed(dir, "conv4", i, "tsr")));
    sc.conv5 = grid3_from(read_tensor(indexed(dir, "conv5", i, "tsr")));
    sc.cam_features = grid3_from(read_tensor(indexed(dir, "camfeat", i, "tsr")));
    const Tensor wt = read_tensor(indexed(dir, "camw", i, "tsr"));
    if (wt.dims.size() != 2) throw FormatError("camw: expected a rank-2 tensor");
    sc.cam_weights = CamWeights(static_cast<int>(wt.dims[0]), static_cast<int>(wt.dims[1]));
    sc.cam_weights.w = wt.v;
    sc.tags = read_tags(indexed(dir, "tags", i, "txt"), sc.cam_weights.classes);
    scenes.push_back(std::move(sc));
  }
  if (scenes.empty()) throw FormatError(dir + ": no scenes found (image_0000.ppm missing)");
  return scenes;
}

struct TrainArgs {
  std::string data, variant, out, pred_out;
  TrainConfig cfg;
  uint64_t seed = 0;
};

void run_train(TrainArgs a) {
  a.cfg.variant = parse_variant(a.variant);
  a.cfg.seed = a.seed;
  const std::vector<SynthScene> scenes = load_dataset(a.data);
  const TrainResult res = train_head(scenes, a.cfg);

  // Parameter file: one row per label, weights then bias in the last column.
  Tensor t;
  t.dims = {static_cast<uint32_t>(res.params.labels), static_cast<uint32_t>(res.params.feats + 1)};
  for (int l = 0; l < res.params.labels; ++l) {
    for (int f = 0; f < res.params.feats; ++f) t.v.push_back(res.params.wat(l, f));
    t.v.push_back(res.params.b[l]);
  }
  write_tensor(a.out, t);

  if (!a.pred_out.empty()) {
    fs::create_directories(a.pred_out);
    for (size_t i = 0; i < scenes.size(); ++i) {
      const Grid3 s = predict(res.params, build_features(scenes[i]));
      LabelMap lm(s.h, s.w);
      const int n = s.plane_size();
      for (int px = 0; px < n; ++px) {
        int best = 0;
        for (int l = 1; l < s.c; ++l)
          if (s.v[static_cast<size_t>(l) * n + px] > s.v[static_cast<size_t>(best) * n + px])
            best = l;
        lm.label[px] = best;
      }
      write_pgm_labels(indexed(a.pred_out, "pred", static_cast<int>(i), "pgm"), lm);
    }
  }
  for (size_t e = 0; e < res.epoch_loss.size(); ++e)
    std::printf("epoch %zu loss %.17g\n", e, res.epoch_loss[e]);
}

struct EvalArgs {
  std::string pred, gt, csv_out;
  int classes = 0;
  int trimap_band = 0;
  bool confusion_out = false;
};

// All .pgm files in dir; when some share the given basename prefix, only those,
// so a dataset directory holding gt_* next to regions_* pairs up cleanly.
std::vector<std::string> pgm_files(const std::string& dir, const std::string& prefix) {
  std::vector<std::string> files, preferred;
  if (!fs::is_directory(dir)) throw FormatError(dir + ": not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".pgm") continue;
    files.push_back(e.path().string());
    if (e.path().filename().string().rfind(prefix, 0) == 0)
      preferred.push_back(e.path().string());
  }
  if (!preferred.empty()) files = std::move(preferred);
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError(dir + ": no .pgm files");
  return files;
}

void run_eval(const EvalArgs& a) {
  const std::vector<std::string> pred_files = pgm_files(a.pred, "pred");
  const std::vector<std::string> gt_files = pgm_files(a.gt, "gt");
  if (pred_files.size() != gt_files.size())
    throw DimensionError("eval: prediction and ground-truth counts differ");
  std::vector<LabelMap> pred, gt;
  int max_label = 0;
  for (size_t i = 0; i < pred_files.size(); ++i) {
    pred.push_back(read_pgm_labels(pred_files[i]));
    gt.push_back(read_pgm_labels(gt_files[i]));
    for (int lab : pred.back().label) max_label = std::max(max_label, lab);
    for (int lab : gt.back().label) max_label = std::max(max_label, lab);
  }
  const int classes = a.classes > 0 ? a.classes : max_label;

  const IoUReport rep = iou(pred, gt, classes);
  std::printf("%-8s %10s\n", "label", "iou");
  for (int l = 0; l <= classes; ++l) {
    if (rep.per_class[l])
      std::printf("%-8d %10.6f\n", l, *rep.per_class[l]);
    else
      std::printf("%-8d %10s\n", l, "n/a");
  }
  std::printf("%-8s %10.6f  (over %d labels)\n", "mean", rep.mean_iou, rep.evaluated);

  bool have_trimap = false;
  double trimap = 0.0;
  if (a.trimap_band > 0) {
    TrimapCounts agg;
    for (size_t i = 0; i < pred.size(); ++i) {
      const TrimapCounts c = trimap_counts(pred[i], gt[i], a.trimap_band);
      agg.correct += c.correct;
      agg.total += c.total;
    }
    if (agg.total > 0) {
      have_trimap = true;
      trimap = static_cast<double>(agg.correct) / static_cast<double>(agg.total);
      std::printf("trimap(band=%d) %10.6f\n", a.trimap_band, trimap);
    } else {
      std::printf("trimap(band=%d) undefined (no boundary pixels)\n", a.trimap_band);
    }
  }

  ConfusionMatrix cm;
  if (a.confusion_out) {
    cm = confusion(pred, gt, classes);
    std::printf("confusion (rows = ground truth, cols = prediction)\n%8s", "");
    for (int c = 0; c <= classes; ++c) std::printf(" %10d", c);
    std::printf("\n");
    for (int g = 0; g <= classes; ++g) {
      std::printf("%8d", g);
      for (int c = 0; c <= classes; ++c) std::printf(" %10" PRId64, cm.at(g, c));
      std::printf("\n");
    }
  }

  if (!a.csv_out.empty()) {
    std::string csv = "metric,label,value\n";
    char line[128];
    for (int l = 0; l <= classes; ++l)
      if (rep.per_class[l]) {
        std::snprintf(line, sizeof line, "iou,%d,%.9f\n", l, *rep.per_class[l]);
        csv += line;
      } else {
        std::snprintf(line, sizeof line, "iou,%d,\n", l);
        csv += line;
      }
    std::snprintf(line, sizeof line, "mean_iou,,%.9f\n", rep.mean_iou);
    csv += line;
    if (have_trimap) {
      std::snprintf(line, sizeof line, "trimap_accuracy,,%.9f\n", trimap);
      csv += line;
    }
    if (a.confusion_out)
      for (int g = 0; g <= classes; ++g)
        for (int c = 0; c <= classes; ++c) {
          std::snprintf(line, sizeof line, "confusion,%d:%d,%" PRId64 "\n", g, c, cm.at(g, c));
          csv += line;
        }
    std::FILE* f = std::fopen(a.csv_out.c_str(), "wb");
    if (!f) throw FormatError("cannot open " + a.csv_out + " for writing");
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly-supervised segmentation pipeline"};
  app.require_subcommand(1);
  // --h/--w are image dims in several subcommands, so help is --help only.
  app.set_help_flag("--help", "Print help");
  const auto sub = [&app](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->set_help_flag("--help", "Print help");
    return s;
  };

  FuseArgs fuse_args;
  auto* fuse = sub("fuse", "Fuse two activation stacks into a foreground prior");
  fuse->add_option("--conv4", fuse_args.conv4)->required();
  fuse->add_option("--conv5", fuse_args.conv5)->required();
  fuse->add_option("--out", fuse_args.out)->required();
  fuse->add_option("--h", fuse_args.h, "Output height (default: conv4 height)");
  fuse->add_option("--w", fuse_args.w, "Output width (default: conv4 width)");

  CamArgs cam_args;
  auto* cam = sub("cam", "Class activation maps from unit maps and weights");
  cam->add_option("--features", cam_args.features)->required();
  cam->add_option("--weights", cam_args.weights)->required();
  cam->add_option("--out", cam_args.out)->required();
  cam->add_option("--rho", cam_args.rho, "Threshold fraction for --binarized-out");
  cam->add_option("--binarized-out", cam_args.binarized_out);
  cam->add_option("--h", cam_args.h, "Resample maps to this height");
  cam->add_option("--w", cam_args.w, "Resample maps to this width");

  CombineArgs comb_args;
  auto* comb = sub("combine", "Blend the prior with class maps into label maps");
  comb->add_option("--pf", comb_args.pf)->required();
  comb->add_option("--cams", comb_args.cams, "Omit to emit two-channel bg/fg maps");
  comb->add_option("--out", comb_args.out)->required();
  comb->add_option("--alpha", comb_args.alpha);
  comb->add_option("--rho", comb_args.rho);
  comb->add_option("--present", comb_args.present,
                   "Class ids present in the image; other maps are dropped and the "
                   "output channels become background plus these classes in order")
      ->delimiter(',');

  CrfArgs crf_args;
  auto* crf = sub("crf", "Mean-field inference over a dense pairwise model");
  crf->add_option("--probs", crf_args.probs)->required();
  crf->add_option("--image", crf_args.image)->required();
  crf->add_option("--out-labels", crf_args.out_labels)->required();
  crf->add_option("--out-marginals", crf_args.out_marginals);
  crf->add_option("--regions", crf_args.regions);
  crf->add_option("--iters", crf_args.iters);
  crf->add_option("--w-app", crf_args.pp.w_app);
  crf->add_option("--theta-a", crf_args.pp.theta_alpha);
  crf->add_option("--theta-b", crf_args.pp.theta_beta);
  crf->add_option("--w-smooth", crf_args.pp.w_smooth);
  crf->add_option("--theta-g", crf_args.pp.theta_gamma);
  crf->add_option("--theta-max", crf_args.theta_max);
  crf->add_option("--region-floor", crf_args.region_floor);
  crf->add_option("--unary", crf_args.unary_mode)
      ->check(CLI::IsMember({"softmax", "neg-log"}));
  crf->add_flag("--approx", crf_args.approx, "Truncated sliding-window kernels");

  LossArgs loss_args;
  auto* loss = sub("loss", "Weak-supervision loss and gradient");
  loss->add_option("--scores", loss_args.scores)->required();
  loss->add_option("--tags", loss_args.tags)->required();
  loss->add_option("--variant", loss_args.variant)
      ->required()
      ->check(CLI::IsMember({"weak", "fgbg", "multiclass"}));
  loss->add_option("--mask", loss_args.mask, "Foreground mask (fgbg variant)");
  loss->add_option("--masks", loss_args.masks_dir, "Directory of mask_<k>.pgm (multiclass)");
  loss->add_option("--grad-out", loss_args.grad_out);
  loss->add_option("--r", loss_args.r, "Pooling sharpness");

  SynthArgs synth_args;
  auto* synth = sub("synth", "Generate synthetic desk scenes");
  synth->add_option("--seed", synth_args.seed)->required();
  synth->add_option("--count", synth_args.count)->required();
  synth->add_option("--out", synth_args.out)->required();
  synth->add_option("--h", synth_args.cfg.h);
  synth->add_option("--w", synth_args.cfg.w);
  synth->add_option("--classes", synth_args.cfg.classes);
  synth->add_option("--max-objects", synth_args.cfg.max_objects);
  synth->add_option("--region-cell", synth_args.region_cell);

  TrainArgs train_args;
  auto* train = sub("train", "Train the linear head on generated scenes");
  train->add_option("--data", train_args.data)->required();
  train->add_option("--variant", train_args.variant)
      ->required()
      ->check(CLI::IsMember({"weak", "fgbg", "multiclass"}));
  train->add_option("--epochs", train_args.cfg.epochs)->required();
  train->add_option("--seed", train_args.seed)->required();
  train->add_option("--out", train_args.out)->required();
  train->add_option("--lr", train_args.cfg.lr);
  train->add_option("--momentum", train_args.cfg.momentum);
  train->add_option("--decay", train_args.cfg.decay);
  train->add_option("--r", train_args.cfg.r);
  train->add_option("--alpha", train_args.cfg.alpha);
  train->add_option("--rho", train_args.cfg.rho);
  train->add_option("--iters", train_args.cfg.crf_iters);
  train->add_option("--theta-max", train_args.cfg.theta_max);
  train->add_option("--region-cell", train_args.cfg.region_cell);
  train->add_flag("--higher-order", train_args.cfg.higher_order,
                  "Add region consistency terms during mask generation");
  train->add_option("--pred-out", train_args.pred_out,
                    "Write per-scene argmax label maps after training");

  EvalArgs eval_args;
  auto* eval = sub("eval", "Score predicted label maps against ground truth");
  eval->add_option("--pred", eval_args.pred)->required();
  eval->add_option("--gt", eval_args.gt)->required();
  eval->add_option("--classes", eval_args.classes, "Default: highest label seen");
  eval->add_option("--trimap-band", eval_args.trimap_band);
  eval->add_flag("--confusion", eval_args.confusion_out);
  eval->add_option("--csv-out", eval_args.csv_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fuse->parsed()) run_fuse(fuse_args);
    if (cam->parsed()) run_cam(cam_args);
    if (comb->parsed()) run_combine(comb_args);
    if (crf->parsed()) run_crf(crf_args);
    if (loss->parsed()) run_loss(loss_args);
    if (synth->parsed()) run_synth(synth_args);
    if (train->parsed()) run_train(train_args);
    if (eval->parsed()) run_eval(eval_args);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
