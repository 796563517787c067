/* Copyright 2026 The bayesseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bayesseg/curriculum.hpp"
#include "bayesseg/evaluate.hpp"
#include "bayesseg/harness.hpp"
#include "bayesseg/inference.hpp"
#include "bayesseg/io.hpp"
#include "bayesseg/synth.hpp"
#include "bayesseg/train.hpp"
#include "bayesseg/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace bayesseg;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kInvalidConfig = 3,
  kMissingFile = 4,
  kBadFormat = 5,
  kRuntimeFailure = 6,
};

/// Every setting a command may read. Defaults follow the library defaults.
struct Settings {
  std::uint64_t seed = 0;
  int tile_size = 160;
  int stride = 10;
  int mc_samples = 10;
  double threshold = 0.5;
  double sigma = 0.4;
  int stages = 2;
  std::string loss = "ce";
  int folds = 5;
  int jobs = 1;
  std::string out = ".";

  int depth = 4;
  int base_channels = 16;
  double dropout = 0.5;
  int epochs = 10;
  int batch_size = 12;
  double lr = 1e-4;
  double lr_curriculum = 1e-6;
  double lambda = 1.0;
  std::string normalization = "analytic";
  int min_step = 1;
  double stop_epsilon = 0.001;

  // synth
  int images = 12;
  int width = 512;
  int height = 384;

  // per-command inputs
  std::string data, model, image, pmap, umap, method = "baseline";
  int fold = 0;
  bool all_images = false;
  std::vector<std::string> run_dirs;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

NetConfig net_config(const Settings& s) {
  NetConfig n;
  n.depth = s.depth;
  n.base_channels = s.base_channels;
  n.dropout_rate = s.dropout;
  n.tile_size = s.tile_size;
  require(s.dropout > 0.0 && s.dropout < 1.0, "--dropout must lie strictly between 0 and 1");
  n.validate();
  return n;
}

TrainConfig train_config(const Settings& s) {
  require(s.lr > 0.0, "--lr must be > 0");
  require(s.lr_curriculum > 0.0, "--lr-curriculum must be > 0");
  require(s.epochs >= 1, "--epochs must be >= 1");
  TrainConfig t;
  t.lr_stage1 = s.lr;
  t.lr_curriculum = s.lr_curriculum;
  t.batch_size = s.batch_size;
  t.epochs_per_stage = s.epochs;
  t.seed = s.seed;
  t.loss_kind = parse_loss_kind(s.loss);
  t.loss_params.uncertainty_lambda = s.lambda;
  t.validate();
  return t;
}

InferenceConfig inference_config(const Settings& s, int tile_size) {
  InferenceConfig c;
  c.tile_size = tile_size;
  c.stride = s.stride;
  c.mc_samples = s.mc_samples;
  c.seed = s.seed;
  c.jobs = s.jobs;
  c.normalization = parse_normalization(s.normalization);
  c.threshold = s.threshold;
  c.validate();
  return c;
}

CurriculumConfig curriculum_config(const Settings& s, int tile_size) {
  CurriculumConfig c;
  c.tile_size = tile_size;
  c.sigma = s.sigma;
  c.max_stages = s.stages;
  c.min_step = s.min_step;
  c.stop_epsilon = s.stop_epsilon;
  c.validate();
  return c;
}

/// Tile size of a loaded model; an explicit --tile-size must agree with it.
int model_tile_size(const ModelState& model, const CLI::App& app) {
  if (app.count("--tile-size") > 0) {
    require(app.get_option("--tile-size")->as<int>() == model.config.tile_size,
            "--tile-size differs from the model's tile size " + std::to_string(model.config.tile_size));
  }
  return model.config.tile_size;
}

std::vector<LabeledImage> pick(const std::vector<LabeledImage>& all, const std::vector<std::string>& ids) {
  std::vector<LabeledImage> out;
  for (const auto& id : ids) {
    for (const auto& im : all) {
      if (im.id == id) out.push_back(im);
    }
  }
  return out;
}

struct FoldData {
  FoldSplit split;
  std::vector<LabeledImage> train, val, test;
};

FoldData fold_data(const Settings& s) {
  const auto all = load_dataset(s.data);
  std::vector<std::string> ids;
  for (const auto& im : all) ids.push_back(im.id);
  const auto splits = kfold_split(ids, s.folds, s.seed);
  require(s.fold >= 0 && s.fold < static_cast<int>(splits.size()), "--fold must lie in [0, folds)");
  FoldData f{splits[static_cast<std::size_t>(s.fold)], {}, {}, {}};
  check_no_leakage(f.split);
  f.train = pick(all, f.split.train_ids);
  f.val = pick(all, f.split.val_ids);
  f.test = pick(all, f.split.test_ids);
  return f;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_synth(const Settings& s) {
  SynthConfig cfg;
  cfg.width = s.width;
  cfg.height = s.height;
  cfg.n_images = s.images;
  cfg.seed = s.seed;
  const auto images = generate(cfg);
  const auto manifest = save_dataset(s.out, images, cfg);
  std::cout << "wrote " << images.size() << " images, manifest " << manifest.string() << "\n";
  return kOk;
}

int cmd_train(const Settings& s) {
  const auto net = net_config(s);
  TrainConfig tcfg = train_config(s);
  const auto f = fold_data(s);
  const auto fold = static_cast<std::uint64_t>(s.fold);
  const ModelState init = ModelState::initialize(net, derive_seed(s.seed, fold));
  tcfg.seed = derive_seed(s.seed, 1000 + fold);
  InferenceConfig icfg = inference_config(s, net.tile_size);
  icfg.seed = derive_seed(s.seed, 2000 + fold);

  std::ostringstream log;
  log << "TRAINLOG1 loss=" << to_string(tcfg.loss_kind) << "\n";
  TrainHooks hooks;
  hooks.on_epoch = [&](int epoch, double train_loss, double val_loss) {
    log << "epoch=" << epoch << " train_loss=" << format_metric(train_loss) << " val_loss=" << format_metric(val_loss)
        << "\n";
    std::clog << "epoch " << epoch << ": train " << train_loss << " val " << val_loss << "\n";
  };
  ModelState model;
  if (tcfg.loss_kind == LossKind::kUncertainty) {
    model = train_method2(init, f.train, f.val, tcfg, icfg, &hooks);
  } else {
    model = train_stage(init, grid_tiles(f.train, icfg.tile_size, icfg.stride),
                        grid_tiles(f.val, icfg.tile_size, icfg.stride), tcfg, tcfg.lr_stage1, &hooks);
  }
  const fs::path out(s.out);
  save_model(out / "model.bnet", model);
  write_file_atomic(out / "split.txt", encode_split(f.split));
  write_file_atomic(out / "train_log.txt", log.str());
  std::cout << "best val_loss " << format_metric(model.val_loss_best) << ", model " << (out / "model.bnet").string()
            << "\n";
  return kOk;
}

int cmd_predict(const Settings& s, const CLI::App& app) {
  const ModelState model = load_model(s.model);
  const auto icfg = inference_config(s, model_tile_size(model, app));
  const LargeImage image = load_image_pgm(s.image);
  const Prediction p = analyze_image(model, image, icfg);
  const fs::path out(s.out);
  const std::string name = stem(s.image);
  save_pmap(out / (name + ".pmap"), p.pmap);
  save_labels_pgm(out / (name + "_labels.pgm"), p.labels);
  save_umap(out / (name + ".umap"), p.umap);
  save_mask_pgm(out / (name + "_mask.pgm"), p.mask);
  std::cout << "wrote " << name << ".pmap, " << name << "_labels.pgm, " << name << ".umap, " << name
            << "_mask.pgm\n";
  return kOk;
}

int cmd_uncertainty(const Settings& s) {
  const ProbabilityMap pmap = load_pmap(s.pmap);
  const auto mode = parse_normalization(s.normalization);
  const UncertaintyMap umap = uncertainty_map(pmap, mode);
  const CertaintyMask mask = threshold(umap, s.threshold);
  const fs::path out(s.out);
  const std::string name = stem(s.pmap);
  save_umap(out / (name + ".umap"), umap);
  save_mask_pgm(out / (name + "_mask.pgm"), mask);
  save_uncertainty_pgm(out / (name + "_uncertainty.pgm"), umap);
  std::cout << "wrote " << name << ".umap, " << name << "_mask.pgm, " << name << "_uncertainty.pgm\n";
  return kOk;
}

int cmd_plan(const Settings& s) {
  const UncertaintyMap umap = load_umap(s.umap);
  const auto plan = build_plan(umap, curriculum_config(s, s.tile_size), stem(s.umap), s.stages);
  const fs::path path = fs::path(s.out) / (stem(s.umap) + "_plan.txt");
  write_file_atomic(path, encode_plan(plan));
  std::cout << plan.tiles.size() << " tiles, plan " << path.string() << "\n";
  return kOk;
}

int cmd_curriculum(const Settings& s, const CLI::App& app) {
  const ModelState stage1 = load_model(s.model);
  const int d = model_tile_size(stage1, app);
  TrainConfig tcfg = train_config(s);
  const auto fold = static_cast<std::uint64_t>(s.fold);
  tcfg.seed = derive_seed(s.seed, 1000 + fold);
  InferenceConfig icfg = inference_config(s, d);
  icfg.seed = derive_seed(s.seed, 2000 + fold);
  const auto ccfg = curriculum_config(s, d);
  require(ccfg.max_stages >= 2, "--stages must be >= 2 for a curriculum run");
  require(tcfg.loss_kind != LossKind::kUncertainty, "the curriculum does not use the uncertainty loss");
  const auto f = fold_data(s);

  CurriculumHooks hooks;
  hooks.on_stage = [](const StageRecord& r) {
    std::clog << "stage " << r.stage << ": val UA " << format_metric(r.validation.ua, 4) << "\n";
  };
  const auto result = run_curriculum(stage1, f.train, f.val, ccfg, tcfg, icfg, &hooks);
  const fs::path out(s.out);
  save_model(out / "model.bnet", result.model);
  write_file_atomic(out / "history.txt", encode_history(result));
  for (const auto& plan : result.plans) {
    write_file_atomic(out / "plans" / ("plan_" + plan.source_image_id + ".txt"), encode_plan(plan));
  }
  std::cout << "best stage " << result.best_stage << " of " << result.history.size() << ", model "
            << (out / "model.bnet").string() << "\n";
  return kOk;
}

int cmd_evaluate(const Settings& s, const CLI::App& app) {
  const ModelState model = load_model(s.model);
  InferenceConfig icfg = inference_config(s, model_tile_size(model, app));
  std::vector<LabeledImage> images;
  if (s.all_images) {
    images = load_dataset(s.data);
  } else {
    images = fold_data(s).test;
    icfg.seed = derive_seed(s.seed, 2000 + static_cast<std::uint64_t>(s.fold));
  }
  const auto report = evaluate_images(model, images, icfg);
  write_file_atomic(fs::path(s.out) / "report.txt", encode_report(report));
  std::cout << "NPV " << format_metric(report.npv, 4) << " TPR " << format_metric(report.tpr, 4) << " UA "
            << format_metric(report.ua, 4) << " IoU " << format_metric(report.mean_iou, 4) << "\n";
  return kOk;
}

int cmd_table(const Settings& s) {
  if (!s.run_dirs.empty()) {
    std::string out = table_header() + "\n";
    for (const auto& dir : s.run_dirs) {
      const std::string text = read_file(fs::path(dir) / "table.txt");
      const auto nl = text.find('\n');
      if (nl == std::string::npos || text.rfind("Method", 0) != 0) {
        throw FormatError(dir + "/table.txt: not a results table");
      }
      out += text.substr(nl + 1);
    }
    std::cout << out;
    return kOk;
  }
  require(!s.data.empty(), "table needs --data to run an experiment, or run directories to collect");
  ExperimentSpec spec;
  spec.method = parse_method(s.method);
  spec.loss_kind = parse_loss_kind(s.loss);
  spec.stages = spec.method == Method::kCurriculum ? s.stages : 1;
  spec.folds = s.folds;
  spec.seed = s.seed;
  spec.net = net_config(s);
  spec.train = train_config(s);
  spec.inference = inference_config(s, s.tile_size);
  spec.curriculum = curriculum_config(s, s.tile_size);
  spec.validate();
  const auto data = load_dataset(s.data);
  RunOptions opts;
  opts.out_root = fs::path(s.out);
  opts.verbose = true;
  const auto result = run_experiment(spec, data, opts);
  std::cout << table_header() << "\n" << table_row(spec, result.summary) << "\n";
  std::clog << "run directory " << result.run_dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-driven curriculum training for Bayesian segmentation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read settings from a key = value file");
  Settings s;

  app.add_option("--seed", s.seed, "Base seed")->capture_default_str();
  app.add_option("--tile-size", s.tile_size, "Tile side d in pixels")->capture_default_str();
  app.add_option("--stride", s.stride, "Sliding-window stride s")->capture_default_str();
  app.add_option("--mc-samples", s.mc_samples, "Monte Carlo dropout passes T")->capture_default_str();
  app.add_option("--threshold", s.threshold, "Uncertainty threshold H_T")->capture_default_str();
  app.add_option("--sigma", s.sigma, "Width of the Gaussian step rule")->capture_default_str();
  app.add_option("--stages", s.stages, "Curriculum stages including the first")->capture_default_str();
  app.add_option("--loss", s.loss, "Loss")
      ->check(CLI::IsMember({"ce", "dice", "ss", "ce+dice", "uncertainty"}, CLI::ignore_case))
      ->capture_default_str();
  app.add_option("--folds", s.folds, "Cross-validation folds")->capture_default_str();
  app.add_option("--jobs", s.jobs, "Concurrent tile predictions")->capture_default_str();
  app.add_option("--out", s.out, "Output directory")->capture_default_str();
  app.add_option("--depth", s.depth, "Encoder levels")->capture_default_str();
  app.add_option("--base-channels", s.base_channels, "Channels of the first level")->capture_default_str();
  app.add_option("--dropout", s.dropout, "Dropout rate")->capture_default_str();
  app.add_option("--epochs", s.epochs, "Epochs per stage")->capture_default_str();
  app.add_option("--batch-size", s.batch_size, "Minibatch size")->capture_default_str();
  app.add_option("--lr", s.lr, "Learning rate of the first stage")->capture_default_str();
  app.add_option("--lr-curriculum", s.lr_curriculum, "Learning rate of curriculum stages")->capture_default_str();
  app.add_option("--lambda", s.lambda, "Weight of the uncertainty loss term")->capture_default_str();
  app.add_option("--normalization", s.normalization, "Entropy normalization")
      ->check(CLI::IsMember({"analytic", "empirical"}))
      ->capture_default_str();
  app.add_option("--min-step", s.min_step, "Smallest step of the scan")->capture_default_str();
  app.add_option("--stop-epsilon", s.stop_epsilon, "Stop when UA improves by less")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--images", s.images, "Number of images")->capture_default_str();
  synth->add_option("--width", s.width, "Image width")->capture_default_str();
  synth->add_option("--height", s.height, "Image height")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a model on one fold");
  train->add_option("--data", s.data, "Dataset manifest")->required();
  train->add_option("--fold", s.fold, "Fold index")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Predict one image");
  predict->add_option("--model", s.model, "Model file")->required();
  predict->add_option("--image", s.image, "Image PGM")->required();

  auto* uncertainty = app.add_subcommand("uncertainty", "Uncertainty map and mask of a probability map");
  uncertainty->add_option("--pmap", s.pmap, "Probability map")->required();

  auto* plan = app.add_subcommand("plan", "Curriculum tile plan of an uncertainty map");
  plan->add_option("--umap", s.umap, "Uncertainty map")->required();

  auto* curriculum = app.add_subcommand("curriculum", "Curriculum stages from a trained model");
  curriculum->add_option("--model", s.model, "Stage-1 model file")->required();
  curriculum->add_option("--data", s.data, "Dataset manifest")->required();
  curriculum->add_option("--fold", s.fold, "Fold index")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Reliability report of a model");
  evaluate->add_option("--model", s.model, "Model file")->required();
  evaluate->add_option("--data", s.data, "Dataset manifest")->required();
  evaluate->add_option("--fold", s.fold, "Evaluate the test images of this fold")->capture_default_str();
  evaluate->add_flag("--all", s.all_images, "Evaluate every image of the dataset");

  auto* table = app.add_subcommand("table", "Run a cross-validated experiment, or collect result rows");
  table->add_option("--data", s.data, "Dataset manifest");
  table->add_option("--method", s.method, "baseline, curriculum or method2")
      ->check(CLI::IsMember({"baseline", "curriculum", "method2"}))
      ->capture_default_str();
  table->add_option("runs", s.run_dirs, "Run directories to collect");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(s);
    if (*train) return cmd_train(s);
    if (*predict) return cmd_predict(s, app);
    if (*uncertainty) return cmd_uncertainty(s);
    if (*plan) return cmd_plan(s);
    if (*curriculum) return cmd_curriculum(s, app);
    if (*evaluate) return cmd_evaluate(s, app);
    if (*table) return cmd_table(s);
  } catch (const MissingFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingFile;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
