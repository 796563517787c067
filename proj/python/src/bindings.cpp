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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "bayesseg/curriculum.hpp"
#include "bayesseg/evaluate.hpp"
#include "bayesseg/harness.hpp"
#include "bayesseg/io.hpp"
#include "bayesseg/metrics.hpp"
#include "bayesseg/synth.hpp"
#include "bayesseg/train.hpp"
#include "bayesseg/uncertainty.hpp"

namespace py = pybind11;
using namespace bayesseg;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Plane<T> to_plane(const Array<T>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array (height, width)");
  Plane<T> p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(p.data.data(), a.data(), p.data.size() * sizeof(T));
  return p;
}

template <typename T>
py::array_t<T> from_plane(const Plane<T>& p) {
  py::array_t<T> a({p.height, p.width});
  std::memcpy(a.mutable_data(), p.data.data(), p.data.size() * sizeof(T));
  return a;
}

LabelMap to_labels(const Array<std::uint8_t>& a) {
  LabelMap l;
  static_cast<Plane<std::uint8_t>&>(l) = to_plane(a);
  return l;
}

ProbabilityMap to_pmap(const Array<float>& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a 3-D array (height, width, classes)");
  ProbabilityMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)));
  std::memcpy(m.probs.data(), a.data(), m.probs.size() * sizeof(float));
  std::fill(m.coverage.begin(), m.coverage.end(), 1u);
  return m;
}

py::array_t<float> from_pmap(const ProbabilityMap& m) {
  py::array_t<float> a({m.height, m.width, m.num_classes});
  std::memcpy(a.mutable_data(), m.probs.data(), m.probs.size() * sizeof(float));
  return a;
}

std::vector<LabeledImage> to_images(const std::vector<py::tuple>& items) {
  std::vector<LabeledImage> out;
  for (const auto& t : items) {
    if (t.size() != 3) throw std::invalid_argument("images are (id, image, labels) tuples");
    out.push_back({t[0].cast<std::string>(), to_plane(t[1].cast<Array<float>>()),
                   to_labels(t[2].cast<Array<std::uint8_t>>())});
  }
  return out;
}

py::list from_images(const std::vector<LabeledImage>& images) {
  py::list out;
  for (const auto& im : images) out.append(py::make_tuple(im.id, from_plane(im.image), from_plane<std::uint8_t>(im.labels)));
  return out;
}

py::dict report_dict(const ReliabilityReport& r) {
  auto opt = [](const std::optional<double>& v) -> py::object {
    if (v) return py::float_(*v);
    return py::none();
  };
  py::dict d;
  d["tp"] = r.counts.tp;
  d["fp"] = r.counts.fp;
  d["tn"] = r.counts.tn;
  d["fn"] = r.counts.fn;
  d["npv"] = opt(r.npv);
  d["tpr"] = opt(r.tpr);
  d["ua"] = opt(r.ua);
  d["mean_iou"] = opt(r.mean_iou);
  py::list per_class;
  for (const auto& v : r.iou_per_class) per_class.append(opt(v));
  d["iou_per_class"] = per_class;
  return d;
}

InferenceConfig make_inference(int tile_size, int stride, int mc_samples, std::uint64_t seed, int jobs,
                               const std::string& normalization, double h_threshold) {
  InferenceConfig c;
  c.tile_size = tile_size;
  c.stride = stride;
  c.mc_samples = mc_samples;
  c.seed = seed;
  c.jobs = jobs;
  c.normalization = parse_normalization(normalization);
  c.threshold = h_threshold;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_bayesseg, m) {
  m.doc() = "Bayesian segmentation with uncertainty-driven curriculum training";

  py::register_exception<MissingFileError>(m, "MissingFileError", PyExc_FileNotFoundError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def(
      "build_grid",
      [](int width, int height, int d, int stride) {
        std::vector<std::tuple<int, int, int>> out;
        for (const auto& t : build_grid(width, height, d, stride).tiles) out.emplace_back(t.x0, t.y0, t.d);
        return out;
      },
      py::arg("width"), py::arg("height"), py::arg("tile_size"), py::arg("stride"),
      "Sliding-window tiles (x0, y0, d) in row-major order.");

  m.def(
      "argmax_labels", [](const Array<float>& pmap) { return from_plane<std::uint8_t>(argmax_labels(to_pmap(pmap))); },
      py::arg("pmap"));

  m.def(
      "entropy_map",
      [](const Array<float>& pmap) {
        const auto raw = entropy_map(to_pmap(pmap));
        py::array_t<double> a({raw.height, raw.width});
        std::memcpy(a.mutable_data(), raw.data.data(), raw.data.size() * sizeof(double));
        return a;
      },
      py::arg("pmap"), "Per-pixel predictive entropy (natural log).");
  m.def(
      "uncertainty_map",
      [](const Array<float>& pmap, const std::string& mode) {
        return from_plane(uncertainty_map(to_pmap(pmap), parse_normalization(mode)));
      },
      py::arg("pmap"), py::arg("normalization") = "analytic", "Normalized entropy in [0, 1].");
  m.def(
      "threshold",
      [](const Array<float>& umap, double h_threshold) {
        return from_plane<std::uint8_t>(threshold(to_plane(umap), h_threshold));
      },
      py::arg("umap"), py::arg("h_threshold") = 0.5, "1 where certain (value <= threshold), 0 elsewhere.");
  m.def(
      "tile_uncertainty",
      [](const Array<float>& umap, int x0, int y0, int d) { return tile_uncertainty(to_plane(umap), {x0, y0, d}); },
      py::arg("umap"), py::arg("x0"), py::arg("y0"), py::arg("tile_size"));

  m.def("step_size", &step_size, py::arg("h"), py::arg("tile_size"), py::arg("sigma") = 0.4, py::arg("min_step") = 1);
  m.def(
      "build_plan",
      [](const Array<float>& umap, int d, double sigma, int min_step) {
        CurriculumConfig cfg;
        cfg.tile_size = d;
        cfg.sigma = sigma;
        cfg.min_step = min_step;
        std::vector<std::tuple<int, int, int>> out;
        for (const auto& t : build_plan(to_plane(umap), cfg).tiles) out.emplace_back(t.x0, t.y0, t.d);
        return out;
      },
      py::arg("umap"), py::arg("tile_size"), py::arg("sigma") = 0.4, py::arg("min_step") = 1,
      "Uncertainty-driven tile scan (x0, y0, d).");

  m.def(
      "reliability",
      [](const Array<std::uint8_t>& pred, const Array<std::uint8_t>& truth, const Array<std::uint8_t>& mask,
         int num_classes) {
        ReliabilityAccumulator acc(num_classes);
        acc.add(to_labels(pred), to_labels(truth), to_plane(mask));
        return report_dict(acc.report());
      },
      py::arg("pred"), py::arg("truth"), py::arg("certain"), py::arg("num_classes") = 3,
      "Confusion counts with NPV, TPR, UA and IoU; undefined values are None.");

  m.def(
      "generate_dataset",
      [](int width, int height, int n_images, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.width = width;
        cfg.height = height;
        cfg.n_images = n_images;
        cfg.seed = seed;
        return from_images(generate(cfg));
      },
      py::arg("width") = 512, py::arg("height") = 384, py::arg("n_images") = 12, py::arg("seed") = 0,
      "List of (id, image float32 HxW, labels uint8 HxW).");
  m.def(
      "corrupt_region",
      [](const Array<float>& image, int x0, int y0, int width, int height, double amplitude, std::uint64_t seed) {
        return from_plane(corrupt_region(to_plane(image), {x0, y0, width, height}, amplitude, seed));
      },
      py::arg("image"), py::arg("x0"), py::arg("y0"), py::arg("width"), py::arg("height"), py::arg("amplitude"),
      py::arg("seed") = 0);

  m.def(
      "load_pmap", [](const std::filesystem::path& p) { return from_pmap(load_pmap(p)); }, py::arg("path"));
  m.def(
      "save_pmap", [](const std::filesystem::path& p, const Array<float>& a) { save_pmap(p, to_pmap(a)); },
      py::arg("path"), py::arg("pmap"));
  m.def(
      "load_umap", [](const std::filesystem::path& p) { return from_plane(load_umap(p)); }, py::arg("path"));
  m.def(
      "save_umap", [](const std::filesystem::path& p, const Array<float>& a) { save_umap(p, to_plane(a)); },
      py::arg("path"), py::arg("umap"));

  py::class_<ModelState>(m, "Model")
      .def_static(
          "initialize",
          [](int tile_size, int depth, int base_channels, double dropout, int num_classes, std::uint64_t seed) {
            NetConfig cfg;
            cfg.tile_size = tile_size;
            cfg.depth = depth;
            cfg.base_channels = base_channels;
            cfg.dropout_rate = dropout;
            cfg.num_classes = num_classes;
            return ModelState::initialize(cfg, seed);
          },
          py::arg("tile_size") = 160, py::arg("depth") = 4, py::arg("base_channels") = 16, py::arg("dropout") = 0.5,
          py::arg("num_classes") = 3, py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"))
      .def("save", [](const ModelState& self, const std::filesystem::path& p) { save_model(p, self); }, py::arg("path"))
      .def_property_readonly("tile_size", [](const ModelState& self) { return self.config.tile_size; })
      .def_property_readonly("num_params", [](const ModelState& self) { return self.params.size(); })
      .def_readonly("val_loss_best", &ModelState::val_loss_best)
      .def(
          "mc_predict",
          [](const ModelState& self, const Array<float>& tile, int samples, std::uint64_t seed, bool stochastic) {
            const auto plane = to_plane(tile);
            const std::vector<double> input(plane.data.begin(), plane.data.end());
            const PixelProbs p = mc_predict(self, input, samples, seed, stochastic);
            py::array_t<float> out({plane.height, plane.width, static_cast<int>(p.rows())});
            float* dst = out.mutable_data();
            for (Eigen::Index i = 0; i < p.size(); ++i) dst[i] = static_cast<float>(p.data()[i]);
            return out;
          },
          py::arg("tile"), py::arg("samples") = 10, py::arg("seed") = 0, py::arg("stochastic") = true,
          "Monte Carlo dropout predictive mean of one d x d tile, shape (d, d, C).")
      .def(
          "predict_image",
          [](const ModelState& self, const Array<float>& image, int stride, int mc_samples, std::uint64_t seed,
             int jobs) {
            const auto cfg = make_inference(self.config.tile_size, stride, mc_samples, seed, jobs, "analytic", 0.5);
            const auto img = to_plane(image);
            ProbabilityMap pmap;
            {
              py::gil_scoped_release release;
              pmap = predict_image(self, img, cfg);
            }
            return from_pmap(pmap);
          },
          py::arg("image"), py::arg("stride") = 10, py::arg("mc_samples") = 10, py::arg("seed") = 0,
          py::arg("jobs") = 1, "Stitched probability map of a whole image, shape (H, W, C).")
      .def(
          "evaluate",
          [](const ModelState& self, const std::vector<py::tuple>& images, int stride, int mc_samples,
             std::uint64_t seed, double h_threshold) {
            const auto cfg = make_inference(self.config.tile_size, stride, mc_samples, seed, 1, "analytic", h_threshold);
            return report_dict(evaluate_images(self, to_images(images), cfg));
          },
          py::arg("images"), py::arg("stride") = 10, py::arg("mc_samples") = 10, py::arg("seed") = 0,
          py::arg("h_threshold") = 0.5, "Pooled reliability report over (id, image, labels) tuples.");

  m.def(
      "train_stage",
      [](const ModelState& model, const std::vector<py::tuple>& train, const std::vector<py::tuple>& val,
         const std::string& loss, int epochs, double lr, int batch_size, int stride, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.loss_kind = parse_loss_kind(loss);
        if (cfg.loss_kind == LossKind::kUncertainty) {
          throw std::invalid_argument("use train_method2 for the uncertainty loss");
        }
        cfg.epochs_per_stage = epochs;
        cfg.lr_stage1 = lr;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        const int d = model.config.tile_size;
        const auto train_tiles = grid_tiles(to_images(train), d, stride);
        const auto val_tiles = grid_tiles(to_images(val), d, stride);
        py::gil_scoped_release release;
        return train_stage(model, train_tiles, val_tiles, cfg, lr);
      },
      py::arg("model"), py::arg("train"), py::arg("val"), py::arg("loss") = "ce", py::arg("epochs") = 10,
      py::arg("lr") = 1e-4, py::arg("batch_size") = 12, py::arg("stride") = 10, py::arg("seed") = 0,
      "Trains on sliding-window tiles and returns the lowest-validation-loss checkpoint.");

  m.def(
      "kfold_split",
      [](const std::vector<std::string>& ids, int k, std::uint64_t seed) {
        py::list out;
        for (const auto& s : kfold_split(ids, k, seed)) {
          py::dict d;
          d["train"] = s.train_ids;
          d["val"] = s.val_ids;
          d["test"] = s.test_ids;
          out.append(d);
        }
        return out;
      },
      py::arg("ids"), py::arg("k") = 5, py::arg("seed") = 0);
}
