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

#include "bayesseg/synth.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "bayesseg/io.hpp"

namespace bayesseg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kWaves = 8;

struct Blob {
  double cx, cy, rx, ry, angle, wobble_phase;
  int wobble_lobes;
  std::uint8_t label;

  bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    const double r = std::sqrt(u * u + v * v);
    const double theta = std::atan2(v, u);
    return r < 1.0 + 0.15 * std::sin(wobble_lobes * theta + wobble_phase);
  }
};

}  // namespace

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("synth: image size must be positive");
  if (n_images < 1) throw std::invalid_argument("synth: n_images must be >= 1");
  if (blob_count_min < 2 || blob_count_max < blob_count_min) {
    throw std::invalid_argument("synth: blob counts need 2 <= min <= max");
  }
  if (!(blob_radius_min > 0.0) || !(blob_radius_max >= blob_radius_min) || !(blob_radius_max <= 0.5)) {
    throw std::invalid_argument("synth: degenerate blob radius range");
  }
  if (blob_radius_min * std::min(width, height) < 2.0) {
    throw std::invalid_argument("synth: blobs would be smaller than 2 pixels");
  }
  for (const auto& t : textures) {
    if (!(t.frequency > 0.0 && t.frequency <= 0.5)) throw std::invalid_argument("synth: frequency must be in (0, 0.5]");
    if (t.amplitude < 0.0 || t.noise < 0.0) throw std::invalid_argument("synth: negative texture amplitude");
  }
}

std::uint64_t image_seed(const SynthConfig& cfg, int index) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
}

LargeImage render_texture(const TextureParams& tex, int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  std::array<double, kWaves> fx{}, fy{}, phase{};
  for (int k = 0; k < kWaves; ++k) {
    const double f = tex.frequency * rng.uniform(0.8, 1.2);
    const double theta = rng.uniform(0.0, kTwoPi);
    fx[k] = kTwoPi * f * std::cos(theta);
    fy[k] = kTwoPi * f * std::sin(theta);
    phase[k] = rng.uniform(0.0, kTwoPi);
  }
  const double gain = tex.amplitude * std::sqrt(2.0 / kWaves);
  LargeImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (int k = 0; k < kWaves; ++k) v += std::cos(fx[k] * x + fy[k] * y + phase[k]);
      v = tex.mean + gain * v + tex.noise * rng.normal();
      out(x, y) = quantize_intensity(static_cast<float>(v));
    }
  }
  return out;
}

LabeledImage generate_one(const SynthConfig& cfg, int index) {
  cfg.validate();
  const std::uint64_t seed = image_seed(cfg, index);
  Rng rng(derive_seed(seed, 1));
  const double scale = std::min(cfg.width, cfg.height);
  const int n_blobs = static_cast<int>(rng.integer(cfg.blob_count_min, cfg.blob_count_max));
  std::vector<Blob> blobs;
  for (int b = 0; b < n_blobs; ++b) {
    Blob blob;
    blob.cx = rng.uniform(0.1, 0.9) * cfg.width;
    blob.cy = rng.uniform(0.1, 0.9) * cfg.height;
    blob.rx = rng.uniform(cfg.blob_radius_min, cfg.blob_radius_max) * scale;
    blob.ry = blob.rx * rng.uniform(0.6, 1.0);
    blob.angle = rng.uniform(0.0, kTwoPi);
    blob.wobble_phase = rng.uniform(0.0, kTwoPi);
    blob.wobble_lobes = static_cast<int>(rng.integer(2, 5));
    blob.label = b < 2 ? static_cast<std::uint8_t>(b) : static_cast<std::uint8_t>(rng.integer(kGood, kBad));
    blobs.push_back(blob);
  }

  std::array<LargeImage, 3> canvases;
  for (std::size_t c = 0; c < 3; ++c) {
    canvases[c] = render_texture(cfg.textures[c], cfg.width, cfg.height, derive_seed(seed, 10 + c));
  }

  char id[32];
  std::snprintf(id, sizeof id, "img%03d", index);
  LabeledImage out{id, LargeImage(cfg.width, cfg.height), LabelMap(cfg.width, cfg.height, kBackground)};
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      std::uint8_t label = kBackground;
      // Later blobs are drawn on top of earlier ones.
      for (const auto& blob : blobs) {
        if (blob.contains(x + 0.5, y + 0.5)) label = blob.label;
      }
      out.labels(x, y) = label;
      out.image(x, y) = canvases[label](x, y);
    }
  }
  return out;
}

std::vector<LabeledImage> generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(cfg.n_images));
  for (int i = 0; i < cfg.n_images; ++i) out.push_back(generate_one(cfg, i));
  return out;
}

LargeImage corrupt_region(const LargeImage& image, const Region& region, double amplitude, std::uint64_t seed,
                          const SynthConfig& cfg) {
  if (region.width < 1 || region.height < 1 || region.x0 < 0 || region.y0 < 0 ||
      region.x0 + region.width > image.width || region.y0 + region.height > image.height) {
    throw std::out_of_range("corrupt_region: region outside the image");
  }
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw std::invalid_argument("corrupt_region: amplitude must be in [0,1]");
  LargeImage out = image;
  if (amplitude == 0.0) return out;
  const auto good = render_texture(cfg.textures[kGood], region.width, region.height, derive_seed(seed, 1));
  const auto bad = render_texture(cfg.textures[kBad], region.width, region.height, derive_seed(seed, 2));
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      const double mix = 0.5 * (good(x, y) + bad(x, y));
      float& px = out(region.x0 + x, region.y0 + y);
      px = quantize_intensity(static_cast<float>((1.0 - amplitude) * px + amplitude * mix));
    }
  }
  return out;
}

std::filesystem::path save_dataset(const std::filesystem::path& dir, std::span<const LabeledImage> images,
                                   const SynthConfig& cfg) {
  std::ostringstream manifest;
  manifest << "DATASET1 " << images.size() << "\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& im = images[i];
    const std::string image_name = im.id + ".pgm";
    const std::string label_name = im.id + "_labels.pgm";
    save_image_pgm(dir / image_name, im.image);
    save_labels_pgm(dir / label_name, im.labels);
    manifest << im.id << " " << image_name << " " << label_name << " " << image_seed(cfg, static_cast<int>(i)) << "\n";
  }
  const auto path = dir / "manifest.txt";
  write_file_atomic(path, manifest.str());
  return path;
}

std::vector<LabeledImage> load_dataset(const std::filesystem::path& manifest) {
  const std::string text = read_file(manifest);
  const auto body = detail::header_end(text, "DATASET1 ");
  std::size_t count = 0;
  try {
    count = std::stoul(text.substr(9, body - 10));
  } catch (const std::logic_error&) {
    throw FormatError("DATASET1: bad image count");
  }
  std::istringstream in(text.substr(body));
  std::vector<LabeledImage> out;
  std::string line;
  const auto base = manifest.parent_path();
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string id, image, labels, seed;
    if (!(fields >> id >> image >> labels >> seed)) throw FormatError("DATASET1: malformed line '" + line + "'");
    LabeledImage im{id, load_image_pgm(base / image), load_labels_pgm(base / labels)};
    if (!im.image.same_shape(im.labels)) throw FormatError("DATASET1: image and labels of '" + id + "' differ in size");
    out.push_back(std::move(im));
  }
  if (out.size() != count) throw FormatError("DATASET1: manifest lists a different number of images");
  return out;
}

}  // namespace bayesseg
