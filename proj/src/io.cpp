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

#include "bayesseg/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bayesseg {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

namespace detail {

void append_f32(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

float read_f32(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

std::size_t header_end(std::string_view bytes, std::string_view magic) {
  if (bytes.substr(0, magic.size()) != magic) {
    throw FormatError("bad magic: expected '" + std::string(magic) + "'");
  }
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw FormatError("missing header terminator");
  return nl + 1;
}

}  // namespace detail

namespace {

// Reads the next whitespace-delimited PGM header token, skipping comments.
std::string pgm_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char ch = bytes[pos];
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  const auto start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw FormatError("truncated PGM header");
  return std::string(bytes.substr(start, pos - start));
}

int parse_positive(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("invalid ") + what + " '" + tok + "'");
  }
}

int maxval_of(std::string_view bytes) {
  std::size_t pos = 2;
  pgm_token(bytes, pos);
  pgm_token(bytes, pos);
  return parse_positive(pgm_token(bytes, pos), "PGM maxval");
}

}  // namespace

std::string encode_pgm(const Plane<std::uint8_t>& plane) {
  std::string out = "P5\n" + std::to_string(plane.width) + " " + std::to_string(plane.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(plane.data.data()), plane.data.size());
  return out;
}

Plane<std::uint8_t> decode_pgm(std::string_view bytes) {
  if (bytes.substr(0, 2) != "P5") throw FormatError("bad magic: expected 'P5' (binary PGM)");
  std::size_t pos = 2;
  const int w = parse_positive(pgm_token(bytes, pos), "PGM width");
  const int h = parse_positive(pgm_token(bytes, pos), "PGM height");
  const int maxval = parse_positive(pgm_token(bytes, pos), "PGM maxval");
  if (maxval > 255) throw FormatError("only 8-bit PGM is supported");
  ++pos;  // single whitespace byte after maxval
  const auto n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw FormatError("truncated PGM body");
  Plane<std::uint8_t> out(w, h);
  std::memcpy(out.data.data(), bytes.data() + pos, n);
  return out;
}

float quantize_intensity(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
}

void save_image_pgm(const fs::path& path, const LargeImage& image) {
  Plane<std::uint8_t> q(image.width, image.height);
  for (std::size_t i = 0; i < image.size(); ++i) {
    q.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
  }
  write_file_atomic(path, encode_pgm(q));
}

LargeImage load_image_pgm(const fs::path& path) {
  const auto bytes = read_file(path);
  const auto raw = decode_pgm(bytes);
  const float maxval = static_cast<float>(maxval_of(bytes));
  LargeImage img(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    img.data[i] = std::min(1.0f, static_cast<float>(raw.data[i]) / maxval);
  }
  return img;
}

void save_labels_pgm(const fs::path& path, const LabelMap& labels) {
  write_file_atomic(path, encode_pgm(labels));
}

LabelMap load_labels_pgm(const fs::path& path, int num_classes) {
  const auto raw = decode_pgm(read_file(path));
  LabelMap labels(raw.width, raw.height);
  labels.data = raw.data;
  if (num_classes != labels.num_classes()) {
    labels.class_names.clear();
    for (int k = 0; k < num_classes; ++k) labels.class_names.push_back("class" + std::to_string(k));
  }
  try {
    validate_labels(labels);
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return labels;
}

void save_mask_pgm(const fs::path& path, const CertaintyMask& mask) {
  Plane<std::uint8_t> q(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) q.data[i] = mask.data[i] ? 255 : 0;
  write_file_atomic(path, encode_pgm(q));
}

CertaintyMask load_mask_pgm(const fs::path& path) {
  auto raw = decode_pgm(read_file(path));
  for (auto& v : raw.data) {
    if (v != 0 && v != 255) throw FormatError(path.string() + ": mask values must be 0 or 255");
    v = v ? 1 : 0;
  }
  return raw;
}

void save_uncertainty_pgm(const fs::path& path, const UncertaintyMap& umap) {
  Plane<std::uint8_t> q(umap.width, umap.height);
  for (std::size_t i = 0; i < umap.size(); ++i) {
    q.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(umap.data[i], 0.0f, 1.0f) * 255.0f));
  }
  write_file_atomic(path, encode_pgm(q));
}

std::string encode_pmap(const ProbabilityMap& pmap) {
  std::string out = "PMAP1 " + std::to_string(pmap.width) + " " + std::to_string(pmap.height) + " " +
                    std::to_string(pmap.num_classes) + "\n";
  out.reserve(out.size() + pmap.probs.size() * 4);
  for (float v : pmap.probs) detail::append_f32(out, v);
  return out;
}

ProbabilityMap decode_pmap(std::string_view bytes) {
  const auto body = detail::header_end(bytes, "PMAP1 ");
  std::istringstream hdr(std::string(bytes.substr(6, body - 7)));
  int w = 0, h = 0, c = 0;
  if (!(hdr >> w >> h >> c) || w <= 0 || h <= 0 || c <= 0) throw FormatError("bad PMAP1 header");
  ProbabilityMap pmap(w, h, c);
  if (bytes.size() != body + pmap.probs.size() * 4) throw FormatError("PMAP1 body size mismatch");
  for (std::size_t i = 0; i < pmap.probs.size(); ++i) pmap.probs[i] = detail::read_f32(bytes.data() + body + 4 * i);
  // Coverage is not persisted; a finalized map is covered everywhere.
  std::fill(pmap.coverage.begin(), pmap.coverage.end(), 1u);
  return pmap;
}

void save_pmap(const fs::path& path, const ProbabilityMap& pmap) { write_file_atomic(path, encode_pmap(pmap)); }
ProbabilityMap load_pmap(const fs::path& path) { return decode_pmap(read_file(path)); }

std::string encode_umap(const UncertaintyMap& umap) {
  std::string out = "UMAP1 " + std::to_string(umap.width) + " " + std::to_string(umap.height) + "\n";
  out.reserve(out.size() + umap.size() * 4);
  for (float v : umap.data) detail::append_f32(out, v);
  return out;
}

UncertaintyMap decode_umap(std::string_view bytes) {
  const auto body = detail::header_end(bytes, "UMAP1 ");
  std::istringstream hdr(std::string(bytes.substr(6, body - 7)));
  int w = 0, h = 0;
  if (!(hdr >> w >> h) || w <= 0 || h <= 0) throw FormatError("bad UMAP1 header");
  UncertaintyMap umap(w, h);
  if (bytes.size() != body + umap.size() * 4) throw FormatError("UMAP1 body size mismatch");
  for (std::size_t i = 0; i < umap.size(); ++i) umap.data[i] = detail::read_f32(bytes.data() + body + 4 * i);
  return umap;
}

void save_umap(const fs::path& path, const UncertaintyMap& umap) { write_file_atomic(path, encode_umap(umap)); }
UncertaintyMap load_umap(const fs::path& path) { return decode_umap(read_file(path)); }

}  // namespace bayesseg
