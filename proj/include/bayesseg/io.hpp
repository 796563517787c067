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

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "bayesseg/plane.hpp"
#include "bayesseg/tiling.hpp"

namespace bayesseg {

/// Input file does not exist or cannot be opened.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Artifact has a wrong magic string or a truncated/garbled body.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `bytes` to `path.tmp` and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Binary 8-bit PGM (P5). Images are scaled to [0,1] by the file's maxval;
// label maps store the class index directly as the pixel value.
std::string encode_pgm(const Plane<std::uint8_t>& plane);
Plane<std::uint8_t> decode_pgm(std::string_view bytes);

void save_image_pgm(const std::filesystem::path& path, const LargeImage& image);
LargeImage load_image_pgm(const std::filesystem::path& path);

void save_labels_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap load_labels_pgm(const std::filesystem::path& path, int num_classes = 3);

/// 255 = certain, 0 = uncertain.
void save_mask_pgm(const std::filesystem::path& path, const CertaintyMask& mask);
CertaintyMask load_mask_pgm(const std::filesystem::path& path);

/// Grayscale rendering of an uncertainty map (bright = uncertain).
void save_uncertainty_pgm(const std::filesystem::path& path, const UncertaintyMap& umap);

/// Quantizes [0,1] intensities to the 8-bit levels PGM can hold.
float quantize_intensity(float v);

// "PMAP1 <width> <height> <C>\n" + row-major, class-fastest float32 LE.
std::string encode_pmap(const ProbabilityMap& pmap);
ProbabilityMap decode_pmap(std::string_view bytes);
void save_pmap(const std::filesystem::path& path, const ProbabilityMap& pmap);
ProbabilityMap load_pmap(const std::filesystem::path& path);

// "UMAP1 <width> <height>\n" + row-major float32 LE.
std::string encode_umap(const UncertaintyMap& umap);
UncertaintyMap decode_umap(std::string_view bytes);
void save_umap(const std::filesystem::path& path, const UncertaintyMap& umap);
UncertaintyMap load_umap(const std::filesystem::path& path);

namespace detail {
void append_f32(std::string& out, float v);
float read_f32(const char* p);
/// Parses a single ASCII header line starting with `magic`; returns the
/// offset of the first byte after the newline.
std::size_t header_end(std::string_view bytes, std::string_view magic);
}  // namespace detail

}  // namespace bayesseg
