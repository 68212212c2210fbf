#pragma once

#include "mapflow/tensor.hpp"

#include <filesystem>

namespace mapflow {

// TSR binary tensor format: magic "TSR1", u32 little-endian rank, u32
// extents, f32 little-endian payload, row-major. Round-trips bit-exactly.
void write_tsr(const std::filesystem::path& path, const Tensor& t);
Tensor read_tsr(const std::filesystem::path& path);

// Binary PGM (P5) with class indices stored as raw gray levels.
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_pgm_labels(const std::filesystem::path& path);

// Binary PGM of a single-channel field; values clamped to [0,1] and scaled
// to 255.
void write_pgm_gray(const std::filesystem::path& path, const Tensor& field);

// Binary PPM (P6) of an H x W x 3 image with values in [0,1].
void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

} // namespace mapflow
