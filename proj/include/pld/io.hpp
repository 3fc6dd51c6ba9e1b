// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "pld/tensor.hpp"

namespace pld {

/// Binary 8-bit PGM (P5, maxval 255). Byte k maps to k/255 and back; values
/// are clamped to [0, 1] only here, on export.
Tensor read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/// PLDT container:
///   "PLDT" | u16 version | u16 rank | u32 extent[rank] | f32 payload[...]
/// All fields little-endian; payload row-major.
inline constexpr std::uint16_t kTensorFileVersion = 1;

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

/// Reads PGM or PLDT based on the file's magic bytes.
Tensor read_image_any(const std::filesystem::path& path);

}  // namespace pld
