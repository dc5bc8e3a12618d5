#pragma once

#include <cstdint>
#include <filesystem>

#include "usstyle/tensor.hpp"

namespace usstyle {

// Reads an 8-bit PNG or binary PGM (P5). Values are scaled to [0,1];
// grayscale images give one channel, colour images three.
// Errors: FileNotFound, UnsupportedFormat, CorruptData (message names the path).
Tensor load_image(const std::filesystem::path& path);

// Writes a 1- or 3-channel tensor as PNG, or a 1-channel tensor as PGM,
// chosen by extension. Values are clamped to [0,1] and rounded half-up to
// 8 bits.
void save_image(const Tensor& t, const std::filesystem::path& path);

std::uint8_t quantize_u8(double v);

}  // namespace usstyle
