#pragma once

#include <filesystem>

#include "logmosaic/raster.hpp"

namespace logmosaic {

// 8-bit binary PGM (P5). Round trips 8-bit data bit-exactly; writing rounds
// and clamps samples to [0, 255]. All failures raise Error{io_error}.
Raster read_pgm(const std::filesystem::path& path);
void write_pgm(const Raster& img, const std::filesystem::path& path);

bool png_supported();

// 8-bit PNG, grayscale out; color inputs are reduced with the BT.601
// luminance weights. Raises Error{io_error} when unsupported or unreadable.
Raster read_png(const std::filesystem::path& path);
void write_png(const Raster& img, const std::filesystem::path& path);

// Dispatch by content (PNG signature / P5 magic).
Raster read_image(const std::filesystem::path& path);
// Dispatch by extension; anything but .png writes PGM.
void write_image(const Raster& img, const std::filesystem::path& path);

// Mask image: any sample > 0 is valid.
RegionMask read_mask(const std::filesystem::path& path);
void write_mask(const RegionMask& mask, const std::filesystem::path& path);

}  // namespace logmosaic
