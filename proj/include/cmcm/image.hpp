#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmcm/linalg.hpp"

namespace cmcm {

/// An 8-bit gray image with its Otsu highlight mask. Pixels are stored
/// row-major; pixel (x, y) comes from feature index y * width + x.
struct GapImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;
  std::vector<bool> highlight_mask;
  int threshold = 0;
  /// Range of the input that was mapped onto 0..255.
  double source_min = 0.0;
  double source_max = 0.0;
};

/// Min-max scales v onto 0..255 (rounded) and marks pixels above the Otsu
/// threshold. A constant input gives an all-zero image and an empty mask.
/// Throws InvalidArgument when v.size() != width * height.
GapImage make_gap_image(const Vector& v, int width, int height);

/// Metadata line written as the PGM comment.
std::string scaling_comment(const GapImage& image);

/// Binary (P5) graymap writers for the values and the {0, 255} mask.
void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& values,
               const std::string& comment);
void write_gap_image(const GapImage& image, const std::filesystem::path& values_path,
                     const std::filesystem::path& mask_path);

}  // namespace cmcm
