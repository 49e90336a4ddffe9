#include "cmcm/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cmcm/csv.hpp"
#include "cmcm/error.hpp"
#include "cmcm/metrics.hpp"

namespace cmcm {

GapImage make_gap_image(const Vector& v, int width, int height) {
  if (width < 1 || height < 1 || v.size() != static_cast<Eigen::Index>(width) * height) {
    throw InvalidArgument("image shape " + std::to_string(width) + "x" + std::to_string(height) +
                          " does not match vector length " + std::to_string(v.size()));
  }
  linalg::require_finite(v, "gap image");
  GapImage img;
  img.width = width;
  img.height = height;
  img.values.assign(static_cast<std::size_t>(v.size()), 0);
  img.source_min = v.minCoeff();
  img.source_max = v.maxCoeff();
  const double range = img.source_max - img.source_min;
  if (range > 0.0) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double scaled = std::round(255.0 * (v[i] - img.source_min) / range);
      img.values[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
    }
  }
  img.threshold = otsu_threshold(img.values);
  img.highlight_mask.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) img.highlight_mask[i] = img.values[i] > img.threshold;
  return img;
}

std::string scaling_comment(const GapImage& image) {
  return "min-max scaling: min=" + csv::format_double(image.source_min) +
         " max=" + csv::format_double(image.source_max) + " otsu=" + std::to_string(image.threshold);
}

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& values,
               const std::string& comment) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path.string());
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << '\n';
  out << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
  if (!out) throw DataError(DataErrorKind::kIo, "write failed: " + path.string());
}

void write_gap_image(const GapImage& image, const std::filesystem::path& values_path,
                     const std::filesystem::path& mask_path) {
  const std::string comment = scaling_comment(image);
  write_pgm(values_path, image.width, image.height, image.values, comment);
  std::vector<std::uint8_t> mask(image.highlight_mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = image.highlight_mask[i] ? 255 : 0;
  write_pgm(mask_path, image.width, image.height, mask, "otsu mask: pixels > " + std::to_string(image.threshold));
}

}  // namespace cmcm
