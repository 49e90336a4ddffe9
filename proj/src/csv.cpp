#include "cmcm/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "cmcm/error.hpp"

namespace cmcm::csv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  std::ostringstream out;
  out << path.string() << ":" << line;
  return out.str();
}

}  // namespace

Matrix read_columns(const std::filesystem::path& path, Eigen::Index expected_width) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open " + path.string());

  std::vector<double> values;
  Eigen::Index width = expected_width;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;

    Eigen::Index fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = content.find(',', start);
      const std::string_view field = trim(content.substr(start, comma == std::string_view::npos ? comma : comma - start));
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw DataError(DataErrorKind::kParse,
                        location(path, line_no) + ": cannot parse field " + std::to_string(fields + 1) + " '" +
                            std::string(field) + "'");
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width < 0) width = fields;
    if (fields != width) {
      throw DataError(DataErrorKind::kRaggedRow, location(path, line_no) + ": expected " + std::to_string(width) +
                                                     " fields, found " + std::to_string(fields));
    }
    ++rows;
  }
  if (in.bad()) throw DataError(DataErrorKind::kIo, "read error on " + path.string());
  if (width < 0) width = 0;
  return Eigen::Map<const Matrix>(values.data(), width, rows);
}

void write_columns(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path.string());
  std::string line;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    line.clear();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw DataError(DataErrorKind::kIo, "write error on " + path.string());
}

}  // namespace cmcm::csv
