#pragma once

#include <filesystem>
#include <string>

#include "cmcm/linalg.hpp"

namespace cmcm::csv {

/// Shortest-safe decimal form with 17 significant digits; round-trips exactly.
std::string format_double(double v);

/// Reads a headerless comma-separated table of decimals. Row i of the file
/// becomes column i of the result, so a file of N feature vectors with d
/// values each yields a d x N matrix. Blank lines are skipped.
///
/// expected_width < 0 takes the width from the first row. Throws DataError
/// on a missing file, an unparsable field or a row of the wrong width, with
/// the 1-based line number in the message.
Matrix read_columns(const std::filesystem::path& path, Eigen::Index expected_width = -1);

/// Writes each column of m as one line.
void write_columns(const std::filesystem::path& path, const Matrix& m);

}  // namespace cmcm::csv
