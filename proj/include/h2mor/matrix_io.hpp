#pragma once

#include <filesystem>
#include <string>

#include "h2mor/matequ.hpp"

namespace h2mor {

/// CSV matrix files: one row per line, comma separated, no header, values
/// printed with 17 significant digits so that parsing restores every bit.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& M);
Matrix read_matrix_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace h2mor
