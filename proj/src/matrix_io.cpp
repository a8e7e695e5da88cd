#include "h2mor/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "h2mor/error.hpp"

namespace h2mor {

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  std::string line;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(M(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::vector<double> values;
  Eigen::Index rows = 0, cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Eigen::Index count = 0;
    std::string_view rest(line);
    while (true) {
      const std::size_t comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        std::ostringstream os;
        os << path.string() << ":" << rows + 1 << ": cannot parse '" << field << "'";
        throw Error(ErrorCode::FormatError, os.str());
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols >= 0 && count != cols) {
      std::ostringstream os;
      os << path.string() << ":" << rows + 1 << ": expected " << cols
         << " columns, found " << count;
      throw Error(ErrorCode::FormatError, os.str());
    }
    cols = count;
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::FormatError, path.string() + " is empty");

  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  if (!M.allFinite()) throw Error(ErrorCode::FormatError, path.string() + " has non-finite entries");
  return M;
}

}  // namespace h2mor
