#include "abk/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk::mm {
namespace {

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Matrix Read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "empty MatrixMarket stream");

  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || Lower(object) != "matrix") {
    throw Error(ErrorCode::kIoError, "missing %%MatrixMarket matrix banner");
  }
  if (Lower(format) != "array" || Lower(field) != "real" || Lower(symmetry) != "general") {
    throw Error(ErrorCode::kIoError,
                fmt::format("unsupported MatrixMarket type '{} {} {}' (need array real general)",
                            format, field, symmetry));
  }

  do {
    if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "missing size line");
  } while (line.empty() || line[0] == '%');

  long rows = 0, cols = 0;
  std::istringstream sizes(line);
  if (!(sizes >> rows >> cols) || rows < 0 || cols < 0) {
    throw Error(ErrorCode::kIoError, fmt::format("bad size line '{}'", line));
  }

  Matrix a(rows, cols);
  for (long j = 0; j < cols; ++j) {
    for (long i = 0; i < rows; ++i) {
      if (!(in >> a(i, j))) {
        throw Error(ErrorCode::kIoError,
                    fmt::format("expected {} entries, stream ended at entry ({}, {})",
                                rows * cols, i + 1, j + 1));
      }
    }
  }
  return a;
}

Matrix ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path.string()));
  return Read(in);
}

Vector ReadVectorFile(const std::filesystem::path& path) {
  const Matrix a = ReadFile(path);
  if (a.cols() != 1 && a.rows() != 1) {
    throw Error(ErrorCode::kIoError,
                fmt::format("'{}' is {}x{}, expected a vector", path.string(), a.rows(), a.cols()));
  }
  return Eigen::Map<const Vector>(a.data(), a.size());
}

void Write(std::ostream& out, const Eigen::Ref<const Matrix>& a) {
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << fmt::format("{:.17g}\n", a(i, j));
  }
}

void WriteFile(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& a) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path.string()));
  Write(out, a);
}

void WriteVectorFile(const std::filesystem::path& path, const Vector& v) {
  const Matrix column = Eigen::Map<const Matrix>(v.data(), v.size(), 1);
  WriteFile(path, column);
}

}  // namespace abk::mm
