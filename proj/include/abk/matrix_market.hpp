#pragma once

#include <filesystem>
#include <iosfwd>

#include "abk/types.hpp"

namespace abk::mm {

// Dense MatrixMarket "array real general" files. Entries are stored in
// column-major order, one value per line.
Matrix Read(std::istream& in);
Matrix ReadFile(const std::filesystem::path& path);
Vector ReadVectorFile(const std::filesystem::path& path);

void Write(std::ostream& out, const Eigen::Ref<const Matrix>& a);
void WriteFile(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& a);
void WriteVectorFile(const std::filesystem::path& path, const Vector& v);

}  // namespace abk::mm
