#pragma once

#include <cstdint>
#include <vector>

#include "igc/common.hpp"
#include "igc/errors.hpp"

namespace igc {

// Dense row-major matrix of doubles.
struct Matrix {
  i64 rows = 0;
  i64 cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(i64 r, i64 c) : rows(r), cols(c), data(checked_size(r, c), 0.0) {}

  static size_t checked_size(i64 r, i64 c) {
    if (r < 0 || c < 0) throw ShapeError("negative matrix dimension");
    return static_cast<size_t>(r) * static_cast<size_t>(c);
  }

  double& at(i64 r, i64 c) { return data[static_cast<size_t>(r * cols + c)]; }
  double at(i64 r, i64 c) const { return data[static_cast<size_t>(r * cols + c)]; }
  double* row(i64 r) { return data.data() + r * cols; }
  const double* row(i64 r) const { return data.data() + r * cols; }
  i64 size() const { return rows * cols; }

  static Matrix identity(i64 n) {
    Matrix m(n, n);
    for (i64 i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (i64 r = 0; r < a.rows; ++r)
    for (i64 c = 0; c < a.cols; ++c) t.at(c, r) = a.at(r, c);
  return t;
}

// Boolean occupancy mask with the same row-major layout.
struct SupportMatrix {
  i64 rows = 0;
  i64 cols = 0;
  std::vector<std::uint8_t> bits;

  SupportMatrix() = default;
  SupportMatrix(i64 r, i64 c)
      : rows(r), cols(c), bits(static_cast<size_t>(r * c), 0) {}

  std::uint8_t& at(i64 r, i64 c) { return bits[static_cast<size_t>(r * cols + c)]; }
  std::uint8_t at(i64 r, i64 c) const { return bits[static_cast<size_t>(r * cols + c)]; }

  i64 count_true() const {
    i64 n = 0;
    for (auto b : bits) n += b ? 1 : 0;
    return n;
  }
  bool all_true() const { return count_true() == rows * cols; }
  double density() const {
    return rows * cols == 0 ? 0.0
                            : static_cast<double>(count_true()) /
                                  static_cast<double>(rows * cols);
  }
};

}  // namespace igc
