#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace herdtwin::linalg {

// Dense row-major matrix, just enough for small least-squares problems.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// argmin_x ||A x - b||_2 via column-equilibrated Householder QR (no normal
// equations). Throws Error(SingularSystem) when a pivot falls below
// rank_tolerance relative to the largest one, or a column is all zeros.
std::vector<double> least_squares(Matrix a, std::vector<double> b, double rank_tolerance = 1e-13);

}  // namespace herdtwin::linalg
