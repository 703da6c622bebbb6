#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcbsde {

//! Dense row-major matrix of doubles. Rows index paths, columns index grid times.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
  {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return { data_.data() + r * cols_, cols_ }; }
  std::span<const double> row(std::size_t r) const
  {
    return { data_.data() + r * cols_, cols_ };
  }

  //! Copies column c into a contiguous vector.
  std::vector<double> col(std::size_t c) const
  {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      out[r] = data_[r * cols_ + c];
    return out;
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void require_shape(std::size_t r, std::size_t c, const char* what) const
  {
    if (rows_ != r || cols_ != c)
      throw std::invalid_argument(std::string(what) + ": matrix shape mismatch");
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

} // namespace mcbsde
