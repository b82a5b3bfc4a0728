#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gradplast {

/// Minimal CSR matrix. apply_transpose scatters the same stored
/// coefficients, so it is the literal algebraic transpose of apply.
class Csr {
public:
  Csr() = default;
  Csr(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    row_ptr_.assign(rows + 1, 0);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }

  /// Rows must be appended in order, each as (col, val) pairs.
  void append_row(const std::vector<std::pair<std::size_t, double>>& entries) {
    if (next_row_ >= rows_) throw std::logic_error("Csr: too many rows appended");
    for (const auto& [c, v] : entries) {
      col_.push_back(c);
      val_.push_back(v);
    }
    ++next_row_;
    row_ptr_[next_row_] = val_.size();
  }

  void apply(const double* x, double* y) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        s += val_[k] * x[col_[k]];
      y[r] = s;
    }
  }

  void apply_transpose(const double* x, double* y) const {
    for (std::size_t c = 0; c < cols_; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double xr = x[r];
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        y[col_[k]] += val_[k] * xr;
    }
  }

  /// Row iteration for assembly-side consumers (diagonal extraction).
  std::size_t row_begin(std::size_t r) const { return row_ptr_[r]; }
  std::size_t row_end(std::size_t r) const { return row_ptr_[r + 1]; }
  std::size_t entry_col(std::size_t k) const { return col_[k]; }
  double entry_val(std::size_t k) const { return val_[k]; }

private:
  std::size_t rows_ = 0, cols_ = 0, next_row_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

} // namespace gradplast
