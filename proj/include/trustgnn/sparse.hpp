#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "trustgnn/tensor.hpp"

namespace trustgnn::nd {

// Boolean sparse matrix in compressed row storage; every stored entry is 1.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  // Entries are (row, col) pairs; duplicates are kept and count twice.
  static CsrMatrix from_entries(std::size_t rows, std::size_t cols,
                                std::vector<std::pair<std::uint32_t, std::uint32_t>> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const noexcept { return col_idx_; }

  CsrMatrix transposed() const;

  // out = this · x
  Tensor multiply(const Tensor& x) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
};

}  // namespace trustgnn::nd
