#include "trustgnn/sparse.hpp"

#include <algorithm>

#include "trustgnn/error.hpp"

namespace trustgnn::nd {

CsrMatrix CsrMatrix::from_entries(std::size_t rows, std::size_t cols,
                                  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries) {
  std::sort(entries.begin(), entries.end());
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  m.col_idx_.reserve(entries.size());
  for (const auto& [r, c] : entries) {
    if (r >= rows || c >= cols) throw ShapeError("CsrMatrix: entry outside " + shape_str({rows, cols}));
    ++m.row_ptr_[r + 1];
    m.col_idx_.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
  entries.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      entries.emplace_back(col_idx_[k], static_cast<std::uint32_t>(r));
    }
  }
  return from_entries(cols_, rows_, std::move(entries));
}

Tensor CsrMatrix::multiply(const Tensor& x) const {
  if (x.rows() != cols_) {
    throw ShapeError("sparse multiply: shape mismatch " + shape_str({rows_, cols_}) + " vs " +
                     shape_str(x.shape()));
  }
  Tensor out(rows_, x.cols());
  for (std::size_t r = 0; r < rows_; ++r) {
    auto o = out.row(r);
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      auto xr = x.row(col_idx_[k]);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += xr[c];
    }
  }
  return out;
}

}  // namespace trustgnn::nd
