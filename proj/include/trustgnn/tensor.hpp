#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace trustgnn::nd {

using Shape = std::array<std::size_t, 2>;

std::string shape_str(const Shape& s);

// Dense row-major matrix of doubles. Vectors are 1 x n, scalars 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  Shape shape() const noexcept { return {rows_, cols_}; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double item() const;
  bool all_finite() const noexcept;
  void fill(double v);

  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

// Plain kernels on values. The taped wrappers in ops.hpp call into these.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // aᵀ·b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a·bᵀ
Tensor transpose(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Complex-plane view: the last dimension holds real parts in its first half
// and imaginary parts in its second half. `y` may be a single row, which is
// then applied to every row of `x`.
Tensor complex_hadamard(const Tensor& x, const Tensor& y);
Tensor complex_conjugate(const Tensor& x);
Tensor complex_unit_normalize(const Tensor& x, double eps = 1e-12);
Tensor complex_modulus(const Tensor& x);  // rows x (cols/2)

// Row-wise numerically stable softmax.
Tensor softmax_rows(const Tensor& x);

}  // namespace trustgnn::nd
