#include "trustgnn/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "trustgnn/error.hpp"

namespace trustgnn::nd {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap view(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

void require_complex(const Tensor& x, const char* op) {
  if (x.cols() % 2 != 0) {
    throw ShapeError(std::string(op) + ": last dimension must be even for a complex view, got " +
                     shape_str(x.shape()));
  }
}

}  // namespace

std::string shape_str(const Shape& s) {
  return "[" + std::to_string(s[0]) + "x" + std::to_string(s[1]) + "]";
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str({rows, cols}));
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out(a.rows(), b.cols());
  if (out.size() != 0 && a.cols() != 0) view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out(a.cols(), b.cols());
  if (out.size() != 0 && a.rows() != 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out(a.rows(), b.rows());
  if (out.size() != 0 && a.cols() != 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor complex_hadamard(const Tensor& x, const Tensor& y) {
  require_complex(x, "complex_hadamard");
  require_complex(y, "complex_hadamard");
  const bool broadcast = y.rows() == 1 && x.rows() != 1;
  if (x.cols() != y.cols() || (!broadcast && x.rows() != y.rows())) {
    throw ShapeError("complex_hadamard: shape mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(y.shape()));
  }
  const std::size_t half = x.cols() / 2;
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto yr = y.row(broadcast ? 0 : r);
    auto o = out.row(r);
    for (std::size_t k = 0; k < half; ++k) {
      const double a = xr[k], b = xr[k + half], c = yr[k], d = yr[k + half];
      o[k] = a * c - b * d;
      o[k + half] = a * d + b * c;
    }
  }
  return out;
}

Tensor complex_conjugate(const Tensor& x) {
  require_complex(x, "complex_conjugate");
  Tensor out = x;
  const std::size_t half = x.cols() / 2;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t k = half; k < x.cols(); ++k) o[k] = -o[k];
  }
  return out;
}

Tensor complex_modulus(const Tensor& x) {
  require_complex(x, "complex_modulus");
  const std::size_t half = x.cols() / 2;
  Tensor out(x.rows(), half);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (std::size_t k = 0; k < half; ++k) out(r, k) = std::hypot(xr[k], xr[k + half]);
  }
  return out;
}

Tensor complex_unit_normalize(const Tensor& x, double eps) {
  require_complex(x, "complex_unit_normalize");
  const std::size_t half = x.cols() / 2;
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto o = out.row(r);
    for (std::size_t k = 0; k < half; ++k) {
      const double m = std::max(std::hypot(xr[k], xr[k + half]), eps);
      o[k] = xr[k] / m;
      o[k + half] = xr[k + half] / m;
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  if (x.cols() == 0) return out;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double z = 0.0;
    for (std::size_t k = 0; k < xr.size(); ++k) {
      o[k] = std::exp(xr[k] - mx);
      z += o[k];
    }
    for (double& v : o) v /= z;
  }
  return out;
}

}  // namespace trustgnn::nd
