#include "trustgnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trustgnn/error.hpp"

namespace trustgnn::nd {

namespace {

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw Error("operation on an unbound variable");
  return *v.tape();
}

void require_shape(const Var& a, const Var& b, const char* op) { require_same_shape(a.value(), b.value(), op); }

Tensor map(const Tensor& x, double (*f)(double)) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Column sums of g, used when a single row was broadcast over all rows.
Tensor reduce_rows(const Tensor& g) {
  Tensor out(1, g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto gr = g.row(r);
    for (std::size_t c = 0; c < g.cols(); ++c) out[c] += gr[c];
  }
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  return t.record(nd::matmul(a.value(), b.value()), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(a)) tape.accumulate(a, matmul_nt(g, b.value()));
                    if (tape.requires_grad(b)) tape.accumulate(b, matmul_tn(a.value(), g));
                  },
                  "matmul");
}

Var add(const Var& a, const Var& b) {
  require_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return tape_of(a).record(std::move(out), {a, b},
                           [a, b](Tape& tape, const Tensor& g) {
                             tape.accumulate(a, g);
                             tape.accumulate(b, g);
                           },
                           "add");
}

Var sub(const Var& a, const Var& b) {
  require_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape_of(a).record(std::move(out), {a, b},
                           [a, b](Tape& tape, const Tensor& g) {
                             tape.accumulate(a, g);
                             if (!tape.requires_grad(b)) return;
                             Tensor neg = g;
                             for (double& v : neg.data()) v = -v;
                             tape.accumulate(b, neg);
                           },
                           "sub");
}

Var mul(const Var& a, const Var& b) {
  require_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape_of(a).record(std::move(out), {a, b},
                           [a, b](Tape& tape, const Tensor& g) {
                             if (tape.requires_grad(a)) {
                               Tensor ga = g;
                               for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
                               tape.accumulate(a, ga);
                             }
                             if (tape.requires_grad(b)) {
                               Tensor gb = g;
                               for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
                               tape.accumulate(b, gb);
                             }
                           },
                           "mul");
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return tape_of(a).record(std::move(out), {a},
                           [a, s](Tape& tape, const Tensor& g) {
                             Tensor ga = g;
                             for (double& v : ga.data()) v *= s;
                             tape.accumulate(a, ga);
                           },
                           "scale");
}

Var add_row(const Var& x, const Var& row) {
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw ShapeError("add_row: shape mismatch " + shape_str(xv.shape()) + " vs " + shape_str(rv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += rv[c];
  }
  return tape_of(x).record(std::move(out), {x, row},
                           [x, row](Tape& tape, const Tensor& g) {
                             tape.accumulate(x, g);
                             if (tape.requires_grad(row)) tape.accumulate(row, reduce_rows(g));
                           },
                           "add_row");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols: shape mismatch " + shape_str(parts.front().shape()) + " vs " +
                       shape_str(p.shape()));
    }
    cols += p.value().cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r) std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + offset);
    offset += pv.cols();
  }
  return tape_of(parts.front())
      .record(std::move(out), parts,
              [parts](Tape& tape, const Tensor& g) {
                std::size_t off = 0;
                for (const Var& p : parts) {
                  const std::size_t pc = p.value().cols();
                  if (tape.requires_grad(p)) {
                    Tensor gp(g.rows(), pc);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      auto gr = g.row(r);
                      std::copy(gr.begin() + off, gr.begin() + off + pc, gp.row(r).begin());
                    }
                    tape.accumulate(p, gp);
                  }
                  off += pc;
                }
              },
              "concat_cols");
}

Var sum_rows(const Var& x) {
  return tape_of(x).record(reduce_rows(x.value()), {x},
                           [x](Tape& tape, const Tensor& g) {
                             Tensor& slot = tape.grad_slot(x);
                             for (std::size_t r = 0; r < slot.rows(); ++r) {
                               auto s = slot.row(r);
                               for (std::size_t c = 0; c < s.size(); ++c) s[c] += g[c];
                             }
                           },
                           "sum_rows");
}

Var mean_rows(const Var& x) {
  const std::size_t n = x.value().rows();
  if (n == 0) throw ShapeError("mean_rows: empty input");
  return scale(sum_rows(x), 1.0 / static_cast<double>(n));
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape_of(x).record(Tensor::scalar(s), {x},
                           [x](Tape& tape, const Tensor& g) {
                             Tensor& slot = tape.grad_slot(x);
                             for (double& v : slot.data()) v += g[0];
                           },
                           "sum");
}

Var mean(const Var& x) {
  if (x.value().size() == 0) throw ShapeError("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var tanh(const Var& x) {
  Tensor out = map(x.value(), [](double v) { return std::tanh(v); });
  Tape& t = tape_of(x);
  const std::size_t out_id = t.size();
  return t.record(std::move(out), {x},
                  [x, out_id](Tape& tape, const Tensor& g) {
                    const Tensor& y = tape.value(out_id);
                    Tensor gx = g;
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 1.0 - y[i] * y[i];
                    tape.accumulate(x, gx);
                  },
                  "tanh");
}

Var relu(const Var& x) {
  Tensor out = map(x.value(), [](double v) { return v < 0.0 ? 0.0 : v; });
  return tape_of(x).record(std::move(out), {x},
                           [x](Tape& tape, const Tensor& g) {
                             Tensor gx = g;
                             const Tensor& xv = x.value();
                             for (std::size_t i = 0; i < gx.size(); ++i)
                               if (xv[i] <= 0.0) gx[i] = 0.0;
                             tape.accumulate(x, gx);
                           },
                           "relu");
}

Var gather_rows(const Var& x, std::vector<std::size_t> rows) {
  const Tensor& xv = x.value();
  Tensor out(rows.size(), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " outside " + shape_str(xv.shape()));
    }
    std::copy(xv.row(rows[i]).begin(), xv.row(rows[i]).end(), out.row(i).begin());
  }
  return tape_of(x).record(std::move(out), {x},
                           [x, rows = std::move(rows)](Tape& tape, const Tensor& g) {
                             Tensor& slot = tape.grad_slot(x);
                             for (std::size_t i = 0; i < rows.size(); ++i) {
                               auto s = slot.row(rows[i]);
                               auto gr = g.row(i);
                               for (std::size_t c = 0; c < s.size(); ++c) s[c] += gr[c];
                             }
                           },
                           "gather_rows");
}

Var spmm(const CsrMatrix& s, const CsrMatrix& s_t, const Var& x) {
  if (s_t.rows() != s.cols() || s_t.cols() != s.rows() || s_t.nnz() != s.nnz()) {
    throw ShapeError("spmm: transpose operand does not match");
  }
  return tape_of(x).record(s.multiply(x.value()), {x},
                           [x, &s_t](Tape& tape, const Tensor& g) { tape.accumulate(x, s_t.multiply(g)); },
                           "spmm");
}

Var complex_hadamard(const Var& x, const Var& y) {
  Tensor out = nd::complex_hadamard(x.value(), y.value());
  const bool broadcast = y.value().rows() == 1 && x.value().rows() != 1;
  return tape_of(x).record(std::move(out), {x, y},
                           [x, y, broadcast](Tape& tape, const Tensor& g) {
                             // d/dx = g·conj(y), d/dy = g·conj(x)
                             if (tape.requires_grad(x)) {
                               tape.accumulate(x, nd::complex_hadamard(g, nd::complex_conjugate(y.value())));
                             }
                             if (tape.requires_grad(y)) {
                               Tensor gy = nd::complex_hadamard(g, nd::complex_conjugate(x.value()));
                               tape.accumulate(y, broadcast ? reduce_rows(gy) : gy);
                             }
                           },
                           "complex_hadamard");
}

Var complex_conjugate(const Var& x) {
  return tape_of(x).record(nd::complex_conjugate(x.value()), {x},
                           [x](Tape& tape, const Tensor& g) { tape.accumulate(x, nd::complex_conjugate(g)); },
                           "complex_conjugate");
}

Var complex_unit_normalize(const Var& x, double eps) {
  Tape& t = tape_of(x);
  const std::size_t out_id = t.size();
  return t.record(nd::complex_unit_normalize(x.value(), eps), {x},
                  [x, eps, out_id](Tape& tape, const Tensor& g) {
                    const Tensor& xv = x.value();
                    const Tensor& y = tape.value(out_id);
                    const std::size_t half = xv.cols() / 2;
                    Tensor gx(xv.rows(), xv.cols());
                    for (std::size_t r = 0; r < xv.rows(); ++r) {
                      for (std::size_t k = 0; k < half; ++k) {
                        const double re = xv(r, k), im = xv(r, k + half);
                        const double m = std::hypot(re, im);
                        const double gre = g(r, k), gim = g(r, k + half);
                        if (m <= eps) {
                          gx(r, k) = gre / eps;
                          gx(r, k + half) = gim / eps;
                          continue;
                        }
                        const double yre = y(r, k), yim = y(r, k + half);
                        const double proj = gre * yre + gim * yim;
                        gx(r, k) = (gre - yre * proj) / m;
                        gx(r, k + half) = (gim - yim * proj) / m;
                      }
                    }
                    tape.accumulate(x, gx);
                  },
                  "complex_unit_normalize");
}

Var softmax(const Var& x) {
  Tape& t = tape_of(x);
  const std::size_t out_id = t.size();
  return t.record(softmax_rows(x.value()), {x},
                  [x, out_id](Tape& tape, const Tensor& g) {
                    const Tensor& s = tape.value(out_id);
                    Tensor gx(s.rows(), s.cols());
                    for (std::size_t r = 0; r < s.rows(); ++r) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < s.cols(); ++c) dot += g(r, c) * s(r, c);
                      for (std::size_t c = 0; c < s.cols(); ++c) gx(r, c) = s(r, c) * (g(r, c) - dot);
                    }
                    tape.accumulate(x, gx);
                  },
                  "softmax");
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  const Tensor& z = logits.value();
  if (labels.size() != z.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     shape_str(z.shape()));
  }
  if (z.rows() == 0) throw ShapeError("cross_entropy: empty batch");
  for (std::size_t l : labels) {
    if (l >= z.cols()) {
      throw DataError("cross_entropy: label " + std::to_string(l) + " outside [0, " + std::to_string(z.cols()) + ")");
    }
  }
  Tensor probs = softmax_rows(z);
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto zr = z.row(r);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double lse = 0.0;
    for (double v : zr) lse += std::exp(v - mx);
    loss += mx + std::log(lse) - zr[labels[r]];
  }
  const double n = static_cast<double>(z.rows());
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return tape_of(logits).record(
      Tensor::scalar(loss / n), {logits},
      [logits, probs = std::move(probs), lab = std::move(lab), n](Tape& tape, const Tensor& g) {
        Tensor gz = probs;
        for (std::size_t r = 0; r < lab.size(); ++r) gz(r, lab[r]) -= 1.0;
        const double k = g[0] / n;
        for (double& v : gz.data()) v *= k;
        tape.accumulate(logits, gz);
      },
      "cross_entropy");
}

Var weighted_sum(const std::vector<Var>& terms, const Var& weights) {
  if (terms.empty()) throw ShapeError("weighted_sum: no terms");
  const Tensor& w = weights.value();
  if (w.rows() != 1 || w.cols() != terms.size()) {
    throw ShapeError("weighted_sum: weights " + shape_str(w.shape()) + " for " + std::to_string(terms.size()) +
                     " terms");
  }
  Tensor out(terms.front().value().rows(), terms.front().value().cols());
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const Tensor& tv = terms[j].value();
    require_same_shape(out, tv, "weighted_sum");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * tv[i];
  }
  std::vector<Var> inputs = terms;
  inputs.push_back(weights);
  return tape_of(weights).record(std::move(out), inputs,
                                 [terms, weights](Tape& tape, const Tensor& g) {
                                   const Tensor& wv = weights.value();
                                   Tensor gw(1, terms.size());
                                   for (std::size_t j = 0; j < terms.size(); ++j) {
                                     const Tensor& tv = terms[j].value();
                                     double dot = 0.0;
                                     for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * tv[i];
                                     gw[j] = dot;
                                     if (tape.requires_grad(terms[j])) {
                                       Tensor gt = g;
                                       for (double& v : gt.data()) v *= wv[j];
                                       tape.accumulate(terms[j], gt);
                                     }
                                   }
                                   tape.accumulate(weights, gw);
                                 },
                                 "weighted_sum");
}

}  // namespace trustgnn::nd
