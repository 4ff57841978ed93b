#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "netgnn/autodiff/tape.hpp"

// Differentiable ops over rank <= 2 tensors. Every reduction accumulates in
// ascending element/row index, so results are bit-reproducible.
namespace netgnn::ad {

inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;

namespace detail {

template <typename Real>
void require(bool ok, const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (!ok) {
    throw DataError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                    shape_str(b.shape()));
  }
}

template <typename Real>
void add_into(Tensor<Real>& dst, const Tensor<Real>& src) {
  Real* d = dst.data();
  const Real* s = src.data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

inline void check_index(int i, std::size_t bound, const char* op) {
  if (i < 0 || static_cast<std::size_t>(i) >= bound) {
    throw DataError(std::string(op) + ": index " + std::to_string(i) + " out of range");
  }
}

}  // namespace detail

// (m x k) * (k x n)
template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& B = b.value();
  detail::require(A.rank() == 2 && B.rank() == 2 && A.cols() == B.rows(), "matmul", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor<Real> C = Tensor<Real>::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    Real* c = C.data() + i * n;
    const Real* arow = A.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      const Real* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(
      std::move(C), {a, b},
      [ia, ib, m, k, n](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        if (t.needs_grad(ia)) {
          const Tensor<Real>& Bv = t.value(ib);
          Tensor<Real>& ga = t.grad_mut(ia);
          for (std::size_t i = 0; i < m; ++i) {
            const Real* grow = g.data() + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const Real* brow = Bv.data() + p * n;
              Real s = 0;
              for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
              ga.data()[i * k + p] += s;
            }
          }
        }
        if (t.needs_grad(ib)) {
          const Tensor<Real>& Av = t.value(ia);
          Tensor<Real>& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < m; ++i) {
            const Real* grow = g.data() + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const Real av = Av.data()[i * k + p];
              Real* gbrow = gb.data() + p * n;
              for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
            }
          }
        }
      },
      "matmul");
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& B = b.value();
  detail::require(A.same_shape(B), "add", A, B);
  Tensor<Real> C = A;
  detail::add_into(C, B);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(
      std::move(C), {a, b},
      [ia, ib](Tape<Real>& t, std::size_t self) {
        if (t.needs_grad(ia)) detail::add_into(t.grad_mut(ia), t.grad(self));
        if (t.needs_grad(ib)) detail::add_into(t.grad_mut(ib), t.grad(self));
      },
      "add");
}

template <typename Real>
Var<Real> sub(Var<Real> a, Var<Real> b) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& B = b.value();
  detail::require(A.same_shape(B), "sub", A, B);
  Tensor<Real> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(
      std::move(C), {a, b},
      [ia, ib](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        if (t.needs_grad(ia)) detail::add_into(t.grad_mut(ia), g);
        if (t.needs_grad(ib)) {
          Tensor<Real>& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      },
      "sub");
}

// Element-wise product.
template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& B = b.value();
  detail::require(A.same_shape(B), "mul", A, B);
  Tensor<Real> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(
      std::move(C), {a, b},
      [ia, ib](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        if (t.needs_grad(ia)) {
          const Tensor<Real>& Bv = t.value(ib);
          Tensor<Real>& ga = t.grad_mut(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * Bv[i];
        }
        if (t.needs_grad(ib)) {
          const Tensor<Real>& Av = t.value(ia);
          Tensor<Real>& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * Av[i];
        }
      },
      "mul");
}

// Adds a bias of length cols(a) to every row of a.
template <typename Real>
Var<Real> add_row(Var<Real> a, Var<Real> bias) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& b = bias.value();
  detail::require(b.size() == A.cols(), "add_row", A, b);
  Tensor<Real> C = A;
  const std::size_t rows = A.rows(), cols = A.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) C.data()[i * cols + j] += b[j];
  }
  const std::size_t ia = a.id, ib = bias.id;
  return a.tape->record(
      std::move(C), {a, bias},
      [ia, ib, rows, cols](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        if (t.needs_grad(ia)) detail::add_into(t.grad_mut(ia), g);
        if (t.needs_grad(ib)) {
          Tensor<Real>& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) gb[j] += g.data()[i * cols + j];
          }
        }
      },
      "add_row");
}

template <typename Real>
Var<Real> scale(Var<Real> a, Real c) {
  Tensor<Real> y = a.value();
  for (Real& v : y.values()) v *= c;
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(y), {a},
      [ia, c](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
      },
      "scale");
}

template <typename Real>
Var<Real> sigmoid(Var<Real> a) {
  const Tensor<Real>& x = a.value();
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = Real(1) / (Real(1) + std::exp(-x[i]));
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(y), {a},
      [ia](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        const Tensor<Real>& yv = t.value(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yv[i] * (Real(1) - yv[i]);
      },
      "sigmoid");
}

template <typename Real>
Var<Real> tanh(Var<Real> a) {
  const Tensor<Real>& x = a.value();
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(y), {a},
      [ia](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        const Tensor<Real>& yv = t.value(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (Real(1) - yv[i] * yv[i]);
      },
      "tanh");
}

template <typename Real>
Real selu_value(Real x) {
  const Real scale = Real(kSeluScale), alpha = Real(kSeluAlpha);
  return x > Real(0) ? scale * x : scale * alpha * (std::exp(x) - Real(1));
}

template <typename Real>
Var<Real> selu(Var<Real> a) {
  const Tensor<Real>& x = a.value();
  Tensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = selu_value(x[i]);
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(y), {a},
      [ia](Tape<Real>& t, std::size_t self) {
        const Real scale = Real(kSeluScale), sa = Real(kSeluScale * kSeluAlpha);
        const Tensor<Real>& g = t.grad(self);
        const Tensor<Real>& xv = t.value(ia);
        const Tensor<Real>& yv = t.value(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * (xv[i] > Real(0) ? scale : yv[i] + sa);
        }
      },
      "selu");
}

// [a | b] along columns; both must have the same row count.
template <typename Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b) {
  const Tensor<Real>& A = a.value();
  const Tensor<Real>& B = b.value();
  detail::require(A.rows() == B.rows(), "concat_cols", A, B);
  const std::size_t rows = A.rows(), ca = A.cols(), cb = B.cols();
  Tensor<Real> C = Tensor<Real>::matrix(rows, ca + cb);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(A.data() + i * ca, ca, C.data() + i * (ca + cb));
    std::copy_n(B.data() + i * cb, cb, C.data() + i * (ca + cb) + ca);
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(
      std::move(C), {a, b},
      [ia, ib, rows, ca, cb](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        const std::size_t w = ca + cb;
        if (t.needs_grad(ia)) {
          Tensor<Real>& ga = t.grad_mut(ia);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < ca; ++j) ga.data()[i * ca + j] += g.data()[i * w + j];
          }
        }
        if (t.needs_grad(ib)) {
          Tensor<Real>& gb = t.grad_mut(ib);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cb; ++j) gb.data()[i * cb + j] += g.data()[i * w + ca + j];
          }
        }
      },
      "concat_cols");
}

// Columns [begin, end) of a.
template <typename Real>
Var<Real> slice_cols(Var<Real> a, std::size_t begin, std::size_t end) {
  const Tensor<Real>& A = a.value();
  if (begin > end || end > A.cols()) throw DataError("slice_cols: range out of bounds");
  const std::size_t rows = A.rows(), cols = A.cols(), w = end - begin;
  Tensor<Real> C = Tensor<Real>::matrix(rows, w);
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(A.data() + i * cols + begin, w, C.data() + i * w);
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(C), {a},
      [ia, rows, cols, begin, w](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < w; ++j) ga.data()[i * cols + begin + j] += g.data()[i * w + j];
        }
      },
      "slice_cols");
}

// Stacks row blocks with equal column counts.
template <typename Real>
Var<Real> concat_rows(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) throw DataError("concat_rows: no inputs");
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    detail::require(p.value().cols() == cols, "concat_rows", parts.front().value(), p.value());
    rows += p.value().rows();
  }
  Tensor<Real> C = Tensor<Real>::matrix(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), C.data() + at * cols);
    ids.push_back(p.id);
    offsets.push_back(at * cols);
    at += p.value().rows();
  }
  return parts.front().tape->record(
      std::move(C), parts,
      [ids, offsets](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.needs_grad(ids[k])) continue;
          Tensor<Real>& gp = t.grad_mut(ids[k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
        }
      },
      "concat_rows");
}

// out[i] = a[index[i]]
template <typename Real>
Var<Real> gather_rows(Var<Real> a, std::span<const int> index) {
  const Tensor<Real>& A = a.value();
  const std::size_t cols = A.cols();
  Tensor<Real> C = Tensor<Real>::matrix(index.size(), cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::check_index(index[i], A.rows(), "gather_rows");
    std::copy_n(A.data() + static_cast<std::size_t>(index[i]) * cols, cols, C.data() + i * cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(C), {a},
      [ia, idx = std::move(idx), cols](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          Real* dst = ga.data() + static_cast<std::size_t>(idx[i]) * cols;
          const Real* src = g.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
        }
      },
      "gather_rows");
}

// Copy of base with rows index[i] replaced by rows[i]; indices must be unique.
template <typename Real>
Var<Real> scatter_rows(Var<Real> base, std::span<const int> index, Var<Real> rows) {
  const Tensor<Real>& B = base.value();
  const Tensor<Real>& R = rows.value();
  detail::require(R.rows() == index.size() && R.cols() == B.cols(), "scatter_rows", B, R);
  const std::size_t cols = B.cols();
  Tensor<Real> C = B;
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::check_index(index[i], B.rows(), "scatter_rows");
    std::copy_n(R.data() + i * cols, cols, C.data() + static_cast<std::size_t>(index[i]) * cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  const std::size_t ib = base.id, ir = rows.id;
  return base.tape->record(
      std::move(C), {base, rows},
      [ib, ir, idx = std::move(idx), cols](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        if (t.needs_grad(ib)) {
          Tensor<Real> pass = g;
          for (int r : idx) std::fill_n(pass.data() + static_cast<std::size_t>(r) * cols, cols, Real(0));
          detail::add_into(t.grad_mut(ib), pass);
        }
        if (t.needs_grad(ir)) {
          Tensor<Real>& gr = t.grad_mut(ir);
          for (std::size_t i = 0; i < idx.size(); ++i) {
            const Real* src = g.data() + static_cast<std::size_t>(idx[i]) * cols;
            for (std::size_t j = 0; j < cols; ++j) gr.data()[i * cols + j] += src[j];
          }
        }
      },
      "scatter_rows");
}

// out[s] = sum of rows i with segment[i] == s, accumulated in ascending i.
// Segments without rows are zero.
template <typename Real>
Var<Real> segment_sum(Var<Real> a, std::span<const int> segment, std::size_t num_segments) {
  const Tensor<Real>& A = a.value();
  if (segment.size() != A.rows()) throw DataError("segment_sum: one segment id per row required");
  const std::size_t cols = A.cols();
  Tensor<Real> C = A.rank() == 1 ? Tensor<Real>(Shape{num_segments})
                                 : Tensor<Real>::matrix(num_segments, cols);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    detail::check_index(segment[i], num_segments, "segment_sum");
    Real* dst = C.data() + static_cast<std::size_t>(segment[i]) * cols;
    const Real* src = A.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
  }
  std::vector<int> seg(segment.begin(), segment.end());
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(C), {a},
      [ia, seg = std::move(seg), cols](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < seg.size(); ++i) {
          const Real* src = g.data() + static_cast<std::size_t>(seg[i]) * cols;
          for (std::size_t j = 0; j < cols; ++j) ga.data()[i * cols + j] += src[j];
        }
      },
      "segment_sum");
}

// Inverted dropout with a pre-sampled 0/1 mask: a * mask / (1 - rate).
template <typename Real>
Var<Real> dropout(Var<Real> a, const Tensor<Real>& mask, Real rate) {
  const Tensor<Real>& A = a.value();
  detail::require(mask.same_shape(A), "dropout", A, mask);
  if (!(rate >= Real(0) && rate < Real(1))) throw ConfigError("dropout rate must be in [0,1)");
  const Real keep = Real(1) / (Real(1) - rate);
  Tensor<Real> y = A;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i] * keep;
  const std::size_t ia = a.id;
  return a.tape->record(
      std::move(y), {a},
      [ia, mask, keep](Tape<Real>& t, std::size_t self) {
        const Tensor<Real>& g = t.grad(self);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i] * keep;
      },
      "dropout");
}

template <typename Real>
Var<Real> sum(Var<Real> a) {
  Real s = 0;
  for (Real v : a.value().values()) s += v;
  const std::size_t ia = a.id;
  return a.tape->record(
      Tensor<Real>::scalar(s), {a},
      [ia](Tape<Real>& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        for (Real& v : t.grad_mut(ia).values()) v += g;
      },
      "sum");
}

template <typename Real>
Var<Real> sum_squares(Var<Real> a) {
  Real s = 0;
  for (Real v : a.value().values()) s += v * v;
  const std::size_t ia = a.id;
  return a.tape->record(
      Tensor<Real>::scalar(s), {a},
      [ia](Tape<Real>& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        const Tensor<Real>& x = t.value(ia);
        Tensor<Real>& ga = t.grad_mut(ia);
        for (std::size_t i = 0; i < x.size(); ++i) ga[i] += Real(2) * x[i] * g;
      },
      "sum_squares");
}

// x * W + b
template <typename Real>
Var<Real> affine(Var<Real> x, Var<Real> w, Var<Real> b) {
  return add_row(matmul(x, w), b);
}

}  // namespace netgnn::ad
