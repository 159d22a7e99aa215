#pragma once

// Small fixed-size dense complex matrices and the Hermitian routines the
// quantum layer needs. Everything here is header-only; sizes are 3 or 4 in
// practice, so the loops are written for clarity, not blocking.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>

namespace oamtomo {

using Complex = std::complex<double>;

template <std::size_t N>
struct CMatrix {
  std::array<Complex, N * N> a{};

  static constexpr std::size_t size() { return N; }

  Complex& operator()(std::size_t r, std::size_t c) { return a[r * N + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return a[r * N + c]; }

  static CMatrix identity() {
    CMatrix m;
    for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(const std::array<double, N>& d) {
    CMatrix m;
    for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
    return m;
  }

  CMatrix adjoint() const {
    CMatrix m;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < N; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
  }

  Complex trace() const {
    Complex t = 0.0;
    for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
    return t;
  }

  CMatrix& operator+=(const CMatrix& o) {
    for (std::size_t i = 0; i < N * N; ++i) a[i] += o.a[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    for (std::size_t i = 0; i < N * N; ++i) a[i] -= o.a[i];
    return *this;
  }
  CMatrix& operator*=(Complex s) {
    for (auto& v : a) v *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix l, const CMatrix& r) { return l += r; }
  friend CMatrix operator-(CMatrix l, const CMatrix& r) { return l -= r; }
  friend CMatrix operator*(CMatrix m, Complex s) { return m *= s; }
  friend CMatrix operator*(Complex s, CMatrix m) { return m *= s; }

  friend CMatrix operator*(const CMatrix& l, const CMatrix& r) {
    CMatrix m;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        const Complex lik = l(i, k);
        if (lik == Complex{}) continue;
        for (std::size_t j = 0; j < N; ++j) m(i, j) += lik * r(k, j);
      }
    return m;
  }
};

using Matrix4 = CMatrix<4>;
using Matrix3 = CMatrix<3>;

template <std::size_t N>
double max_abs_entry(const CMatrix<N>& m) {
  double best = 0.0;
  for (const auto& v : m.a) best = std::max(best, std::abs(v));
  return best;
}

template <std::size_t N>
double max_abs_diff(const CMatrix<N>& l, const CMatrix<N>& r) {
  return max_abs_entry(l - r);
}

template <std::size_t N>
bool is_hermitian(const CMatrix<N>& m, double tol) {
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = r; c < N; ++c)
      if (std::abs(m(r, c) - std::conj(m(c, r))) > tol) return false;
  return true;
}

// Exact Hermitian part; diagonal made real.
template <std::size_t N>
CMatrix<N> hermitian_part(const CMatrix<N>& m) {
  CMatrix<N> h;
  for (std::size_t r = 0; r < N; ++r) {
    h(r, r) = m(r, r).real();
    for (std::size_t c = r + 1; c < N; ++c) {
      const Complex v = 0.5 * (m(r, c) + std::conj(m(c, r)));
      h(r, c) = v;
      h(c, r) = std::conj(v);
    }
  }
  return h;
}

template <std::size_t N>
struct EigenDecomposition {
  std::array<double, N> values{};  // ascending
  CMatrix<N> vectors;              // column k is the eigenvector of values[k]
  int sweeps = 0;
  bool converged = false;
};

// Cyclic Jacobi for Hermitian matrices. Each rotation first removes the phase
// of the pivot element, then applies the classic real rotation.
// Convergence: off-diagonal Frobenius norm below 1e-13 (relative to the
// matrix norm when that exceeds one), at most 100 sweeps.
template <std::size_t N>
EigenDecomposition<N> jacobi_eigh(const CMatrix<N>& input) {
  constexpr int kMaxSweeps = 100;
  constexpr double kOffTol = 1e-13;

  CMatrix<N> m = hermitian_part(input);
  CMatrix<N> v = CMatrix<N>::identity();

  double frob = 0.0;
  for (const auto& x : m.a) frob += std::norm(x);
  const double tol = kOffTol * std::max(1.0, std::sqrt(frob));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < N; ++c)
        if (r != c) s += std::norm(m(r, c));
    return std::sqrt(s);
  };

  EigenDecomposition<N> out;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() < tol) {
      out.converged = true;
      out.sweeps = sweep;
      break;
    }
    for (std::size_t p = 0; p + 1 < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double r = std::abs(m(p, q));
        if (r == 0.0) continue;
        const Complex phase = m(p, q) / r;  // e^{i alpha}
        const double app = m(p, p).real();
        const double aqq = m(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;

        // Rotation block: [[c, s], [-s e^{-ia}, c e^{-ia}]] on (p, q).
        const Complex vpp = cs;
        const Complex vpq = sn;
        const Complex vqp = -sn * std::conj(phase);
        const Complex vqq = cs * std::conj(phase);

        for (std::size_t k = 0; k < N; ++k) {
          const Complex akp = m(k, p);
          const Complex akq = m(k, q);
          m(k, p) = akp * vpp + akq * vqp;
          m(k, q) = akp * vpq + akq * vqq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const Complex apk = m(p, k);
          const Complex aqk = m(q, k);
          m(p, k) = std::conj(vpp) * apk + std::conj(vqp) * aqk;
          m(q, k) = std::conj(vpq) * apk + std::conj(vqq) * aqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        m(p, p) = m(p, p).real();
        m(q, q) = m(q, q).real();

        for (std::size_t k = 0; k < N; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * vpp + vkq * vqp;
          v(k, q) = vkp * vpq + vkq * vqq;
        }
      }
    }
    out.sweeps = sweep + 1;
  }
  if (!out.converged && off_norm() < tol) out.converged = true;

  std::array<std::size_t, N> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return m(l, l).real() < m(r, r).real(); });
  for (std::size_t k = 0; k < N; ++k) {
    out.values[k] = m(order[k], order[k]).real();
    for (std::size_t r = 0; r < N; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

// V diag(f(lambda)) V^dagger.
template <std::size_t N, class F>
CMatrix<N> spectral_map(const EigenDecomposition<N>& e, F&& f) {
  CMatrix<N> out;
  for (std::size_t k = 0; k < N; ++k) {
    const double fk = f(e.values[k]);
    if (fk == 0.0) continue;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < N; ++c)
        out(r, c) += fk * e.vectors(r, k) * std::conj(e.vectors(c, k));
  }
  return out;
}

// Dense real solve by Gaussian elimination with partial pivoting. Returns
// nullopt when a pivot falls below pivot_tol times the largest row scale.
template <std::size_t N>
std::optional<std::array<double, N>> solve_linear(std::array<double, N * N> a,
                                                  std::array<double, N> b,
                                                  double pivot_tol = 1e-12) {
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return std::nullopt;

  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r * N + col]) > std::abs(a[piv * N + col])) piv = r;
    if (std::abs(a[piv * N + col]) < pivot_tol * scale) return std::nullopt;
    if (piv != col) {
      for (std::size_t c = 0; c < N; ++c) std::swap(a[piv * N + c], a[col * N + c]);
      std::swap(b[piv], b[col]);
    }
    const double d = a[col * N + col];
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r * N + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < N; ++c) a[r * N + c] -= f * a[col * N + c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i * N + c] * x[c];
    x[i] = s / a[i * N + i];
  }
  return x;
}

}  // namespace oamtomo
