#include "oamtomo/quantum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "oamtomo/error.hpp"

namespace oamtomo {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const Complex kI{0.0, 1.0};

// Eigenvalues at or below this fraction of the spectral radius are rounding
// noise; without the cut, sqrt() turns 1e-17 into 3e-9.
constexpr double kRelativeNoiseFloor = 1e-13;
constexpr double kClampFloor = -1e-6;

using Pauli = std::array<std::array<Complex, 2>, 2>;

const std::array<Pauli, 3>& paulis() {
  static const std::array<Pauli, 3> p = {{
      {{{0.0, 1.0}, {1.0, 0.0}}},
      {{{0.0, -kI}, {kI, 0.0}}},
      {{{1.0, 0.0}, {0.0, -1.0}}},
  }};
  return p;
}

}  // namespace

char to_char(Basis b) {
  switch (b) {
    case Basis::H: return 'H';
    case Basis::V: return 'V';
    case Basis::D: return 'D';
    case Basis::A: return 'A';
    case Basis::L: return 'L';
    case Basis::R: return 'R';
  }
  return '?';
}

Basis basis_from_char(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'H': return Basis::H;
    case 'V': return Basis::V;
    case 'D': return Basis::D;
    case 'A': return Basis::A;
    case 'L': return Basis::L;
    case 'R': return Basis::R;
    default: break;
  }
  throw Error(ErrorCode::InvalidInput, std::string("unknown basis label '") + c + "'");
}

QubitKet basis_ket(Basis b) {
  switch (b) {
    case Basis::H: return {1.0, 0.0};
    case Basis::V: return {0.0, 1.0};
    case Basis::D: return {kInvSqrt2, kInvSqrt2};
    case Basis::A: return {kInvSqrt2, -kInvSqrt2};
    case Basis::L: return {kInvSqrt2, kInvSqrt2 * kI};
    case Basis::R: return {kInvSqrt2, -kInvSqrt2 * kI};
  }
  return {};
}

double TwoQubitKet::norm() const {
  double s = 0.0;
  for (const auto& z : amp) s += std::norm(z);
  return std::sqrt(s);
}

TwoQubitKet TwoQubitKet::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidInput, "cannot normalize a zero ket");
  TwoQubitKet k = *this;
  for (auto& z : k.amp) z /= n;
  return k;
}

Complex TwoQubitKet::inner(const TwoQubitKet& other) const {
  Complex s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += std::conj(amp[i]) * other.amp[i];
  return s;
}

TwoQubitKet tensor(const QubitKet& s, const QubitKet& as) {
  return TwoQubitKet{{s[0] * as[0], s[0] * as[1], s[1] * as[0], s[1] * as[1]}};
}

std::string to_string(BellState s) {
  switch (s) {
    case BellState::PhiPlus: return "phi+";
    case BellState::PhiMinus: return "phi-";
    case BellState::PsiPlus: return "psi+";
    case BellState::PsiMinus: return "psi-";
  }
  return "?";
}

BellState bell_state_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (BellState s : kAllBellStates)
    if (to_string(s) == lower) return s;
  throw Error(ErrorCode::InvalidInput,
              "unknown Bell state '" + std::string(name) + "' (expected phi+, phi-, psi+, psi-)");
}

TwoQubitKet bell_state(BellState kind) {
  switch (kind) {
    case BellState::PhiPlus: return {{kInvSqrt2, 0.0, 0.0, kInvSqrt2}};
    case BellState::PhiMinus: return {{kInvSqrt2, 0.0, 0.0, -kInvSqrt2}};
    case BellState::PsiPlus: return {{0.0, kInvSqrt2, kInvSqrt2, 0.0}};
    case BellState::PsiMinus: return {{0.0, kInvSqrt2, -kInvSqrt2, 0.0}};
  }
  return {};
}

std::string MeasurementSetting::name() const {
  return std::string{to_char(stokes), to_char(anti_stokes)};
}

MeasurementSetting MeasurementSetting::parse(std::string_view two_letters) {
  if (two_letters.size() != 2)
    throw Error(ErrorCode::InvalidInput,
                "measurement setting must be two letters, got '" + std::string(two_letters) + "'");
  return {basis_from_char(two_letters[0]), basis_from_char(two_letters[1])};
}

TwoQubitKet joint_projector(const MeasurementSetting& setting) {
  return tensor(basis_ket(setting.stokes), basis_ket(setting.anti_stokes));
}

DensityMatrix DensityMatrix::from_matrix(const Matrix4& m) {
  for (const auto& z : m.a)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorCode::InvalidInput, "density matrix has non-finite entries");
  if (!is_hermitian(m, 1e-9))
    throw Error(ErrorCode::NonHermitianInput, "density matrix is not Hermitian");
  Matrix4 h = hermitian_part(m);
  const double tr = h.trace().real();
  if (std::abs(tr - 1.0) > 1e-8)
    throw Error(ErrorCode::InvalidInput, "density matrix trace is " + std::to_string(tr));
  h *= 1.0 / tr;
  return DensityMatrix(h);
}

DensityMatrix DensityMatrix::from_pure(const TwoQubitKet& ket) {
  const TwoQubitKet k = ket.normalized();
  Matrix4 m;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) m(r, c) = k.amp[r] * std::conj(k.amp[c]);
  return DensityMatrix(hermitian_part(m));
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Matrix4::diagonal({0.25, 0.25, 0.25, 0.25}));
}

DensityMatrix DensityMatrix::depolarized(const DensityMatrix& rho, double p) {
  Matrix4 m = rho.matrix() * p + Matrix4::identity() * ((1.0 - p) / 4.0);
  return DensityMatrix(m);
}

double expectation(const DensityMatrix& rho, const TwoQubitKet& psi) {
  Complex s = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    Complex row = 0.0;
    for (std::size_t c = 0; c < 4; ++c) row += rho(r, c) * psi.amp[c];
    s += std::conj(psi.amp[r]) * row;
  }
  return s.real();
}

double projection_probability(const DensityMatrix& rho, const MeasurementSetting& setting) {
  return expectation(rho, joint_projector(setting));
}

Matrix4 hermitian_sqrt(const Matrix4& m) {
  if (!is_hermitian(m, 1e-9 * std::max(1.0, max_abs_entry(m))))
    throw Error(ErrorCode::NonHermitianInput, "hermitian_sqrt input is not Hermitian");
  const auto eig = jacobi_eigh(m);
  const double radius = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  if (eig.values.front() < kClampFloor)
    throw Error(ErrorCode::NegativeEigenvalue,
                "eigenvalue " + std::to_string(eig.values.front()) + " below -1e-6");
  const double floor = kRelativeNoiseFloor * radius;
  return spectral_map(eig, [floor](double l) { return l <= floor ? 0.0 : std::sqrt(l); });
}

double fidelity(const DensityMatrix& rho_exp, const DensityMatrix& rho_tar) {
  const Matrix4 s = hermitian_sqrt(rho_tar.matrix());
  const Matrix4 inner = hermitian_part(s * rho_exp.matrix() * s);
  const double tr = hermitian_sqrt(inner).trace().real();
  return tr * tr;
}

std::array<std::array<double, 3>, 3> correlation_tensor(const DensityMatrix& rho) {
  std::array<std::array<double, 3>, 3> t{};
  const auto& p = paulis();
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t n = 0; n < 3; ++n) {
      // Tr[rho (A x B)] = sum_{ij,kl} rho_{(kl),(ij)} A_ik B_jl
      Complex s = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
          for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t l = 0; l < 2; ++l)
              s += rho(k * 2 + l, i * 2 + j) * p[m][i][k] * p[n][j][l];
      t[m][n] = s.real();
    }
  }
  return t;
}

double chsh_max(const DensityMatrix& rho) {
  const auto t = correlation_tensor(rho);
  Matrix3 tt;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += t[k][r] * t[k][c];
      tt(r, c) = s;
    }
  const auto eig = jacobi_eigh(tt);
  const double m = std::max(0.0, eig.values[2] + eig.values[1]);
  return 2.0 * std::sqrt(m);
}

double min_eigenvalue(const DensityMatrix& rho) { return jacobi_eigh(rho.matrix()).values.front(); }

bool is_physical(const DensityMatrix& rho, double tol) {
  return min_eigenvalue(rho) >= -tol && std::abs(rho.matrix().trace().real() - 1.0) <= tol;
}

}  // namespace oamtomo
