#pragma once

#include <array>
#include <string>
#include <string_view>

#include "oamtomo/linalg.hpp"

namespace oamtomo {

/// Single-photon projection basis. H/V are the computational states; D/A,
/// L/R the diagonal and circular superpositions.
enum class Basis { H, V, D, A, L, R };

char to_char(Basis b);
Basis basis_from_char(char c);

using QubitKet = std::array<Complex, 2>;

QubitKet basis_ket(Basis b);

/// Two-qubit pure state, amplitudes ordered (HH, HV, VH, VV).
struct TwoQubitKet {
  std::array<Complex, 4> amp{};

  double norm() const;
  TwoQubitKet normalized() const;
  Complex inner(const TwoQubitKet& other) const;  // <this|other>
};

TwoQubitKet tensor(const QubitKet& stokes, const QubitKet& anti_stokes);

enum class BellState { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array<BellState, 4> kAllBellStates = {
    BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus};

std::string to_string(BellState s);
/// Accepts "phi+", "phi-", "psi+", "psi-" (case-insensitive).
BellState bell_state_from_string(std::string_view name);

TwoQubitKet bell_state(BellState kind);

/// Joint projection: Stokes photon onto `stokes`, anti-Stokes onto `anti_stokes`.
struct MeasurementSetting {
  Basis stokes = Basis::H;
  Basis anti_stokes = Basis::H;

  std::string name() const;
  static MeasurementSetting parse(std::string_view two_letters);

  friend bool operator==(const MeasurementSetting&, const MeasurementSetting&) = default;
};

TwoQubitKet joint_projector(const MeasurementSetting& setting);

/// Hermitian, unit-trace 4x4 operator. Positivity is not enforced; see
/// is_physical().
class DensityMatrix {
 public:
  DensityMatrix() : DensityMatrix(maximally_mixed()) {}

  /// Rejects inputs that are not Hermitian within 1e-9 or whose trace is
  /// not 1 within 1e-8. The stored matrix is the exact Hermitian part
  /// rescaled to trace exactly one.
  static DensityMatrix from_matrix(const Matrix4& m);
  static DensityMatrix from_pure(const TwoQubitKet& ket);
  static DensityMatrix maximally_mixed();
  /// p * rho + (1 - p) * I/4.
  static DensityMatrix depolarized(const DensityMatrix& rho, double p);

  const Matrix4& matrix() const { return m_; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

 private:
  explicit DensityMatrix(const Matrix4& m) : m_(m) {}
  Matrix4 m_;
};

double expectation(const DensityMatrix& rho, const TwoQubitKet& psi);
double projection_probability(const DensityMatrix& rho, const MeasurementSetting& setting);

/// PSD square root through the eigendecomposition. Eigenvalues in
/// [-1e-6, 0) are treated as zero; anything lower throws NegativeEigenvalue.
Matrix4 hermitian_sqrt(const Matrix4& m);

/// Uhlmann fidelity [Tr sqrt(sqrt(t) e sqrt(t))]^2.
double fidelity(const DensityMatrix& rho_exp, const DensityMatrix& rho_tar);

/// T_mn = Tr[rho (sigma_m x sigma_n)], m, n over x, y, z.
std::array<std::array<double, 3>, 3> correlation_tensor(const DensityMatrix& rho);

/// Largest CHSH value over all local measurement directions:
/// 2 sqrt(m1 + m2) with m1, m2 the two largest eigenvalues of T^T T.
double chsh_max(const DensityMatrix& rho);

double min_eigenvalue(const DensityMatrix& rho);
bool is_physical(const DensityMatrix& rho, double tol);

}  // namespace oamtomo
