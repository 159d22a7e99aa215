#include "oamtomo/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "oamtomo/error.hpp"

namespace oamtomo {

namespace {

constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kLowerPairs = {
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

const std::array<TwoQubitKet, kNumSettings>& canonical_kets() {
  static const auto kets = [] {
    std::array<TwoQubitKet, kNumSettings> k;
    const auto& s = canonical_settings();
    for (std::size_t i = 0; i < kNumSettings; ++i) k[i] = joint_projector(s[i]);
    return k;
  }();
  return kets;
}

// <psi|B_k|psi> for the 16 Hermitian basis matrices: four diagonal units,
// then for each lower pair (r, c) the real part (E_rc + E_cr) and the
// imaginary part (i E_rc - i E_cr) of rho_rc.
std::array<double, 16> design_row(const TwoQubitKet& psi) {
  std::array<double, 16> row{};
  for (std::size_t i = 0; i < 4; ++i) row[i] = std::norm(psi.amp[i]);
  for (std::size_t k = 0; k < kLowerPairs.size(); ++k) {
    const auto [r, c] = kLowerPairs[k];
    const Complex z = std::conj(psi.amp[r]) * psi.amp[c];
    row[4 + 2 * k] = 2.0 * z.real();
    row[5 + 2 * k] = -2.0 * z.imag();
  }
  return row;
}

Matrix4 hermitian_from_coordinates(const std::array<double, 16>& x) {
  Matrix4 m;
  for (std::size_t i = 0; i < 4; ++i) m(i, i) = x[i];
  for (std::size_t k = 0; k < kLowerPairs.size(); ++k) {
    const auto [r, c] = kLowerPairs[k];
    const Complex v{x[4 + 2 * k], x[5 + 2 * k]};
    m(r, c) = v;
    m(c, r) = std::conj(v);
  }
  return m;
}

double inf_norm(const CholeskyParams& g) {
  double n = 0.0;
  for (double v : g) n = std::max(n, std::abs(v));
  return n;
}

double squared_norm(const CholeskyParams& g) {
  double n = 0.0;
  for (double v : g) n += v * v;
  return n;
}

}  // namespace

const std::array<MeasurementSetting, kNumSettings>& canonical_settings() {
  using B = Basis;
  static const std::array<MeasurementSetting, kNumSettings> settings = {{
      {B::H, B::H}, {B::H, B::V}, {B::V, B::H}, {B::V, B::V},
      {B::H, B::D}, {B::H, B::L}, {B::V, B::D}, {B::V, B::L},
      {B::D, B::H}, {B::L, B::H}, {B::D, B::V}, {B::L, B::V},
      {B::D, B::D}, {B::L, B::R}, {B::R, B::A}, {B::A, B::R},
  }};
  return settings;
}

std::size_t canonical_index(const MeasurementSetting& setting) {
  const auto& s = canonical_settings();
  const auto it = std::find(s.begin(), s.end(), setting);
  if (it == s.end())
    throw Error(ErrorCode::InvalidInput, "setting " + setting.name() + " is not a canonical setting");
  return static_cast<std::size_t>(it - s.begin());
}

SigmaSet SigmaSet::uniform(double sigma) {
  SigmaSet s;
  s.values.fill(sigma);
  return s.floored();
}

SigmaSet SigmaSet::floored() const {
  SigmaSet s = *this;
  for (double& v : s.values)
    if (!(v >= kFloor)) v = kFloor;
  return s;
}

ProbabilitySet predicted_probabilities(const DensityMatrix& rho) {
  ProbabilitySet p;
  const auto& kets = canonical_kets();
  for (std::size_t i = 0; i < kNumSettings; ++i) p[i] = expectation(rho, kets[i]);
  return p;
}

DensityMatrix linear_inversion(std::span<const MeasurementSetting> settings,
                               std::span<const double> probabilities) {
  if (settings.size() != probabilities.size())
    throw Error(ErrorCode::InvalidInput, "settings and probabilities differ in length");
  if (settings.size() < 16)
    throw Error(ErrorCode::SingularSystem,
                "need at least 16 settings, got " + std::to_string(settings.size()));

  std::array<double, 16 * 16> a{};
  std::array<double, 16> b{};
  if (settings.size() == 16) {
    for (std::size_t r = 0; r < 16; ++r) {
      const auto row = design_row(joint_projector(settings[r]));
      std::copy(row.begin(), row.end(), a.begin() + static_cast<std::ptrdiff_t>(r * 16));
      b[r] = probabilities[r];
    }
  } else {
    // Normal equations for the over-determined case.
    for (std::size_t v = 0; v < settings.size(); ++v) {
      const auto row = design_row(joint_projector(settings[v]));
      for (std::size_t i = 0; i < 16; ++i) {
        b[i] += row[i] * probabilities[v];
        for (std::size_t j = 0; j < 16; ++j) a[i * 16 + j] += row[i] * row[j];
      }
    }
  }
  const auto x = solve_linear<16>(a, b);
  if (!x) throw Error(ErrorCode::SingularSystem, "measurement settings are not tomographically complete");
  return DensityMatrix::from_matrix(hermitian_from_coordinates(*x));
}

DensityMatrix linear_inversion(const ProbabilitySet& probs) {
  const auto& s = canonical_settings();
  return linear_inversion(std::span<const MeasurementSetting>(s.data(), s.size()),
                          std::span<const double>(probs.values.data(), probs.values.size()));
}

double mle_cost(const DensityMatrix& rho, const ProbabilitySet& probs, const SigmaSet& sigmas) {
  const ProbabilitySet pred = predicted_probabilities(rho);
  double cost = 0.0;
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    const double r = probs[i] - pred[i];
    cost += r * r / (2.0 * sigmas[i] * sigmas[i]);
  }
  return cost;
}

Matrix4 lower_triangular_from_params(const CholeskyParams& p) {
  Matrix4 t;
  for (std::size_t i = 0; i < 4; ++i) t(i, i) = p[i];
  for (std::size_t k = 0; k < kLowerPairs.size(); ++k) {
    const auto [r, c] = kLowerPairs[k];
    t(r, c) = Complex{p[4 + 2 * k], p[5 + 2 * k]};
  }
  return t;
}

DensityMatrix parametrize(const CholeskyParams& params) {
  const double n = squared_norm(params);
  if (!(n >= 1e-300))
    throw Error(ErrorCode::DegenerateParameters, "Cholesky parameters are all zero");
  const Matrix4 t = lower_triangular_from_params(params);
  Matrix4 m = t.adjoint() * t;
  m *= 1.0 / n;
  return DensityMatrix::from_matrix(hermitian_part(m));
}

CholeskyParams params_from_density(const DensityMatrix& rho, double mix) {
  // T^dagger T with T lower triangular is the Cholesky factorization of the
  // index-reversed matrix, reversed back.
  Matrix4 target = rho.matrix() * (1.0 - mix) + Matrix4::identity() * (mix / 4.0);
  Matrix4 rev;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) rev(r, c) = target(3 - r, 3 - c);

  Matrix4 chol;
  for (std::size_t j = 0; j < 4; ++j) {
    double d = rev(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(chol(j, k));
    if (!(d > 0.0))
      throw Error(ErrorCode::NegativeEigenvalue, "state is not positive definite after mixing");
    chol(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < 4; ++i) {
      Complex s = rev(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= chol(i, k) * std::conj(chol(j, k));
      chol(i, j) = s / chol(j, j).real();
    }
  }

  CholeskyParams p{};
  for (std::size_t i = 0; i < 4; ++i) p[i] = chol(3 - i, 3 - i).real();
  for (std::size_t k = 0; k < kLowerPairs.size(); ++k) {
    const auto [r, c] = kLowerPairs[k];
    const Complex v = std::conj(chol(3 - c, 3 - r));
    p[4 + 2 * k] = v.real();
    p[5 + 2 * k] = v.imag();
  }
  return p;
}

double mle_cost_and_gradient(const CholeskyParams& params, const ProbabilitySet& probs,
                             const SigmaSet& sigmas, CholeskyParams* gradient) {
  const double n = squared_norm(params);
  if (!(n >= 1e-300))
    throw Error(ErrorCode::DegenerateParameters, "Cholesky parameters are all zero");
  const Matrix4 t = lower_triangular_from_params(params);
  const Matrix4 td = t.adjoint();
  Matrix4 rho = td * t;
  rho *= 1.0 / n;

  const auto& kets = canonical_kets();
  std::array<double, kNumSettings> weighted_residual{};
  double cost = 0.0;
  double c = 0.0;
  for (std::size_t v = 0; v < kNumSettings; ++v) {
    const auto& psi = kets[v];
    Complex s = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      Complex row = 0.0;
      for (std::size_t col = 0; col < 4; ++col) row += rho(r, col) * psi.amp[col];
      s += std::conj(psi.amp[r]) * row;
    }
    const double pth = s.real();
    const double w = 1.0 / (sigmas[v] * sigmas[v]);
    const double res = pth - probs[v];
    cost += 0.5 * w * res * res;
    weighted_residual[v] = w * res;
    c += w * res * pth;
  }
  if (gradient == nullptr) return cost;

  // dL = (2/N) Re Tr[(Q - c I) T^dagger dT], Q = sum_v w_v r_v |psi_v><psi_v|.
  Matrix4 q;
  for (std::size_t v = 0; v < kNumSettings; ++v) {
    const auto& psi = kets[v];
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t col = 0; col < 4; ++col)
        q(r, col) += weighted_residual[v] * psi.amp[r] * std::conj(psi.amp[col]);
  }
  for (std::size_t i = 0; i < 4; ++i) q(i, i) -= c;
  const Matrix4 w = q * td;
  const double scale = 2.0 / n;
  auto& g = *gradient;
  for (std::size_t i = 0; i < 4; ++i) g[i] = scale * w(i, i).real();
  for (std::size_t k = 0; k < kLowerPairs.size(); ++k) {
    const auto [r, col] = kLowerPairs[k];
    g[4 + 2 * k] = scale * w(col, r).real();
    g[5 + 2 * k] = -scale * w(col, r).imag();
  }
  return cost;
}

DensityMatrix nearest_physical(const DensityMatrix& rho) {
  const auto eig = jacobi_eigh(rho.matrix());
  double total = 0.0;
  for (double l : eig.values) total += std::max(l, 0.0);
  if (!(total > 1e-12)) return DensityMatrix::maximally_mixed();
  const Matrix4 clipped = spectral_map(eig, [total](double l) { return std::max(l, 0.0) / total; });
  return DensityMatrix::from_matrix(hermitian_part(clipped));
}

MLEResult mle_reconstruct(const ProbabilitySet& probs, const SigmaSet& sigmas_in,
                          const MLEConfig& config) {
  if (config.max_iterations < 1)
    throw Error(ErrorCode::InvalidInput, "max_iterations must be at least 1");
  if (!(config.gradient_tolerance > 0.0))
    throw Error(ErrorCode::InvalidInput, "gradient_tolerance must be positive");
  if (!(config.step_shrink_factor > 0.0 && config.step_shrink_factor < 1.0))
    throw Error(ErrorCode::InvalidInput, "step_shrink_factor must lie in (0, 1)");

  const SigmaSet sigmas = sigmas_in.floored();

  DensityMatrix start = DensityMatrix::maximally_mixed();
  if (config.initial_state_policy == InitialStatePolicy::FromLinearInversion) {
    try {
      start = nearest_physical(linear_inversion(probs));
    } catch (const Error&) {
      start = DensityMatrix::maximally_mixed();
    }
  }

  CholeskyParams x = params_from_density(start);
  {
    const double nx = std::sqrt(squared_norm(x));
    for (double& v : x) v /= nx;
  }
  CholeskyParams g{};
  double f = mle_cost_and_gradient(x, probs, sigmas, &g);

  MLEResult result;
  result.initial_cost = f;

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-300;
  double step = 1.0 / std::max(1.0, std::sqrt(squared_norm(g)));
  CholeskyParams x_prev{};
  CholeskyParams g_prev{};
  bool have_prev = false;

  // Near rank-deficient optima the gradient decays sublinearly and can sit
  // far above any absolute tolerance once the cost is exact to machine
  // precision; a long enough stall counts as convergence.
  constexpr int kStallWindow = 100;
  constexpr double kStallRelative = 1e-14;
  double f_anchor = f;
  int anchor_it = 0;

  int it = 0;
  for (; it < config.max_iterations; ++it) {
    if (inf_norm(g) < config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (it - anchor_it >= kStallWindow) {
      if (f_anchor - f <= kStallRelative * std::abs(f_anchor)) {
        result.converged = true;
        break;
      }
      f_anchor = f;
      anchor_it = it;
    }
    // Barzilai-Borwein trial step, then backtrack until sufficient decrease.
    if (have_prev) {
      double sy = 0.0;
      double ss = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x[i] - x_prev[i];
        const double y = g[i] - g_prev[i];
        sy += s * y;
        ss += s * s;
      }
      if (sy > 0.0 && std::isfinite(ss / sy)) step = ss / sy;
      else step *= 2.0;
    }
    const double gg = squared_norm(g);
    CholeskyParams trial{};
    double f_trial = 0.0;
    bool accepted = false;
    while (step > kMinStep) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - step * g[i];
      if (squared_norm(trial) >= 1e-300) {
        f_trial = mle_cost_and_gradient(trial, probs, sigmas, nullptr);
        if (f_trial <= f - kArmijo * step * gg) {
          accepted = true;
          break;
        }
      }
      step *= config.step_shrink_factor;
    }
    if (!accepted) break;  // no descent possible at machine precision

    x_prev = x;
    g_prev = g;
    have_prev = true;
    x = trial;
    // The cost is scale invariant; keep |x| = 1 so the gradient scale is fixed.
    const double nx = std::sqrt(squared_norm(x));
    for (double& v : x) v /= nx;
    f = mle_cost_and_gradient(x, probs, sigmas, &g);
  }
  if (!result.converged && inf_norm(g) < config.gradient_tolerance) result.converged = true;

  result.rho = parametrize(x);
  result.cost = f;
  result.iterations = it;
  return result;
}

}  // namespace oamtomo
