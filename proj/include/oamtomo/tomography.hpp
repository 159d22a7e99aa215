#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "oamtomo/quantum.hpp"

namespace oamtomo {

inline constexpr std::size_t kNumSettings = 16;

/// The sixteen joint settings in their fixed order:
/// HH HV VH VV HD HL VD VL DH LH DV LV DD LR RA AR.
const std::array<MeasurementSetting, kNumSettings>& canonical_settings();

/// Position of `setting` in canonical_settings(); throws InvalidInput if the
/// setting is not one of the sixteen.
std::size_t canonical_index(const MeasurementSetting& setting);

/// One real value per canonical setting, stored in canonical order.
struct SettingValues {
  std::array<double, kNumSettings> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double at(const MeasurementSetting& s) const { return values[canonical_index(s)]; }
  double& at(const MeasurementSetting& s) { return values[canonical_index(s)]; }
};

/// Projection probabilities. Values derived from noisy counts can fall
/// slightly outside [0, 1]; they are kept as measured.
struct ProbabilitySet : SettingValues {};

/// Per-setting standard deviations in probability units.
struct SigmaSet : SettingValues {
  static constexpr double kFloor = 1e-6;

  static SigmaSet uniform(double sigma);
  /// Copy with every entry raised to at least kFloor.
  SigmaSet floored() const;
};

ProbabilitySet predicted_probabilities(const DensityMatrix& rho);

/// Unique Hermitian unit-trace matrix reproducing the sixteen canonical
/// probabilities. No positivity is imposed.
DensityMatrix linear_inversion(const ProbabilitySet& probs);

/// Same, for an arbitrary list of at least sixteen settings (least squares
/// when over-determined). Throws SingularSystem if the settings are not
/// tomographically complete.
DensityMatrix linear_inversion(std::span<const MeasurementSetting> settings,
                               std::span<const double> probabilities);

/// Weighted least-squares misfit sum_v (P_v - <psi_v|rho|psi_v>)^2 / (2 sigma_v^2).
double mle_cost(const DensityMatrix& rho, const ProbabilitySet& probs, const SigmaSet& sigmas);

using CholeskyParams = std::array<double, kNumSettings>;

/// Lower-triangular T from 16 reals: entries 0..3 are the real diagonal,
/// then (re, im) pairs for (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
Matrix4 lower_triangular_from_params(const CholeskyParams& params);

/// rho = T^dagger T / Tr(T^dagger T). Always Hermitian, PSD and trace one.
DensityMatrix parametrize(const CholeskyParams& params);

/// Parameters whose parametrize() image is (1 - mix) rho + mix I/4.
/// rho must be PSD within 1e-10.
CholeskyParams params_from_density(const DensityMatrix& rho, double mix = 1e-9);

/// Cost as a function of the parameters, with its analytic gradient.
double mle_cost_and_gradient(const CholeskyParams& params, const ProbabilitySet& probs,
                             const SigmaSet& sigmas, CholeskyParams* gradient);

/// Eigenvalues clipped at zero, then renormalized. Falls back to I/4 when
/// nothing positive remains.
DensityMatrix nearest_physical(const DensityMatrix& rho);

enum class InitialStatePolicy { FromLinearInversion, MaximallyMixed };

struct MLEConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-10;
  double step_shrink_factor = 0.5;
  InitialStatePolicy initial_state_policy = InitialStatePolicy::FromLinearInversion;
};

struct MLEResult {
  DensityMatrix rho;
  double cost = 0.0;
  double initial_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes mle_cost over physical states by gradient descent on the
/// Cholesky parameters with a backtracking (Armijo) line search. Fully
/// deterministic.
MLEResult mle_reconstruct(const ProbabilitySet& probs, const SigmaSet& sigmas,
                          const MLEConfig& config = {});

}  // namespace oamtomo
