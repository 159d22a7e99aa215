#pragma once

#include <map>

#include "oamtomo/quantum.hpp"

namespace oamtomo {

/// Joint azimuthal indices of the Stokes and anti-Stokes photons.
struct OamPair {
  int l_s = 0;
  int l_as = 0;
  auto operator<=>(const OamPair&) const = default;
};

struct OAMBiphotonKet {
  std::map<OamPair, Complex> amplitudes;
  int l_max = 4;

  double norm() const;
};

/// Which diffraction order each photon took (each +1 or -1).
struct PathKey {
  int l_s = 0;
  int l_as = 0;
  int order_s = 1;
  int order_as = 1;
  auto operator<=>(const PathKey&) const = default;
};

struct PathLabeledKet {
  std::map<PathKey, Complex> amplitudes;
  int l_bound = 6;

  double squared_norm() const;
};

struct InterfaceConfig {
  /// Relative phase of the electro-optic modulator, placed on the Stokes
  /// -1 order.
  double theta = 0.0;
  /// Anti-Stokes hologram displayed rotated by 180 degrees.
  bool anti_stokes_rotated = false;

  InterfaceConfig rotated_180() const {
    InterfaceConfig c = *this;
    c.anti_stokes_rotated = !c.anti_stokes_rotated;
    return c;
  }
};

struct PolarizationKet {
  TwoQubitKet ket;              // normalized
  double success_weight = 0.0;  // squared norm surviving the filters
};

inline constexpr int kDefaultLMax = 4;

/// c0 |0,0> + sum_{l>=1} c_l (|l,l> + |-l,-l>), normalized.
/// Keys of `c` are l >= 0. Throws AllZeroCoefficients.
OAMBiphotonKet sfwm_state(const std::map<int, double>& c, int l_max = kDefaultLMax);

/// Each component splits into the four (order_s, order_as) paths with
/// amplitude 1/2; the Stokes index shifts by order_s, the anti-Stokes index
/// by order_as, or by -order_as when its hologram is rotated.
PathLabeledKet fork_diffract(const OAMBiphotonKet& ket, bool rotated_anti_stokes);

/// Projects both photons onto l = 0. No renormalization.
PathLabeledKet etalon_filter(const PathLabeledKet& ket);

/// Order +1 -> H, order -1 -> V (half-wave plate on the -1 path), EPM phase
/// on the Stokes -1 path, then PBS recombination. Throws EmptyState when
/// nothing survived the filters.
PolarizationKet map_to_polarization(const PathLabeledKet& ket, const InterfaceConfig& config);

/// sfwm_state -> fork_diffract -> etalon_filter -> map_to_polarization.
PolarizationKet run_chain(const std::map<int, double>& c, const InterfaceConfig& config,
                          int l_max = kDefaultLMax);

/// |<target|output>|^2 for the full chain.
double bell_fidelity_of_chain(const std::map<int, double>& c, const InterfaceConfig& config,
                              BellState target);

}  // namespace oamtomo
