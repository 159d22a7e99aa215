#include "oamtomo/oam_interface.hpp"

#include <cmath>
#include <cstdlib>

#include "oamtomo/error.hpp"

namespace oamtomo {

double OAMBiphotonKet::norm() const {
  double s = 0.0;
  for (const auto& [k, a] : amplitudes) s += std::norm(a);
  return std::sqrt(s);
}

double PathLabeledKet::squared_norm() const {
  double s = 0.0;
  for (const auto& [k, a] : amplitudes) s += std::norm(a);
  return s;
}

OAMBiphotonKet sfwm_state(const std::map<int, double>& c, int l_max) {
  OAMBiphotonKet ket;
  ket.l_max = l_max;
  for (const auto& [l, coeff] : c) {
    if (l < 0) throw Error(ErrorCode::InvalidInput, "coefficient index must be >= 0, got " + std::to_string(l));
    if (l > l_max)
      throw Error(ErrorCode::InvalidInput,
                  "coefficient index " + std::to_string(l) + " exceeds l_max " + std::to_string(l_max));
    if (!std::isfinite(coeff)) throw Error(ErrorCode::InvalidInput, "non-finite coefficient");
    if (coeff == 0.0) continue;
    if (l == 0) {
      ket.amplitudes[{0, 0}] += coeff;
    } else {
      ket.amplitudes[{l, l}] += coeff;
      ket.amplitudes[{-l, -l}] += coeff;
    }
  }
  const double n = ket.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::AllZeroCoefficients, "all OAM coefficients are zero");
  for (auto& [k, a] : ket.amplitudes) a /= n;
  return ket;
}

PathLabeledKet fork_diffract(const OAMBiphotonKet& ket, bool rotated_anti_stokes) {
  PathLabeledKet out;
  out.l_bound = ket.l_max + 2;
  const int sign_as = rotated_anti_stokes ? -1 : 1;
  for (const auto& [pair, amp] : ket.amplitudes) {
    for (int os : {1, -1}) {
      for (int oas : {1, -1}) {
        const PathKey key{pair.l_s + os, pair.l_as + sign_as * oas, os, oas};
        if (std::abs(key.l_s) > out.l_bound || std::abs(key.l_as) > out.l_bound) continue;
        out.amplitudes[key] += 0.5 * amp;
      }
    }
  }
  return out;
}

PathLabeledKet etalon_filter(const PathLabeledKet& ket) {
  PathLabeledKet out;
  out.l_bound = ket.l_bound;
  for (const auto& [key, amp] : ket.amplitudes)
    if (key.l_s == 0 && key.l_as == 0) out.amplitudes[key] = amp;
  return out;
}

PolarizationKet map_to_polarization(const PathLabeledKet& ket, const InterfaceConfig& config) {
  if (!std::isfinite(config.theta)) throw Error(ErrorCode::InvalidInput, "theta must be finite");
  TwoQubitKet pol;
  const Complex epm = std::polar(1.0, config.theta);
  for (const auto& [key, amp] : ket.amplitudes) {
    if (key.l_s != 0 || key.l_as != 0)
      throw Error(ErrorCode::InvalidInput, "map_to_polarization expects etalon-filtered input");
    const std::size_t s = key.order_s == 1 ? 0 : 1;
    const std::size_t as = key.order_as == 1 ? 0 : 1;
    const Complex phase = key.order_s == -1 ? epm : Complex{1.0, 0.0};
    pol.amp[s * 2 + as] += amp * phase;
  }
  const double n = pol.norm();
  if (!(n > 1e-300))
    throw Error(ErrorCode::EmptyState, "no l=0 component survives etalon filtering");
  return {pol.normalized(), n * n};
}

PolarizationKet run_chain(const std::map<int, double>& c, const InterfaceConfig& config, int l_max) {
  const auto psi = sfwm_state(c, l_max);
  return map_to_polarization(etalon_filter(fork_diffract(psi, config.anti_stokes_rotated)), config);
}

double bell_fidelity_of_chain(const std::map<int, double>& c, const InterfaceConfig& config,
                              BellState target) {
  const auto out = run_chain(c, config);
  return std::norm(bell_state(target).inner(out.ket));
}

}  // namespace oamtomo
