#include "oamtomo/format.hpp"

#include <cmath>
#include <cstdio>

namespace oamtomo {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string format_with_uncertainty(double value, double sigma, bool percent, int zero_decimals) {
  const double scale = percent ? 100.0 : 1.0;
  const double v = value * scale;
  const double u = std::abs(sigma) * scale;
  const std::string suffix = percent ? "%" : "";

  if (!(u > 0.0) || !std::isfinite(u)) return fixed(v, zero_decimals) + "(0)" + suffix;

  int place = static_cast<int>(std::floor(std::log10(u))) - 1;
  double digits = std::round(u / std::pow(10.0, place));
  if (digits >= 100.0) {
    ++place;
    digits = std::round(u / std::pow(10.0, place));
  }
  const int decimals = place < 0 ? -place : 0;
  const double u_rounded = digits * std::pow(10.0, place);

  std::string unc;
  if (place < 0 && u_rounded >= 1.0) unc = fixed(u_rounded, decimals);
  else if (place < 0) unc = fixed(digits, 0);
  else unc = fixed(u_rounded, 0);
  const double shown = place > 0 ? std::round(v / std::pow(10.0, place)) * std::pow(10.0, place) : v;
  return fixed(shown, decimals) + "(" + unc + ")" + suffix;
}

}  // namespace oamtomo
