#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>
#include <vector>

#include "oamtomo/linalg.hpp"
#include "oamtomo/quantum.hpp"

namespace oamtomo {

inline constexpr double kTwoPi = 6.283185307179586476925;
inline constexpr double kPi = 3.141592653589793238463;

/// Maps any finite angle into [0, 2pi).
double wrap_phase(double phase);

/// 2 pi mod(x / period, 1).
double blazed_phase(double x, double period);

/// Unit step with Theta(0) = 1.
inline double unit_step(double x) { return x >= 0.0 ? 1.0 : 0.0; }

/// Raster geometry. Phases are evaluated at pixel centers (col + 0.5,
/// row + 0.5); the azimuth is atan2(y - cy, x - cx) with y growing with the
/// row index.
struct GratingSpec {
  double period = 16.0;
  int width = 1080;
  int height = 1080;
  double cx = 540.0;
  double cy = 540.0;

  /// Centered raster of the given size.
  static GratingSpec centered(int width, int height, double period);
  void validate() const;
};

struct PhaseMask {
  int width = 0;
  int height = 0;
  double cx = 0.0;
  double cy = 0.0;
  std::vector<double> phase;  // row-major, every value in [0, 2pi)

  double at(int col, int row) const { return phase[static_cast<std::size_t>(row) * width + col]; }
};

enum class HologramKind { Spiral, BlazedGrating, LH, LV, LD, LA, LL, LR, DualOrder, DualOrderRotated };

/// CLI names: spiral, blazed, lh, lv, ld, la, ll, lr, dual, dual-rot.
HologramKind hologram_kind_from_string(std::string_view name);

/// Tomography hologram that projects onto the OAM analogue of `b`
/// (H <-> LH, V <-> LV, ...).
HologramKind tomography_kind_for(Basis b);

PhaseMask spiral_phase(int l_prime, const GratingSpec& spec);
PhaseMask blazed_grating(const GratingSpec& spec);
/// kind must be one of LH, LV, LD, LA, LL, LR.
PhaseMask tomography_pattern(HologramKind kind, const GratingSpec& spec);
/// Binary {0, pi} mask from the sign of cos(phi + grating).
PhaseMask dual_order_pattern(const GratingSpec& spec, bool rotated);
PhaseMask make_hologram(HologramKind kind, int l_prime, const GratingSpec& spec);

/// Pixel-grid rotation by 180 degrees.
PhaseMask rotate_180(const PhaseMask& mask);

/// Discrete Fourier coefficients (2/N) sum_k f(t_k) exp(-i n t_k) of the
/// binarized wave f = sgn(cos t), sampled at t_k = 2 pi (k + 1/2) / N, for
/// n = 0..max_order. The real part of order n is the cosine coefficient, so
/// order 1 approaches 4/pi.
std::map<int, Complex> fourier_order_coefficients(int period_samples, int max_order);

enum class ImageFormat { Pgm8, Png8 };

/// floor(phase / 2pi * 256), clamped to [0, 255].
std::uint8_t phase_to_gray(double phase);
std::vector<std::uint8_t> to_gray8(const PhaseMask& mask);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void export_mask(const PhaseMask& mask, const std::filesystem::path& path, ImageFormat format);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);
void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

}  // namespace oamtomo
