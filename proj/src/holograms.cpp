#include "oamtomo/holograms.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "oamtomo/error.hpp"

namespace oamtomo {

namespace {

template <class F>
PhaseMask fill_mask(const GratingSpec& spec, F&& phase_at) {
  spec.validate();
  PhaseMask m;
  m.width = spec.width;
  m.height = spec.height;
  m.cx = spec.cx;
  m.cy = spec.cy;
  m.phase.resize(static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height));
  for (int row = 0; row < spec.height; ++row) {
    const double dy = row + 0.5 - spec.cy;
    for (int col = 0; col < spec.width; ++col) {
      const double dx = col + 0.5 - spec.cx;
      m.phase[static_cast<std::size_t>(row) * spec.width + col] = wrap_phase(phase_at(dx, dy));
    }
  }
  return m;
}

[[noreturn]] void io_error(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::Io, path.string() + ": " + what);
}

}  // namespace

double wrap_phase(double phase) {
  double r = std::fmod(phase, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double blazed_phase(double x, double period) {
  const double u = x / period;
  const double r = kTwoPi * (u - std::floor(u));
  return r >= kTwoPi ? 0.0 : r;
}

GratingSpec GratingSpec::centered(int width, int height, double period) {
  return {period, width, height, width / 2.0, height / 2.0};
}

void GratingSpec::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidInput, "raster size must be positive");
  if (!(period >= 2.0))
    throw Error(ErrorCode::InvalidInput, "grating period must be at least 2 px");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw Error(ErrorCode::InvalidInput, "center must be finite");
}

HologramKind hologram_kind_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "spiral") return HologramKind::Spiral;
  if (s == "blazed") return HologramKind::BlazedGrating;
  if (s == "lh") return HologramKind::LH;
  if (s == "lv") return HologramKind::LV;
  if (s == "ld") return HologramKind::LD;
  if (s == "la") return HologramKind::LA;
  if (s == "ll") return HologramKind::LL;
  if (s == "lr") return HologramKind::LR;
  if (s == "dual") return HologramKind::DualOrder;
  if (s == "dual-rot") return HologramKind::DualOrderRotated;
  throw Error(ErrorCode::InvalidInput, "unknown hologram kind '" + std::string(name) + "'");
}

HologramKind tomography_kind_for(Basis b) {
  switch (b) {
    case Basis::H: return HologramKind::LH;
    case Basis::V: return HologramKind::LV;
    case Basis::D: return HologramKind::LD;
    case Basis::A: return HologramKind::LA;
    case Basis::L: return HologramKind::LL;
    case Basis::R: return HologramKind::LR;
  }
  return HologramKind::LH;
}

PhaseMask spiral_phase(int l_prime, const GratingSpec& spec) {
  return fill_mask(spec, [l_prime](double dx, double dy) { return l_prime * std::atan2(dy, dx); });
}

PhaseMask blazed_grating(const GratingSpec& spec) {
  const double g = spec.period;
  return fill_mask(spec, [g](double dx, double) { return blazed_phase(dx, g); });
}

PhaseMask tomography_pattern(HologramKind kind, const GratingSpec& spec) {
  const double g = spec.period;
  switch (kind) {
    case HologramKind::LH:
      return fill_mask(spec, [g](double dx, double dy) { return -std::atan2(dy, dx) + blazed_phase(dx, g); });
    case HologramKind::LV:
      return fill_mask(spec, [g](double dx, double dy) { return std::atan2(dy, dx) + blazed_phase(dx, g); });
    case HologramKind::LD:
      return fill_mask(spec, [g](double dx, double) { return kPi * unit_step(dx) + blazed_phase(dx, g); });
    case HologramKind::LA:
      return fill_mask(spec, [g](double dx, double dy) { return kPi * unit_step(dy) + blazed_phase(dx, g); });
    case HologramKind::LL:
      return fill_mask(spec, [g](double dx, double dy) { return kPi * unit_step(dx + dy) + blazed_phase(dx, g); });
    case HologramKind::LR:
      return fill_mask(spec, [g](double dx, double dy) { return kPi * unit_step(dx - dy) + blazed_phase(dx, g); });
    default:
      break;
  }
  throw Error(ErrorCode::InvalidInput, "not a tomography hologram kind");
}

PhaseMask dual_order_pattern(const GratingSpec& spec, bool rotated) {
  const double g = spec.period;
  const double s = rotated ? -1.0 : 1.0;
  return fill_mask(spec, [g, s](double dx, double dy) {
    const double x = s * dx;
    const double y = s * dy;
    return std::cos(std::atan2(y, x) + blazed_phase(x, g)) >= 0.0 ? 0.0 : kPi;
  });
}

PhaseMask make_hologram(HologramKind kind, int l_prime, const GratingSpec& spec) {
  switch (kind) {
    case HologramKind::Spiral: return spiral_phase(l_prime, spec);
    case HologramKind::BlazedGrating: return blazed_grating(spec);
    case HologramKind::DualOrder: return dual_order_pattern(spec, false);
    case HologramKind::DualOrderRotated: return dual_order_pattern(spec, true);
    default: return tomography_pattern(kind, spec);
  }
}

PhaseMask rotate_180(const PhaseMask& mask) {
  PhaseMask r = mask;
  std::reverse(r.phase.begin(), r.phase.end());
  r.cx = mask.width - mask.cx;
  r.cy = mask.height - mask.cy;
  return r;
}

std::map<int, Complex> fourier_order_coefficients(int period_samples, int max_order) {
  if (max_order < 0 || period_samples < 4 * std::max(max_order, 1))
    throw Error(ErrorCode::InvalidInput, "need period_samples >= 4 * max_order");
  std::map<int, Complex> out;
  const double n_samples = period_samples;
  for (int n = 0; n <= max_order; ++n) {
    Complex s = 0.0;
    for (int k = 0; k < period_samples; ++k) {
      const double t = kTwoPi * (k + 0.5) / n_samples;
      const double f = std::cos(t) >= 0.0 ? 1.0 : -1.0;
      s += f * std::polar(1.0, -n * t);
    }
    out[n] = s * (2.0 / n_samples);
  }
  return out;
}

std::uint8_t phase_to_gray(double phase) {
  const double v = std::floor(phase / kTwoPi * 256.0);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<std::uint8_t> to_gray8(const PhaseMask& mask) {
  std::vector<std::uint8_t> px(mask.phase.size());
  std::transform(mask.phase.begin(), mask.phase.end(), px.begin(), phase_to_gray);
  return px;
}

void export_mask(const PhaseMask& mask, const std::filesystem::path& path, ImageFormat format) {
  const GrayImage img{mask.width, mask.height, to_gray8(mask)};
  if (format == ImageFormat::Pgm8) write_pgm(img, path);
  else write_png(img, path);
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) io_error(path, "write failed");
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open for reading");

  auto next_token = [&]() {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
      if (c == '#') {
        while (c != EOF && c != '\n') c = in.get();
      } else if (std::isspace(c)) {
        if (!tok.empty()) break;
      } else {
        tok.push_back(static_cast<char>(c));
      }
      c = in.get();
    }
    return tok;
  };

  if (next_token() != "P5") io_error(path, "not a binary PGM (P5)");
  GrayImage img;
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    if (std::stoi(next_token()) != 255) io_error(path, "only maxval 255 is supported");
  } catch (const std::logic_error&) {
    io_error(path, "malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0) io_error(path, "bad PGM dimensions");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) io_error(path, "truncated PGM data");
  return img;
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr))
    io_error(path, std::string("PNG write failed: ") + png.message);
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    io_error(path, std::string("PNG read failed: ") + png.message);
  png.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    io_error(path, std::string("PNG decode failed: ") + png.message);
  }
  return img;
}

}  // namespace oamtomo
