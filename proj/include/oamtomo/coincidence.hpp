#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oamtomo/quantum.hpp"
#include "oamtomo/tomography.hpp"

namespace oamtomo {

/// Half-open bin range [start, end).
struct BinRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end > start ? end - start : 0; }
  friend bool operator==(const BinRange&, const BinRange&) = default;
};

/// Binned cross-correlation counts for one joint setting.
struct CoincidenceHistogram {
  MeasurementSetting setting;
  double bin_width_ns = 1.0;
  std::vector<std::int64_t> bins;
  /// Residual stray-light/dark-count level (counts per bin).
  double env_per_bin = 0.0;
  std::string acquisition_note;

  void validate() const;
};

struct BackgroundEstimate {
  double per_bin_level = 0.0;
  double env_per_bin_level = 0.0;
};

/// Net windowed signal normalized by the accidental level:
///   sum_{window} (count - per_bin_level) / (per_bin_level - env_per_bin_level).
/// Throws ZeroDenominator when the denominator is not above 1e-12.
double normalize_histogram(const CoincidenceHistogram& hist, const BackgroundEstimate& bg,
                           BinRange window);

/// Mean count per bin over `tail`; at least 10 bins are required.
double estimate_background(const CoincidenceHistogram& hist, BinRange tail);

/// Sixteen histograms in canonical order, the signal window, and the
/// baseline region the accidental level is estimated from.
struct TomographyRecord {
  std::array<CoincidenceHistogram, kNumSettings> histograms;
  BinRange window;
  BinRange tail;

  void validate() const;
  BackgroundEstimate background(std::size_t setting_index) const;
};

/// Per-setting net windowed counts N_v and normalization denominators d_v,
/// so that G_v = N_v / d_v.
struct NetCounts {
  std::array<double, kNumSettings> net{};
  std::array<double, kNumSettings> denominator{};
  /// Geometry needed to rebuild the raw counts: the background level is
  /// denominator + env_per_bin, the raw windowed count is
  /// net + level * window_bins and the tail total is level * tail_bins.
  std::array<double, kNumSettings> env_per_bin{};
  double window_bins = 0.0;
  double tail_bins = 0.0;
};

NetCounts extract_net_counts(const TomographyRecord& record);

/// P_v = G_v / (G_HH + G_HV + G_VH + G_VV), sigma_v = sqrt(max(N_v, 0)) / d_v
/// over the same sum, floored. Throws EmptySignal when the sum is not positive.
std::pair<ProbabilitySet, SigmaSet> probabilities_from_counts(const NetCounts& counts);
std::pair<ProbabilitySet, SigmaSet> probabilities_from_record(const TomographyRecord& record);

/// Parameters of the synthetic source. The correlated peak is a one-sided
/// exponential starting at peak_start_bin and integrated over eight decay
/// times.
struct SourceModel {
  double total_correlated_pairs = 2e4;
  double peak_decay_time_ns = 50.0;
  std::size_t peak_start_bin = 100;
  double accidental_per_bin = 50.0;
  double env_per_bin = 0.0;
  std::size_t num_bins = 1500;
  double bin_width_ns = 1.0;

  static constexpr double kWindowDecayTimes = 8.0;

  BinRange peak_window() const;
  void validate() const;
};

/// 64-bit seed splitting: splitmix64 finalizer of seed + golden * (index + 1).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Expected counts per bin (before Poisson sampling).
std::vector<double> expected_histogram(const DensityMatrix& rho, const MeasurementSetting& setting,
                                       const SourceModel& model);

CoincidenceHistogram simulate_histogram(const DensityMatrix& rho, const MeasurementSetting& setting,
                                        const SourceModel& model, std::uint64_t seed);

/// Histogram v uses derive_seed(seed, v). Window is the model peak window,
/// tail runs from the window end to the last bin.
TomographyRecord simulate_record(const DensityMatrix& rho, const SourceModel& model,
                                 std::uint64_t seed);

struct UncertaintyReport {
  double fidelity_mean = 0.0;
  double fidelity_std = 0.0;
  double chsh_mean = 0.0;
  double chsh_std = 0.0;
  int trials = 0;    // successful trials
  int failures = 0;  // trials whose reconstruction threw
};

/// Which counts the Monte Carlo perturbs, each as C' = max(0, C + sqrt(C) z).
/// Raw: the windowed count and the tail total of every setting, after which
/// background level, net count and denominator are re-derived; this carries
/// the accidental-background fluctuations. Net: only the net windowed
/// counts, with the background held fixed.
enum class CountResampling { Raw, Net };

/// Resamples every net count as N' = max(0, N + sqrt(max(N, 0)) z), z ~ N(0, 1),
/// re-derives the probabilities, reruns MLE and records fidelity to `target`
/// and chsh_max. Trial t draws from derive_seed(seed, t); results are
/// aggregated in trial order, so any `threads` value gives the same report.
UncertaintyReport monte_carlo_uncertainty(const NetCounts& counts, const TwoQubitKet& target,
                                          int trials, std::uint64_t seed,
                                          const MLEConfig& mle_config = {}, unsigned threads = 0,
                                          CountResampling resampling = CountResampling::Raw);
UncertaintyReport monte_carlo_uncertainty(const TomographyRecord& record, const TwoQubitKet& target,
                                          int trials, std::uint64_t seed,
                                          const MLEConfig& mle_config = {}, unsigned threads = 0,
                                          CountResampling resampling = CountResampling::Raw);

}  // namespace oamtomo
