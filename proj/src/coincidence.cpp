#include "oamtomo/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "oamtomo/error.hpp"

namespace oamtomo {

namespace {

constexpr double kDenominatorFloor = 1e-12;
constexpr std::size_t kMinTailBins = 10;

void check_range(const CoincidenceHistogram& hist, BinRange r, const char* what) {
  if (r.end <= r.start || r.end > hist.bins.size())
    throw Error(ErrorCode::InvalidInput,
                std::string(what) + " [" + std::to_string(r.start) + ", " + std::to_string(r.end) +
                    ") does not fit histogram " + hist.setting.name() + " with " +
                    std::to_string(hist.bins.size()) + " bins");
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double v = 0.0;
  for (double x : xs) v += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(v / static_cast<double>(xs.size() - 1));
  return m;
}

}  // namespace

void CoincidenceHistogram::validate() const {
  if (bins.empty()) throw Error(ErrorCode::InvalidInput, "histogram " + setting.name() + " has no bins");
  if (!(bin_width_ns > 0.0))
    throw Error(ErrorCode::InvalidInput, "histogram " + setting.name() + " has non-positive bin width");
  if (!(env_per_bin >= 0.0))
    throw Error(ErrorCode::InvalidInput, "histogram " + setting.name() + " has negative env_per_bin");
  for (auto c : bins)
    if (c < 0) throw Error(ErrorCode::InvalidInput, "histogram " + setting.name() + " has a negative count");
}

double normalize_histogram(const CoincidenceHistogram& hist, const BackgroundEstimate& bg,
                           BinRange window) {
  check_range(hist, window, "window");
  const double denom = bg.per_bin_level - bg.env_per_bin_level;
  if (!(denom > kDenominatorFloor))
    throw Error(ErrorCode::ZeroDenominator,
                "setting " + hist.setting.name() + ": background level " +
                    std::to_string(bg.per_bin_level) + " does not exceed env level " +
                    std::to_string(bg.env_per_bin_level));
  double net = 0.0;
  for (std::size_t k = window.start; k < window.end; ++k)
    net += static_cast<double>(hist.bins[k]) - bg.per_bin_level;
  return net / denom;
}

double estimate_background(const CoincidenceHistogram& hist, BinRange tail) {
  if (tail.length() < kMinTailBins)
    throw Error(ErrorCode::RegionTooSmall,
                "setting " + hist.setting.name() + ": tail of " + std::to_string(tail.length()) +
                    " bins, need at least 10");
  check_range(hist, tail, "tail");
  double s = 0.0;
  for (std::size_t k = tail.start; k < tail.end; ++k) s += static_cast<double>(hist.bins[k]);
  return s / static_cast<double>(tail.length());
}

void TomographyRecord::validate() const {
  const auto& settings = canonical_settings();
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    if (!(histograms[i].setting == settings[i]))
      throw Error(ErrorCode::InvalidInput, "record slot " + std::to_string(i) + " holds " +
                                               histograms[i].setting.name() + ", expected " +
                                               settings[i].name());
    histograms[i].validate();
    check_range(histograms[i], window, "window");
    check_range(histograms[i], tail, "tail");
  }
  if (tail.start < window.end && window.start < tail.end)
    throw Error(ErrorCode::InvalidInput, "background tail overlaps the signal window");
  if (tail.length() < kMinTailBins)
    throw Error(ErrorCode::RegionTooSmall,
                "tail of " + std::to_string(tail.length()) + " bins, need at least 10");
}

BackgroundEstimate TomographyRecord::background(std::size_t i) const {
  const auto& h = histograms.at(i);
  return {estimate_background(h, tail), h.env_per_bin};
}

NetCounts extract_net_counts(const TomographyRecord& record) {
  record.validate();
  NetCounts c;
  c.window_bins = static_cast<double>(record.window.length());
  c.tail_bins = static_cast<double>(record.tail.length());
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    const auto& h = record.histograms[i];
    const BackgroundEstimate bg = record.background(i);
    const double g = normalize_histogram(h, bg, record.window);
    c.denominator[i] = bg.per_bin_level - bg.env_per_bin_level;
    c.net[i] = g * c.denominator[i];
    c.env_per_bin[i] = bg.env_per_bin_level;
  }
  return c;
}

std::pair<ProbabilitySet, SigmaSet> probabilities_from_counts(const NetCounts& counts) {
  std::array<double, kNumSettings> g{};
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    if (!(counts.denominator[i] > kDenominatorFloor))
      throw Error(ErrorCode::ZeroDenominator,
                  "setting " + canonical_settings()[i].name() + " has no usable background level");
    g[i] = counts.net[i] / counts.denominator[i];
  }
  const double sum = g[0] + g[1] + g[2] + g[3];
  if (!(sum > 0.0))
    throw Error(ErrorCode::EmptySignal, "computational-basis signal sum " + std::to_string(sum) +
                                            " is not positive");
  ProbabilitySet p;
  SigmaSet s;
  for (std::size_t i = 0; i < kNumSettings; ++i) {
    p[i] = g[i] / sum;
    s[i] = std::sqrt(std::max(counts.net[i], 0.0)) / counts.denominator[i] / sum;
  }
  // Exact unit sum over the computational quadruple.
  const double comp = p[0] + p[1] + p[2] + p[3];
  for (std::size_t i = 0; i < 4; ++i) p[i] /= comp;
  return {p, s.floored()};
}

std::pair<ProbabilitySet, SigmaSet> probabilities_from_record(const TomographyRecord& record) {
  return probabilities_from_counts(extract_net_counts(record));
}

BinRange SourceModel::peak_window() const {
  const auto width = static_cast<std::size_t>(
      std::ceil(kWindowDecayTimes * peak_decay_time_ns / bin_width_ns - 1e-9));
  return {peak_start_bin, peak_start_bin + std::max<std::size_t>(width, 1)};
}

void SourceModel::validate() const {
  if (!(total_correlated_pairs >= 0.0) || !(accidental_per_bin >= 0.0) || !(env_per_bin >= 0.0))
    throw Error(ErrorCode::InvalidInput, "source model rates must be nonnegative");
  if (!(peak_decay_time_ns > 0.0) || !(bin_width_ns > 0.0))
    throw Error(ErrorCode::InvalidInput, "decay time and bin width must be positive");
  if (peak_window().end > num_bins)
    throw Error(ErrorCode::InvalidInput, "peak window [" + std::to_string(peak_window().start) + ", " +
                                             std::to_string(peak_window().end) +
                                             ") exceeds num_bins " + std::to_string(num_bins));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> expected_histogram(const DensityMatrix& rho, const MeasurementSetting& setting,
                                       const SourceModel& model) {
  model.validate();
  std::vector<double> mean(model.num_bins, model.accidental_per_bin + model.env_per_bin);
  const double p = std::max(0.0, projection_probability(rho, setting));
  const double pairs = model.total_correlated_pairs * p;
  if (pairs <= 0.0) return mean;

  const BinRange w = model.peak_window();
  const double tau = model.peak_decay_time_ns;
  const double dt = model.bin_width_ns;
  const double total = -std::expm1(-static_cast<double>(w.length()) * dt / tau);
  for (std::size_t k = w.start; k < w.end; ++k) {
    const double t0 = static_cast<double>(k - w.start) * dt;
    const double frac = std::exp(-t0 / tau) * -std::expm1(-dt / tau);
    mean[k] += pairs * frac / total;
  }
  return mean;
}

CoincidenceHistogram simulate_histogram(const DensityMatrix& rho, const MeasurementSetting& setting,
                                        const SourceModel& model, std::uint64_t seed) {
  const std::vector<double> mean = expected_histogram(rho, setting, model);
  std::mt19937_64 rng(seed);
  CoincidenceHistogram h;
  h.setting = setting;
  h.bin_width_ns = model.bin_width_ns;
  h.env_per_bin = model.env_per_bin;
  h.acquisition_note = "simulated, seed " + std::to_string(seed);
  h.bins.resize(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    if (mean[k] <= 0.0) {
      h.bins[k] = 0;
      continue;
    }
    std::poisson_distribution<std::int64_t> pois(mean[k]);
    h.bins[k] = pois(rng);
  }
  return h;
}

TomographyRecord simulate_record(const DensityMatrix& rho, const SourceModel& model,
                                 std::uint64_t seed) {
  model.validate();
  TomographyRecord r;
  const auto& settings = canonical_settings();
  for (std::size_t i = 0; i < kNumSettings; ++i)
    r.histograms[i] = simulate_histogram(rho, settings[i], model, derive_seed(seed, i));
  r.window = model.peak_window();
  r.tail = {r.window.end, model.num_bins};
  return r;
}

UncertaintyReport monte_carlo_uncertainty(const NetCounts& counts, const TwoQubitKet& target,
                                          int trials, std::uint64_t seed,
                                          const MLEConfig& mle_config, unsigned threads,
                                          CountResampling resampling) {
  if (trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be at least 1");
  if (resampling == CountResampling::Raw && !(counts.tail_bins > 0.0))
    throw Error(ErrorCode::InvalidInput, "raw resampling needs the window and tail geometry");
  const DensityMatrix target_rho = DensityMatrix::from_pure(target);

  struct Outcome {
    bool ok = false;
    double fidelity = 0.0;
    double chsh = 0.0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(trials));

  auto run_trial = [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto perturb = [&](double c) { return std::max(0.0, c + std::sqrt(std::max(c, 0.0)) * normal(rng)); };
    NetCounts resampled = counts;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
      if (resampling == CountResampling::Net) {
        resampled.net[i] = perturb(counts.net[i]);
      } else {
        const double level = counts.denominator[i] + counts.env_per_bin[i];
        const double window = perturb(counts.net[i] + level * counts.window_bins);
        const double new_level = perturb(level * counts.tail_bins) / counts.tail_bins;
        resampled.net[i] = window - new_level * counts.window_bins;
        resampled.denominator[i] = new_level - counts.env_per_bin[i];
      }
    }
    try {
      const auto [p, s] = probabilities_from_counts(resampled);
      const MLEResult mle = mle_reconstruct(p, s, mle_config);
      outcomes[t] = {true, fidelity(mle.rho, target_rho), chsh_max(mle.rho)};
    } catch (const Error&) {
      outcomes[t] = {};
    }
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(trials));
  if (workers <= 1) {
    for (std::size_t t = 0; t < outcomes.size(); ++t) run_trial(t);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < outcomes.size(); t += workers) run_trial(t);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<double> fids;
  std::vector<double> chshs;
  UncertaintyReport rep;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failures;
      continue;
    }
    fids.push_back(o.fidelity);
    chshs.push_back(o.chsh);
  }
  rep.trials = static_cast<int>(fids.size());
  const Moments fm = moments(fids);
  const Moments cm = moments(chshs);
  rep.fidelity_mean = fm.mean;
  rep.fidelity_std = fm.std;
  rep.chsh_mean = cm.mean;
  rep.chsh_std = cm.std;
  return rep;
}

UncertaintyReport monte_carlo_uncertainty(const TomographyRecord& record, const TwoQubitKet& target,
                                          int trials, std::uint64_t seed,
                                          const MLEConfig& mle_config, unsigned threads,
                                          CountResampling resampling) {
  return monte_carlo_uncertainty(extract_net_counts(record), target, trials, seed, mle_config,
                                 threads, resampling);
}

}  // namespace oamtomo
