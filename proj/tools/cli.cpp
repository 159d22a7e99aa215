#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "oamtomo/coincidence.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/format.hpp"
#include "oamtomo/holograms.hpp"
#include "oamtomo/io.hpp"
#include "oamtomo/oam_interface.hpp"
#include "oamtomo/tomography.hpp"

namespace oamtomo::cli {

namespace {

using io::Json;

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kIoFailure;
    case ErrorCode::SingularSystem:
    case ErrorCode::NegativeEigenvalue:
    case ErrorCode::DegenerateParameters: return kNumericalFailure;
    default: return kInvalidInput;
  }
}

std::string complex_str(const Complex& z) {
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(6) << z.real() << z.imag() << "i";
  return os.str();
}

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string state;
  std::string rho_path;
  std::string out;
  std::uint64_t seed = 1;
  SourceModel model;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  if (o.state.empty() == o.rho_path.empty())
    throw Error(ErrorCode::InvalidInput, "give exactly one of --state or --rho");
  const DensityMatrix rho = o.rho_path.empty()
                                ? DensityMatrix::from_pure(bell_state(bell_state_from_string(o.state)))
                                : io::density_from_json(io::read_json_file(o.rho_path));
  if (!is_physical(rho, 1e-9))
    throw Error(ErrorCode::InvalidInput, "source density matrix is not physical");
  const TomographyRecord rec = simulate_record(rho, o.model, o.seed);
  io::write_json_file(o.out, io::to_json(rec));

  out << "wrote " << o.out << " (window [" << rec.window.start << ", " << rec.window.end
      << "), seed " << o.seed << ")\n";
  out << "setting  total counts\n";
  for (const auto& h : rec.histograms) {
    std::int64_t total = 0;
    for (auto c : h.bins) total += c;
    out << "  " << h.setting.name() << "     " << total << "\n";
  }
  return kOk;
}

// --- reconstruct ------------------------------------------------------------

struct ReconstructOptions {
  std::string record;
  std::string out;
  std::string target;
  bool strict = false;
  MLEConfig mle;
};

int cmd_reconstruct(const ReconstructOptions& o, std::ostream& out) {
  const TomographyRecord rec = io::record_from_json(io::read_json_file(o.record));
  const auto [probs, sigmas] = probabilities_from_record(rec);
  const DensityMatrix li = linear_inversion(probs);
  const MLEResult mle = mle_reconstruct(probs, sigmas, o.mle);

  Json j{{"probabilities", io::to_json(probs)},
         {"sigmas", io::to_json(sigmas)},
         {"linear_inversion",
          {{"rho", io::to_json(li)},
           {"physical", is_physical(li, 1e-10)},
           {"min_eigenvalue", min_eigenvalue(li)}}},
         {"mle",
          {{"rho", io::to_json(mle.rho)},
           {"physical", is_physical(mle.rho, 1e-10)},
           {"cost", mle.cost},
           {"initial_cost", mle.initial_cost},
           {"iterations", mle.iterations},
           {"converged", mle.converged}}}};

  out << "linear inversion: physical=" << (is_physical(li, 1e-10) ? "yes" : "no")
      << " min eigenvalue=" << min_eigenvalue(li) << "\n";
  out << "mle: cost=" << mle.cost << " iterations=" << mle.iterations
      << " converged=" << (mle.converged ? "yes" : "no") << "\n";
  if (!o.target.empty()) {
    const BellState t = bell_state_from_string(o.target);
    const DensityMatrix tar = DensityMatrix::from_pure(bell_state(t));
    const double f = fidelity(mle.rho, tar);
    j["mle"]["fidelity"] = f;
    j["mle"]["chsh_max"] = chsh_max(mle.rho);
    j["target"] = to_string(t);
    out << "fidelity to " << to_string(t) << " = " << std::fixed << std::setprecision(4) << f
        << ", S_max = " << chsh_max(mle.rho) << "\n";
  }
  io::write_json_file(o.out, j);
  if (o.strict && !mle.converged) throw NumericalFailure("MLE did not converge (--strict)");
  return kOk;
}

// --- report -----------------------------------------------------------------

struct ReportOptions {
  std::string record;
  std::string target;
  std::string out;
  int trials = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool strict = false;
  std::string resample = "raw";
  MLEConfig mle;
};

int cmd_report(const ReportOptions& o, std::ostream& out) {
  CountResampling resampling = CountResampling::Raw;
  if (o.resample == "net") resampling = CountResampling::Net;
  else if (o.resample != "raw") throw Error(ErrorCode::InvalidInput, "--resample must be raw or net");
  const TomographyRecord rec = io::record_from_json(io::read_json_file(o.record));
  const BellState t = bell_state_from_string(o.target);
  const TwoQubitKet target = bell_state(t);
  const NetCounts counts = extract_net_counts(rec);
  const auto [probs, sigmas] = probabilities_from_counts(counts);
  const MLEResult mle = mle_reconstruct(probs, sigmas, o.mle);
  const double f = fidelity(mle.rho, DensityMatrix::from_pure(target));
  const double s = chsh_max(mle.rho);
  const UncertaintyReport rep = monte_carlo_uncertainty(counts, target, o.trials, o.seed, o.mle, o.threads, resampling);

  Json j = io::to_json(rep);
  j["target"] = to_string(t);
  j["fidelity"] = f;
  j["chsh_max"] = s;
  j["seed"] = o.seed;
  j["resample"] = o.resample;
  j["fidelity_formatted"] = format_with_uncertainty(f, rep.fidelity_std, true);
  j["chsh_formatted"] = format_with_uncertainty(s, rep.chsh_std, false, 2);
  if (!o.out.empty()) io::write_json_file(o.out, j);

  out << "target   " << to_string(t) << "\n";
  out << "trials   " << rep.trials << " (" << rep.failures << " failed)\n";
  out << "F      = " << j["fidelity_formatted"].get<std::string>() << "\n";
  out << "S_max  = " << j["chsh_formatted"].get<std::string>() << "\n";
  if (o.strict && !mle.converged) throw NumericalFailure("MLE did not converge (--strict)");
  return kOk;
}

// --- oam-map ----------------------------------------------------------------

struct OamMapOptions {
  std::string config;
  std::optional<double> c0;
  std::optional<double> c1;
  std::vector<std::string> extra_c;
  bool rotated = false;
  std::optional<double> theta;
  std::string out;
};

int cmd_oam_map(const OamMapOptions& o, std::ostream& out) {
  io::ChainConfig chain;
  if (!o.config.empty()) chain = io::chain_from_json(io::read_json_file(o.config));
  if (o.c0) chain.c[0] = *o.c0;
  if (o.c1) chain.c[1] = *o.c1;
  for (const auto& kv : o.extra_c) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidInput, "--c expects l=value, got '" + kv + "'");
    try {
      chain.c[std::stoi(kv.substr(0, eq))] = std::stod(kv.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidInput, "--c expects l=value, got '" + kv + "'");
    }
  }
  if (o.rotated) chain.interface.anti_stokes_rotated = true;
  if (o.theta) chain.interface.theta = *o.theta;

  const PolarizationKet pol = run_chain(chain.c, chain.interface);
  static constexpr const char* kLabels[] = {"HH", "HV", "VH", "VV"};
  out << "output polarization ket:\n";
  for (std::size_t i = 0; i < 4; ++i) out << "  " << kLabels[i] << "  " << complex_str(pol.ket.amp[i]) << "\n";
  out << "success weight  " << std::fixed << std::setprecision(6) << pol.success_weight << "\n";
  out << "fidelity to Bell states:\n";
  Json fids = Json::object();
  for (BellState b : kAllBellStates) {
    const double f = std::norm(bell_state(b).inner(pol.ket));
    fids[to_string(b)] = f;
    out << "  " << std::left << std::setw(5) << to_string(b) << std::right << std::fixed
        << std::setprecision(3) << f << "\n";
  }
  if (!o.out.empty())
    io::write_json_file(o.out, Json{{"chain", io::to_json(chain)},
                                    {"ket", io::to_json(pol.ket)},
                                    {"success_weight", pol.success_weight},
                                    {"fidelity", fids}});
  return kOk;
}

// --- holo -------------------------------------------------------------------

struct HoloOptions {
  std::string kind = "spiral";
  int l = 1;
  double period = 16.0;
  std::string size = "1080x1080";
  std::string out;
  std::string format = "pgm";
  bool rot = false;
};

int cmd_holo(const HoloOptions& o, std::ostream& out) {
  int w = 0;
  int h = 0;
  char x = 0;
  std::istringstream ss(o.size);
  if (!(ss >> w >> x >> h) || (x != 'x' && x != 'X') || w <= 0 || h <= 0)
    throw Error(ErrorCode::InvalidInput, "--size expects WxH, got '" + o.size + "'");
  HologramKind kind = hologram_kind_from_string(o.kind);
  if (o.rot) {
    if (kind != HologramKind::DualOrder && kind != HologramKind::DualOrderRotated)
      throw Error(ErrorCode::InvalidInput, "--rot applies to --kind dual only");
    kind = HologramKind::DualOrderRotated;
  }
  ImageFormat fmt;
  if (o.format == "pgm") fmt = ImageFormat::Pgm8;
  else if (o.format == "png") fmt = ImageFormat::Png8;
  else throw Error(ErrorCode::InvalidInput, "--format must be pgm or png");

  const PhaseMask mask = make_hologram(kind, o.l, GratingSpec::centered(w, h, o.period));
  export_mask(mask, o.out, fmt);
  out << "wrote " << o.out << " (" << w << "x" << h << ", " << o.kind << (o.rot ? ", rotated" : "")
      << ")\n";
  return kOk;
}

void add_mle_options(CLI::App* sub, MLEConfig& cfg) {
  sub->add_option("--max-iter", cfg.max_iterations, "MLE iteration cap")->capture_default_str();
  sub->add_option("--grad-tol", cfg.gradient_tolerance, "MLE gradient infinity-norm tolerance")
      ->capture_default_str();
  sub->add_option("--shrink", cfg.step_shrink_factor, "Backtracking step shrink factor")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-qubit tomography, OAM-to-polarization interface simulation and SLM holograms",
               "oamtomo"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Synthesize a 16-setting coincidence record");
  simulate->add_option("--state", sim.state, "Bell state source: phi+, phi-, psi+, psi-");
  simulate->add_option("--rho", sim.rho_path, "Density matrix JSON to use as source");
  simulate->add_option("--pairs", sim.model.total_correlated_pairs,
                       "Correlated pairs summed over HH, HV, VH, VV")->capture_default_str();
  simulate->add_option("--tau", sim.model.peak_decay_time_ns, "Peak decay time (ns)")->capture_default_str();
  simulate->add_option("--peak-start", sim.model.peak_start_bin, "First bin of the peak")->capture_default_str();
  simulate->add_option("--accidental", sim.model.accidental_per_bin, "Accidental counts per bin")
      ->capture_default_str();
  simulate->add_option("--env", sim.model.env_per_bin, "Stray-light counts per bin")->capture_default_str();
  simulate->add_option("--bins", sim.model.num_bins, "Number of bins")->capture_default_str();
  simulate->add_option("--bin-width", sim.model.bin_width_ns, "Bin width (ns)")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output record JSON")->required();

  ReconstructOptions rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Linear inversion and MLE from a record");
  reconstruct->add_option("--record", rec.record, "Record JSON")->required();
  reconstruct->add_option("--out", rec.out, "Output JSON with both density matrices")->required();
  reconstruct->add_option("--target", rec.target, "Optional Bell state for a fidelity line");
  reconstruct->add_flag("--strict", rec.strict, "Exit 3 if MLE does not converge");
  add_mle_options(reconstruct, rec.mle);

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Fidelity and CHSH with Monte Carlo error bars");
  report->add_option("--record", rep.record, "Record JSON")->required();
  report->add_option("--target", rep.target, "Target Bell state")->required();
  report->add_option("--trials", rep.trials, "Monte Carlo resamples")->capture_default_str();
  report->add_option("--seed", rep.seed, "Random seed")->capture_default_str();
  report->add_option("--threads", rep.threads, "Worker threads, 0 = all cores")->capture_default_str();
  report->add_option("--out", rep.out, "Output report JSON");
  report->add_flag("--strict", rep.strict, "Exit 3 if MLE does not converge");
  report->add_option("--resample", rep.resample, "Monte Carlo counts: raw (window and tail) or net")
      ->capture_default_str();
  add_mle_options(report, rep.mle);

  OamMapOptions oam;
  auto* oam_map = app.add_subcommand("oam-map", "Run the OAM-to-polarization chain");
  oam_map->add_option("--config", oam.config, "Chain JSON {\"c\":{...},\"rotated\":..,\"theta_rad\":..}");
  oam_map->add_option("--c0", oam.c0, "Coefficient c_0");
  oam_map->add_option("--c1", oam.c1, "Coefficient c_1");
  oam_map->add_option("--c", oam.extra_c, "Further coefficients as l=value");
  oam_map->add_flag("--rotated", oam.rotated, "Anti-Stokes hologram rotated by 180 degrees");
  oam_map->add_option("--theta", oam.theta, "EPM phase (rad)");
  oam_map->add_option("--out", oam.out, "Optional JSON output");

  HoloOptions holo;
  auto* holo_cmd = app.add_subcommand("holo", "Write an SLM phase mask");
  holo_cmd->add_option("--kind", holo.kind, "spiral|blazed|lh|lv|ld|la|ll|lr|dual|dual-rot")
      ->capture_default_str();
  holo_cmd->add_option("--l", holo.l, "Topological charge for spiral")->capture_default_str();
  holo_cmd->add_option("--period", holo.period, "Grating period (px)")->capture_default_str();
  holo_cmd->add_option("--size", holo.size, "Raster WxH")->capture_default_str();
  holo_cmd->add_option("--out", holo.out, "Output image path")->required();
  holo_cmd->add_option("--format", holo.format, "pgm|png")->capture_default_str();
  holo_cmd->add_flag("--rot", holo.rot, "Rotate the dual-order pattern by 180 degrees");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (reconstruct->parsed()) return cmd_reconstruct(rec, out);
    if (report->parsed()) return cmd_report(rep, out);
    if (oam_map->parsed()) return cmd_oam_map(oam, out);
    if (holo_cmd->parsed()) return cmd_holo(holo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::EmptyState)
      err << "hint: every diffraction order shifts l by one, so only |l|=1 components reach l=0\n";
    return exit_code_for(e.code());
  } catch (const NumericalFailure& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kInvalidInput;
}

}  // namespace oamtomo::cli
