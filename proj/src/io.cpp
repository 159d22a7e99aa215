#include "oamtomo/io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "oamtomo/error.hpp"

namespace oamtomo::io {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidInput, "field '" + field + "': " + what);
}

const Json& require(const Json& j, const std::string& field) {
  if (!j.is_object()) bad_field(field, "enclosing value is not a JSON object");
  const auto it = j.find(field);
  if (it == j.end()) bad_field(field, "missing");
  return *it;
}

template <class T>
T get_as(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    bad_field(field, e.what());
  }
}

double get_number(const Json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

BinRange range_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    bad_field(field, "expected [start, end] integers");
  const auto s = j[0].get<long long>();
  const auto e = j[1].get<long long>();
  if (s < 0 || e < s) bad_field(field, "expected 0 <= start <= end");
  return {static_cast<std::size_t>(s), static_cast<std::size_t>(e)};
}

Json matrix_part(const Matrix4& m, bool imag) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < 4; ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < 4; ++c) row.push_back(imag ? m(r, c).imag() : m(r, c).real());
    rows.push_back(row);
  }
  return rows;
}

SettingValues setting_values_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "expected an object keyed by setting names");
  SettingValues v;
  for (const auto& s : canonical_settings()) v.at(s) = get_number(require(j, s.name()), s.name());
  for (const auto& [key, val] : j.items()) canonical_index(MeasurementSetting::parse(key));
  return v;
}

}  // namespace

Json to_json(const DensityMatrix& rho) {
  return Json{{"re", matrix_part(rho.matrix(), false)}, {"im", matrix_part(rho.matrix(), true)}};
}

DensityMatrix density_from_json(const Json& j) {
  Matrix4 m;
  for (const char* part : {"re", "im"}) {
    const Json& rows = require(j, part);
    if (!rows.is_array() || rows.size() != 4) bad_field(part, "expected 4 rows");
    for (std::size_t r = 0; r < 4; ++r) {
      if (!rows[r].is_array() || rows[r].size() != 4) bad_field(part, "expected 4 columns per row");
      for (std::size_t c = 0; c < 4; ++c) {
        const double v = get_number(rows[r][c], part);
        if (std::string(part) == "re") m(r, c).real(v);
        else m(r, c).imag(v);
      }
    }
  }
  return DensityMatrix::from_matrix(m);
}

Json to_json(const SettingValues& values) {
  Json j = Json::object();
  for (const auto& s : canonical_settings()) j[s.name()] = values.at(s);
  return j;
}

ProbabilitySet probabilities_from_json(const Json& j) {
  ProbabilitySet p;
  p.values = setting_values_from_json(j).values;
  return p;
}

SigmaSet sigmas_from_json(const Json& j) {
  SigmaSet s;
  s.values = setting_values_from_json(j).values;
  return s.floored();
}

Json to_json(const CoincidenceHistogram& hist) {
  Json j{{"setting", hist.setting.name()},
         {"bin_width_ns", hist.bin_width_ns},
         {"bins", hist.bins},
         {"env_per_bin", hist.env_per_bin}};
  if (!hist.acquisition_note.empty()) j["note"] = hist.acquisition_note;
  return j;
}

CoincidenceHistogram histogram_from_json(const Json& j) {
  CoincidenceHistogram h;
  h.setting = MeasurementSetting::parse(get_as<std::string>(require(j, "setting"), "setting"));
  h.bin_width_ns = get_number(require(j, "bin_width_ns"), "bin_width_ns");
  const Json& bins = require(j, "bins");
  if (!bins.is_array()) bad_field("bins", "expected an array of counts");
  h.bins.reserve(bins.size());
  for (const auto& b : bins) {
    if (!b.is_number_integer()) bad_field("bins", "counts must be integers");
    h.bins.push_back(b.get<std::int64_t>());
  }
  if (const auto it = j.find("env_per_bin"); it != j.end()) h.env_per_bin = get_number(*it, "env_per_bin");
  if (const auto it = j.find("note"); it != j.end()) h.acquisition_note = get_as<std::string>(*it, "note");
  h.validate();
  return h;
}

Json to_json(const TomographyRecord& record) {
  Json hists = Json::array();
  for (const auto& h : record.histograms) hists.push_back(to_json(h));
  return Json{{"window", {record.window.start, record.window.end}},
              {"tail", {record.tail.start, record.tail.end}},
              {"histograms", hists}};
}

TomographyRecord record_from_json(const Json& j) {
  std::vector<const Json*> hist_json;
  const Json* window = nullptr;
  const Json* tail = nullptr;
  if (j.is_object()) {
    const Json& hs = require(j, "histograms");
    if (!hs.is_array()) bad_field("histograms", "expected an array");
    for (const auto& h : hs) hist_json.push_back(&h);
    window = &require(j, "window");
    if (const auto it = j.find("tail"); it != j.end()) tail = &*it;
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (e.is_object() && e.contains("window") && !e.contains("setting")) {
        window = &e["window"];
        if (const auto it = e.find("tail"); it != e.end()) tail = &*it;
      } else {
        hist_json.push_back(&e);
      }
    }
    if (window == nullptr) bad_field("window", "missing");
  } else {
    throw Error(ErrorCode::InvalidInput, "record must be a JSON object or array");
  }

  if (hist_json.size() != kNumSettings)
    bad_field("histograms", "expected 16 histograms, got " + std::to_string(hist_json.size()));

  TomographyRecord rec;
  std::array<bool, kNumSettings> seen{};
  for (const Json* hj : hist_json) {
    CoincidenceHistogram h = histogram_from_json(*hj);
    const std::size_t idx = canonical_index(h.setting);
    if (seen[idx]) bad_field("histograms", "setting " + h.setting.name() + " appears twice");
    seen[idx] = true;
    rec.histograms[idx] = std::move(h);
  }
  rec.window = range_from_json(*window, "window");
  if (tail != nullptr) {
    rec.tail = range_from_json(*tail, "tail");
  } else {
    std::size_t n = rec.histograms[0].bins.size();
    for (const auto& h : rec.histograms) n = std::min(n, h.bins.size());
    rec.tail = {rec.window.end, n};
  }
  rec.validate();
  return rec;
}

CoincidenceHistogram histogram_from_csv(std::istream& in, const MeasurementSetting& setting,
                                        double bin_width_ns, double env_per_bin) {
  CoincidenceHistogram h;
  h.setting = setting;
  h.bin_width_ns = bin_width_ns;
  h.env_per_bin = env_per_bin;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ss(line);
    long long index = 0;
    long long count = 0;
    char comma = 0;
    if (!(ss >> index >> comma >> count) || comma != ',') {
      if (line_no == 1 && h.bins.empty()) continue;  // header
      throw Error(ErrorCode::InvalidInput, "CSV line " + std::to_string(line_no) + ": expected bin_index,count");
    }
    if (index < 0) throw Error(ErrorCode::InvalidInput, "CSV line " + std::to_string(line_no) + ": negative bin index");
    if (static_cast<std::size_t>(index) >= h.bins.size()) h.bins.resize(static_cast<std::size_t>(index) + 1, 0);
    h.bins[static_cast<std::size_t>(index)] = count;
  }
  h.validate();
  return h;
}

ChainConfig chain_from_json(const Json& j) {
  ChainConfig cfg;
  if (const auto it = j.find("c"); it != j.end()) {
    if (!it->is_object()) bad_field("c", "expected an object mapping l to c_l");
    cfg.c.clear();
    for (const auto& [key, val] : it->items()) {
      int l = 0;
      try {
        std::size_t pos = 0;
        l = std::stoi(key, &pos);
        if (pos != key.size()) throw std::invalid_argument(key);
      } catch (const std::logic_error&) {
        bad_field("c", "key '" + key + "' is not an integer");
      }
      cfg.c[l] = get_number(val, "c");
    }
  }
  if (const auto it = j.find("rotated"); it != j.end())
    cfg.interface.anti_stokes_rotated = get_as<bool>(*it, "rotated");
  if (const auto it = j.find("theta_rad"); it != j.end())
    cfg.interface.theta = get_number(*it, "theta_rad");
  return cfg;
}

Json to_json(const ChainConfig& chain) {
  Json c = Json::object();
  for (const auto& [l, v] : chain.c) c[std::to_string(l)] = v;
  return Json{{"c", c}, {"rotated", chain.interface.anti_stokes_rotated},
              {"theta_rad", chain.interface.theta}};
}

Json to_json(const UncertaintyReport& report) {
  return Json{{"fidelity_mean", report.fidelity_mean}, {"fidelity_std", report.fidelity_std},
              {"chsh_mean", report.chsh_mean},         {"chsh_std", report.chsh_std},
              {"trials", report.trials},               {"failures", report.failures}};
}

Json to_json(const TwoQubitKet& ket) {
  Json re = Json::array();
  Json im = Json::array();
  for (const auto& a : ket.amp) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  return Json{{"re", re}, {"im", im}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, path.string() + ": write failed");
}

}  // namespace oamtomo::io
