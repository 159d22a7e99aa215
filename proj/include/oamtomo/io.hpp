#pragma once

// JSON and CSV schemas shared by the library and the command-line tool.

#include <filesystem>
#include <istream>
#include <map>

#include <json.hpp>

#include "oamtomo/coincidence.hpp"
#include "oamtomo/oam_interface.hpp"
#include "oamtomo/quantum.hpp"
#include "oamtomo/tomography.hpp"

namespace oamtomo::io {

using Json = nlohmann::json;

// {"re": [[4x4]], "im": [[4x4]]}, rows in (HH, HV, VH, VV) order.
Json to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j);

// {"HH": p, "HV": p, ...} over the sixteen canonical settings.
Json to_json(const SettingValues& values);
ProbabilitySet probabilities_from_json(const Json& j);
SigmaSet sigmas_from_json(const Json& j);

// {"setting": "HH", "bin_width_ns": w, "bins": [...], "env_per_bin": e}
Json to_json(const CoincidenceHistogram& hist);
CoincidenceHistogram histogram_from_json(const Json& j);

// {"window": [s, e], "tail": [s, e], "histograms": [16 histogram objects]}.
// The reader also takes a bare array of the sixteen histograms followed by
// a {"window": [s, e]} element; "tail" defaults to [window end, last bin].
Json to_json(const TomographyRecord& record);
TomographyRecord record_from_json(const Json& j);

/// Two columns bin_index,count; an optional non-numeric header line is skipped.
CoincidenceHistogram histogram_from_csv(std::istream& in, const MeasurementSetting& setting,
                                        double bin_width_ns, double env_per_bin);

struct ChainConfig {
  std::map<int, double> c{{1, 1.0}};
  InterfaceConfig interface;
};

// {"c": {"0": 0.0, "1": 1.0}, "rotated": false, "theta_rad": 0.0}
ChainConfig chain_from_json(const Json& j);
Json to_json(const ChainConfig& chain);

Json to_json(const UncertaintyReport& report);
Json to_json(const TwoQubitKet& ket);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace oamtomo::io
