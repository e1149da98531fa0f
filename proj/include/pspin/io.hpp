#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pspin/comparison.hpp"
#include "pspin/diagnostics.hpp"
#include "pspin/dynamics.hpp"
#include "pspin/flows.hpp"
#include "pspin/regions.hpp"

namespace pspin {

using Json = nlohmann::ordered_json;

// 17 significant digits; "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double x);

// t,u,v,w,g1
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
// t,u,v
void write_plane_csv(const std::filesystem::path& path, const PlaneTrajectory& tr);
// u,f_L,f_U,ell1 with nan where a curve is undefined
void write_curves_csv(const std::filesystem::path& path, const FlowParams& fp,
                      const std::vector<double>& u_grid);
// u,ell1,f_L,A0_lower,A0_upper,absorbing_lower,absorbing_upper on the
// geometry's u-grid across the window
void write_boundaries_csv(const std::filesystem::path& path, const PhaseGeometry& g,
                          const AbsorbingSet& a);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

Json to_json(const LangevinConfig& c);
// metadata sidecar for a trajectory CSV
Json record_metadata(const TrajectoryRecord& rec);
Json to_json(const PortraitReport& r);
Json to_json(const ConditionIReport& r, bool with_windows = true);
Json to_json(const ConfinementReport& r);
Json to_json(const RectangleReport& r);
Json to_json(const StatReport& r);
Json to_json(const OpNormResult& r);

// nan and inf are not JSON numbers; they become null
Json number(double x);

}  // namespace pspin
