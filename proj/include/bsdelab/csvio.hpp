#pragma once

// Plot-ready CSV emission and the run manifest. CSV content is deterministic
// for a given config: fixed iteration order, fixed float formatting, no clock
// data (timings go to the manifest only).

#include <string>
#include <vector>

#include <json.hpp>

#include "bsdelab/indifference.hpp"
#include "bsdelab/lattice.hpp"
#include "bsdelab/measure.hpp"
#include "bsdelab/solver.hpp"

namespace bsdelab {

std::string format_double(double v);

/// node id, time, Y, Z components, U per mark.
void write_solution_csv(const std::string& path, const LatticeModel& model,
                        const std::vector<std::vector<double>>& Y,
                        const std::vector<std::vector<double>>& Z, const MarkField& U);

/// node id, time, one column per extra field (same node layout).
void write_node_field_csv(const std::string& path, const LatticeModel& model,
                          const std::vector<std::pair<std::string, const std::vector<std::vector<double>>*>>& fields);

/// node id, time, cumulative density.
void write_density_csv(const std::string& path, const LatticeModel& model, const MeasureChange& change);

void write_asymptotics_csv(const std::string& path, const AsymptoticsReport& report);

struct ManifestInfo {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::string mode;
  double tolerance = 0.0;
  double alpha = 0.0;
  long total_nodes = 0;
  double elapsed_ms = 0.0;
  nlohmann::json extra;
};
void write_manifest(const std::string& path, const ManifestInfo& info);

}  // namespace bsdelab
