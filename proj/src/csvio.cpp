#include "bsdelab/csvio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace bsdelab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  return out;
}

/// Row-buffered writer: formats into one growing string, flushes in chunks.
class BufferedCsv {
 public:
  explicit BufferedCsv(const std::string& path) : out_(open_out(path)) { buf_.reserve(1 << 20); }
  ~BufferedCsv() { flush(); }
  void raw(const char* s) { buf_ += s; }
  void raw(const std::string& s) { buf_ += s; }
  void integer(long v) {
    char tmp[24];
    const auto r = std::to_chars(tmp, tmp + sizeof(tmp), v);
    buf_.append(tmp, r.ptr);
  }
  // Shortest round-trip form: deterministic and exact to reload.
  void number(double v) {
    char tmp[40];
    const auto r = std::to_chars(tmp, tmp + sizeof(tmp), v);
    buf_.append(tmp, r.ptr);
  }
  void end_row() {
    buf_ += '\n';
    if (buf_.size() > (1 << 20)) flush();
  }
  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }

 private:
  std::ofstream out_;
  std::string buf_;
};

}  // namespace

void write_solution_csv(const std::string& path, const LatticeModel& model,
                        const std::vector<std::vector<double>>& Y,
                        const std::vector<std::vector<double>>& Z, const MarkField& U) {
  BufferedCsv out(path);
  const int d = model.assets();
  const int m = model.mark_count();
  out.raw("slice,node,time,Y");
  for (int i = 0; i < d; ++i) { out.raw(",Z"); out.integer(i); }
  for (int j = 0; j < m; ++j) { out.raw(",U"); out.integer(j); }
  out.end_row();
  for (int k = 0; k < static_cast<int>(Y.size()); ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node) {
      out.integer(k); out.raw(","); out.integer(node); out.raw(",");
      out.number(model.time(k)); out.raw(",");
      out.number(Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
      const bool interior = k < static_cast<int>(Z.size());
      for (int i = 0; i < d; ++i) {
        out.raw(",");
        out.number(interior ? Z[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * d + i] : 0.0);
      }
      for (int j = 0; j < m; ++j) {
        out.raw(",");
        out.number(interior ? U[static_cast<std::size_t>(k)][static_cast<std::size_t>(node) * m + j] : 0.0);
      }
      out.end_row();
    }
  }
}

void write_node_field_csv(
    const std::string& path, const LatticeModel& model,
    const std::vector<std::pair<std::string, const std::vector<std::vector<double>>*>>& fields) {
  BufferedCsv out(path);
  out.raw("slice,node,time");
  for (const auto& [name, _] : fields) { out.raw(","); out.raw(name); }
  out.end_row();
  for (int k = 0; k <= model.steps(); ++k) {
    for (long node = 0; node < model.nodes_at(k); ++node) {
      out.integer(k); out.raw(","); out.integer(node); out.raw(",");
      out.number(model.time(k));
      for (const auto& [_, field] : fields) {
        const auto& f = *field;
        const bool has = k < static_cast<int>(f.size()) &&
                         static_cast<std::size_t>(node) < f[static_cast<std::size_t>(k)].size();
        out.raw(",");
        out.number(has ? f[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] : 0.0);
      }
      out.end_row();
    }
  }
}

void write_density_csv(const std::string& path, const LatticeModel& model,
                       const MeasureChange& change) {
  BufferedCsv out(path);
  out.raw("slice,node,time,density");
  out.end_row();
  for (int k = 0; k <= model.steps(); ++k)
    for (long node = 0; node < model.nodes_at(k); ++node) {
      out.integer(k); out.raw(","); out.integer(node); out.raw(",");
      out.number(model.time(k)); out.raw(",");
      out.number(change.density[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
      out.end_row();
    }
}

void write_asymptotics_csv(const std::string& path, const AsymptoticsReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << "alpha,sup_gap,z_gap,u_gap,sup_gap_first_jump,pi0_minus_limit\n";
  for (const auto& row : report.rows)
    out << format_double(row.alpha) << "," << format_double(row.sup_gap) << ","
        << format_double(row.z_gap) << "," << format_double(row.u_gap) << ","
        << format_double(row.sup_gap_first_jump) << "," << format_double(row.pi0_minus_limit) << "\n";
  out << "# sup_slope=" << format_double(report.sup_slope) << " z_slope=" << format_double(report.z_slope)
      << " u_slope=" << format_double(report.u_slope) << "\n";
}

void write_manifest(const std::string& path, const ManifestInfo& info) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["project_version"] = "0.1.0";
  j["command"] = info.command;
  j["config_path"] = info.config_path;
  j["config_hash"] = info.config_hash;
  j["mode"] = info.mode;
  j["tolerance"] = info.tolerance;
  j["alpha"] = info.alpha;
  j["total_nodes"] = info.total_nodes;
  j["elapsed_ms"] = info.elapsed_ms;
  if (!info.extra.is_null()) j["results"] = info.extra;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace bsdelab
