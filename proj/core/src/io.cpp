#include "barrierflow/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace barrierflow {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + file.string() + "' for writing");
  return out;
}

void write_vector_fields(std::ostream& out, const Vector& x) {
  for (int i = 0; i < x.size(); ++i) out << ',' << format_double(x[i]);
}

}  // namespace

void write_trace_csv(const std::filesystem::path& file, const Trace& trace) {
  auto out = open_out(file);
  out << "# schema=barrierflow.trace.v1\n";
  const int n = trace.rows.empty() ? 0 : static_cast<int>(trace.rows.front().x.size());
  out << "k";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << ",f,eta,stable_res,kkt_res,gauge\n";
  for (const auto& r : trace.rows) {
    out << r.k;
    write_vector_fields(out, r.x);
    out << ',' << format_double(r.f) << ',' << format_double(r.eta) << ','
        << format_double(r.stable_res) << ',' << format_double(r.kkt_res) << ','
        << format_double(r.gauge) << '\n';
  }
}

void write_flow_csv(const std::filesystem::path& file, const FlowTrace& trace) {
  auto out = open_out(file);
  out << "# schema=barrierflow.flow.v1\n";
  const int n =
      trace.samples.empty() ? 0 : static_cast<int>(trace.samples.front().x.size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  out << ",f\n";
  for (const auto& s : trace.samples) {
    out << format_double(s.t);
    write_vector_fields(out, s.x);
    out << ',' << format_double(s.f) << '\n';
  }
}

void write_exits_csv(const std::filesystem::path& file,
                     const std::vector<ExitRecord>& exits) {
  auto out = open_out(file);
  out << "# schema=barrierflow.exits.v1\n";
  out << "delta,t_exit,exited,reentries\n";
  for (const auto& e : exits) {
    out << format_double(e.delta) << ',' << format_double(e.t_exit) << ','
        << (e.exited ? 1 : 0) << ',' << e.reentries << '\n';
  }
}

std::string report_to_json_text(const StationarityReport& report) {
  nlohmann::json j;
  j["classification"] = to_string(report.classification);
  j["stable_residual"] = report.stable_residual;
  j["kkt_residual"] = report.kkt_residual;
  if (std::isfinite(report.comp_gap)) j["comp_gap"] = report.comp_gap;
  j["tolerances"] = {{"tau_stable", report.tau_stable}, {"tau_kkt", report.tau_kkt}};
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["x"] = vec(report.x);
  j["certificates"] = {{"y", vec(report.y)},
                       {"s", vec(report.s)},
                       {"kkt_mu", vec(report.kkt_mu)},
                       {"kkt_lambda", vec(report.kkt_lambda)},
                       {"active_set", report.active}};
  return j.dump(2);
}

uint64_t fnv1a64(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string problem_content_hash(const Problem& problem) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(problem.content_id)));
  return buf;
}

}  // namespace barrierflow
