#pragma once

#include <filesystem>
#include <string>

#include "barrierflow/flow.hpp"
#include "barrierflow/solvers.hpp"

namespace barrierflow {

// 17 significant digits: doubles round-trip exactly through text.
std::string format_double(double v);

// Trace CSV, schema versioned in the leading comment line:
//   # schema=barrierflow.trace.v1
//   k,x0,...,x{n-1},f,eta,stable_res,kkt_res,gauge
void write_trace_csv(const std::filesystem::path& file, const Trace& trace);

// # schema=barrierflow.flow.v1 / t,x...,f
void write_flow_csv(const std::filesystem::path& file, const FlowTrace& trace);

// # schema=barrierflow.exits.v1 / delta,t_exit,exited,reentries
void write_exits_csv(const std::filesystem::path& file,
                     const std::vector<ExitRecord>& exits);

std::string report_to_json_text(const StationarityReport& report);

// FNV-1a content hash of the problem description, recorded in manifests.
uint64_t fnv1a64(std::string_view text);
std::string problem_content_hash(const Problem& problem);

}  // namespace barrierflow
