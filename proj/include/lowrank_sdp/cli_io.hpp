#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lowrank_sdp/applications.hpp"
#include "lowrank_sdp/meta_solver.hpp"

namespace lowrank_sdp {

/// Gset-style graph: "n m" then m lines "i j w" with 1-based vertices.
/// Lines starting with '#' or 'c' are comments. Duplicate edges are summed.
Graph parse_graph(const std::string& path);
Graph parse_graph(std::istream& in);

/// Comma-separated reals, one matrix row per line. Blank lines are skipped.
Matrix parse_dense_matrix(const std::string& path);
Matrix parse_dense_matrix(std::istream& in);

/// Generic instance for `solve-generic`, read from JSON:
///   {"n": 3, "cost": [[...]], "constraints": [{"matrix": [[...]], "rhs": 1.0}, ...]}
struct GenericProblem {
  ConstraintSet constraints = ConstraintSet::spectahedron(1);
  SparseMatrix cost;
};
GenericProblem parse_generic_problem(const std::string& path);

enum class TraceFormat { Json, Csv };
TraceFormat parse_trace_format(const std::string& name);

/// rank_p, outer_iter, cost, grad_norm, tr_radius, lambda_min; the last
/// column is filled only on the final row of each rank.
std::string trace_csv(const MetaResult& result);
/// Canonical JSON of the whole result (sorted keys, shortest round-trip
/// doubles, absent optionals as null).
std::string trace_json(const MetaResult& result);
MetaResult parse_trace_json(const std::string& text);
/// Writes one of the two forms above. Throws IoError.
void emit_trace(const MetaResult& result, TraceFormat format, const std::string& path);

std::string homotopy_csv(const HomotopyResult& result);
std::string homotopy_json(const HomotopyResult& result);

struct RunConfig {
  std::string subcommand;
  std::string input;
  Index p0 = 1;
  double epsilon = 1e-12;
  double rank_tol = 1e-6;
  std::optional<Index> p_max;
  std::optional<double> rho;
  std::optional<double> rho_frac;
  std::vector<double> kappas = default_kappas();
  double mu_step = 0.05;
  std::uint64_t seed = 0;
  std::optional<std::string> trace;
  TraceFormat format = TraceFormat::Json;
  int round_trials = 0;
  bool quiet = false;

  MetaOptions meta_options() const;
};

/// Value of LOWRANK_SDP_THREADS: unset or "0" means automatic. Throws
/// DimensionMismatch on anything but a nonnegative integer.
int thread_request(const char* value);

/// Full command line entry point. Returns 0 on CertifiedOptimal or
/// RankDeficientStop, 2 on ReachedPMax and 1 on any error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lowrank_sdp
