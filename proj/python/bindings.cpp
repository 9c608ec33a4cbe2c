#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lowrank_sdp/applications.hpp"
#include "lowrank_sdp/cli_io.hpp"
#include "lowrank_sdp/meta_solver.hpp"

namespace py = pybind11;
using namespace lowrank_sdp;

namespace {

ConstraintSet make_set(const std::string& kind, Index n) {
  if (kind == "elliptope") return ConstraintSet::elliptope(n);
  if (kind == "spectahedron") return ConstraintSet::spectahedron(n);
  throw py::value_error("kind must be 'elliptope' or 'spectahedron'");
}

MetaOptions meta_options(Index p0, double epsilon, double rank_tol, std::optional<Index> p_max) {
  MetaOptions o;
  o.p0 = p0;
  o.epsilon = epsilon;
  o.rank_tol = rank_tol;
  o.p_max = p_max;
  return o;
}

py::dict result_dict(const MetaResult& r) {
  py::list ranks;
  for (const auto& run : r.runs) {
    py::dict d;
    d["p"] = run.p;
    d["status"] = to_string(run.status);
    d["final_cost"] = run.final_cost;
    d["final_grad_norm"] = run.final_grad_norm;
    d["lambda_min"] = run.smin;
    d["steps"] = run.steps.size();
    ranks.append(d);
  }
  py::dict out;
  out["y"] = r.y_star;
  out["rank_p"] = r.rank_p;
  out["numerical_rank"] = r.numerical_rank;
  out["objective"] = r.objective;
  out["status"] = to_string(r.status);
  out["lambda_min"] = r.certificate.smin;
  out["multipliers"] = r.certificate.lambda;
  out["runs"] = ranks;
  return out;
}

py::dict component_dict(const SparseComponent& c) {
  py::dict d;
  d["vector"] = c.vector;
  d["pattern"] = c.pattern;
  d["cardinality"] = c.cardinality;
  d["objective"] = c.objective;
  return d;
}

std::vector<Edge> edge_list(const std::vector<std::tuple<Index, Index, double>>& edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const auto& [i, j, w] : edges) out.push_back({std::min(i, j), std::max(i, j), w});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Low-rank semidefinite optimization on quotient manifolds";

  py::register_exception<Error>(m, "SolverError", PyExc_RuntimeError);

  m.def(
      "random_feasible",
      [](const std::string& kind, Index n, Index p, std::uint64_t seed) {
        return random_feasible(make_set(kind, n), p, seed).matrix();
      },
      py::arg("kind"), py::arg("n"), py::arg("p"), py::arg("seed") = 0);

  m.def(
      "project_horizontal",
      [](const std::string& kind, const Matrix& y, const Matrix& z) {
        const ConstraintSet cs = make_set(kind, y.rows());
        return project_horizontal(cs, FactorPoint(y), z).z;
      },
      py::arg("kind"), py::arg("y"), py::arg("z"));

  m.def(
      "retract",
      [](const std::string& kind, const Matrix& y, const Matrix& z) {
        const ConstraintSet cs = make_set(kind, y.rows());
        const FactorPoint point(y);
        return retract(cs, point, TangentVector{z, point.tag()}).matrix();
      },
      py::arg("kind"), py::arg("y"), py::arg("z"));

  m.def(
      "solve_linear",
      [](const std::string& kind, const Matrix& cost, Index p0, double epsilon, double rank_tol,
         std::optional<Index> p_max, std::uint64_t seed) {
        const ConstraintSet cs = make_set(kind, cost.rows());
        const LinearCost c(cost.sparseView());
        return result_dict(solve(cs, c, meta_options(p0, epsilon, rank_tol, p_max), seed));
      },
      "Minimizes Tr(C X) over the elliptope or the spectahedron.", py::arg("kind"),
      py::arg("cost"), py::arg("p0") = 1, py::arg("epsilon") = 1e-12, py::arg("rank_tol") = 1e-6,
      py::arg("p_max") = std::nullopt, py::arg("seed") = 0);

  m.def(
      "maxcut_bound",
      [](Index n, const std::vector<std::tuple<Index, Index, double>>& edges, Index p0,
         double epsilon, std::uint64_t seed, int round_trials) {
        const Graph g(n, edge_list(edges));
        const MaxCutBound b = maxcut_bound(g, meta_options(p0, epsilon, 1e-6, std::nullopt), seed);
        py::dict out = result_dict(b.result);
        out["bound"] = b.bound;
        if (round_trials > 0) {
          const Cut cut = maxcut_round(g, b.result.y_star, round_trials, seed);
          out["cut_value"] = cut.value;
          out["cut_signs"] = cut.signs;
        }
        return out;
      },
      "Max-cut SDP bound; edges are (i, j, weight) with 0-based vertices.", py::arg("n"),
      py::arg("edges"), py::arg("p0") = 1, py::arg("epsilon") = 1e-12, py::arg("seed") = 0,
      py::arg("round_trials") = 0);

  m.def(
      "maxcut_bound_file",
      [](const std::string& path, std::uint64_t seed) {
        const MaxCutBound b = maxcut_bound(parse_graph(path), {}, seed);
        py::dict out = result_dict(b.result);
        out["bound"] = b.bound;
        return out;
      },
      py::arg("path"), py::arg("seed") = 0);

  m.def("rho_bar", &rho_bar, py::arg("data"));

  m.def(
      "spca_dspca",
      [](const Matrix& data, double rho, std::vector<double> kappas, std::uint64_t seed) {
        const DspcaResult r = spca_dspca(SpcaInstance{data, rho}, kappas, {}, seed);
        py::dict out = result_dict(r.result);
        out["lambda_max"] = r.lambda_max;
        out["component"] = component_dict(r.component);
        return out;
      },
      py::arg("data"), py::arg("rho"), py::arg("kappas") = default_kappas(),
      py::arg("seed") = 0);

  m.def(
      "spca_spectral",
      [](const Matrix& data, double rho) {
        const SpectralResult r = spca_spectral(SpcaInstance{data, rho});
        py::dict out = result_dict(r.result);
        out["value"] = r.value;
        out["component"] = component_dict(r.component);
        return out;
      },
      py::arg("data"), py::arg("rho"));

  m.def(
      "spca_homotopy",
      [](const Matrix& data, double rho, const Matrix& z0, double mu_step) {
        const HomotopyResult h =
            spca_homotopy(SpcaInstance{data, rho}, z0, mu_schedule(mu_step));
        py::list trace;
        for (const HomotopyStep& s : h.trace) {
          py::dict d;
          d["mu"] = s.mu;
          d["f_ccv"] = s.f_ccv;
          d["f_evd"] = s.f_evd;
          d["lambda_max"] = s.lambda_max;
          d["rank"] = s.rank;
          trace.append(d);
        }
        py::dict out;
        out["y"] = h.y;
        out["component"] = component_dict(h.component);
        out["trace"] = trace;
        return out;
      },
      py::arg("data"), py::arg("rho"), py::arg("z0"), py::arg("mu_step") = 0.05);
}
