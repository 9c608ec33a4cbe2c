#include "lowrank_sdp/cli_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lowrank_sdp {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec == std::errc::result_out_of_range) {
    value = std::numeric_limits<double>::infinity();
    return ptr == token.data() + token.size();
  }
  return ec == std::errc() && ptr == token.data() + token.size() && !token.empty();
}

bool parse_integer(std::string_view token, long long& value) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size() && !token.empty();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_comment(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#' || t.front() == 'c';
}

}  // namespace

// -------------------------------------------------------------------- graphs

Graph parse_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  long long n = -1, m = -1;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (n < 0) {
      if (tokens.size() != 2 || !parse_integer(tokens[0], n) || !parse_integer(tokens[1], m)) {
        throw ParseError(lineno, "expected header \"n m_edges\"");
      }
      if (n < 1 || m < 0) throw ParseError(lineno, "header needs n >= 1 and m_edges >= 0");
      edges.reserve(static_cast<std::size_t>(m));
      continue;
    }
    if (static_cast<long long>(edges.size()) == m) {
      throw ParseError(lineno, "more edge lines than announced in the header");
    }
    long long i = 0, j = 0;
    double w = 0.0;
    if (tokens.size() != 3 || !parse_integer(tokens[0], i) || !parse_integer(tokens[1], j) ||
        !parse_number(tokens[2], w)) {
      throw ParseError(lineno, "expected edge \"i j w\"");
    }
    if (i < 1 || j < 1 || i > n || j > n) {
      throw ParseError(lineno, "vertex index outside 1.." + std::to_string(n));
    }
    if (i == j) throw SelfLoop(lineno);
    if (!std::isfinite(w)) throw ParseError(lineno, "non-finite edge weight");
    if (i > j) std::swap(i, j);
    edges.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), w});
  }
  if (n < 0) throw ParseError(lineno, "missing header line");
  if (static_cast<long long>(edges.size()) != m) {
    throw ParseError(lineno, "header announces " + std::to_string(m) + " edges, found " +
                                 std::to_string(edges.size()));
  }
  return Graph(static_cast<Index>(n), edges);
}

Graph parse_graph(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_graph(in);
}

// ------------------------------------------------------------- dense matrix

Matrix parse_dense_matrix(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      double v = 0.0;
      if (!parse_number(cell, v)) {
        throw ParseError(lineno, "cannot read \"" + std::string(cell) + "\" as a number");
      }
      if (!std::isfinite(v)) throw NonFinite(lineno, row.size() + 1);
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw RaggedRows(lineno, rows.front().size(), row.size());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(lineno, "no data rows");
  Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
  }
  return a;
}

Matrix parse_dense_matrix(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_dense_matrix(in);
}

// ---------------------------------------------------------- generic problem

namespace {

Matrix json_matrix(const json& j, Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw ParseError(0, what + ": expected " + std::to_string(n) + " rows");
  }
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw RaggedRows(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(n),
                       row.is_array() ? row.size() : 0);
    }
    for (Index k = 0; k < n; ++k) {
      if (!row[k].is_number()) throw ParseError(0, what + ": non-numeric entry");
      a(i, k) = row[k].get<double>();
      if (!std::isfinite(a(i, k))) throw NonFinite(static_cast<std::size_t>(i + 1), k + 1);
    }
  }
  return a;
}

}  // namespace

GenericProblem parse_generic_problem(const std::string& path) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_integer()) {
    throw ParseError(0, "missing integer field \"n\"");
  }
  const auto n = doc["n"].get<Index>();
  if (n < 1) throw ParseError(0, "\"n\" must be positive");
  if (!doc.contains("cost")) throw ParseError(0, "missing field \"cost\"");
  if (!doc.contains("constraints") || !doc["constraints"].is_array() ||
      doc["constraints"].empty()) {
    throw ParseError(0, "missing nonempty array \"constraints\"");
  }
  std::vector<SparseMatrix> mats;
  Vector rhs(static_cast<Index>(doc["constraints"].size()));
  Index k = 0;
  for (const json& c : doc["constraints"]) {
    if (!c.is_object() || !c.contains("matrix") || !c.contains("rhs") || !c["rhs"].is_number()) {
      throw ParseError(0, "constraint " + std::to_string(k) + " needs \"matrix\" and \"rhs\"");
    }
    mats.push_back(json_matrix(c["matrix"], n, "constraint " + std::to_string(k)).sparseView());
    rhs(k++) = c["rhs"].get<double>();
  }
  GenericProblem out;
  out.constraints = ConstraintSet::generic(n, std::move(mats), rhs);
  out.cost = json_matrix(doc["cost"], n, "cost").sparseView();
  return out;
}

// ------------------------------------------------------------------- traces

TraceFormat parse_trace_format(const std::string& name) {
  if (name == "json") return TraceFormat::Json;
  if (name == "csv") return TraceFormat::Csv;
  throw DimensionMismatch("unknown trace format \"" + name + "\" (json or csv)");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) {
  return v ? number(*v) : json(nullptr);
}

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Vector read_vector(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = read_number(j[i]);
  return v;
}

json matrix_json(const Matrix& a) {
  json out = json::array();
  for (Index i = 0; i < a.rows(); ++i) out.push_back(vector_json(a.row(i).transpose()));
  return out;
}

Matrix read_matrix(const json& j, Index cols) {
  Matrix a(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < a.rows(); ++i) a.row(i) = read_vector(j[i]).transpose();
  return a;
}

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& name, const Enum (&values)[N], const char* what) {
  for (const Enum e : values) {
    if (name == to_string(e)) return e;
  }
  throw ParseError(0, std::string("unknown ") + what + " \"" + name + "\"");
}

constexpr MetaStatus kMetaStatuses[] = {MetaStatus::CertifiedOptimal,
                                        MetaStatus::RankDeficientStop, MetaStatus::ReachedPMax};
constexpr TrStatus kTrStatuses[] = {TrStatus::Converged, TrStatus::MaxIterations,
                                    TrStatus::RankDeficient, TrStatus::Stagnated};
constexpr TcgStop kTcgStops[] = {TcgStop::NegativeCurvature, TcgStop::Boundary,
                                 TcgStop::Tolerance, TcgStop::MaxIterations};

json step_json(const TrStepRecord& s) {
  return json{{"iteration", s.iteration},
              {"cost", number(s.cost)},
              {"grad_norm", number(s.grad_norm)},
              {"radius", number(s.radius)},
              {"ratio", optional_number(s.ratio)},
              {"accepted", s.accepted},
              {"inner_iterations", s.inner_iterations},
              {"inner_stop", s.inner_stop ? json(to_string(*s.inner_stop)) : json(nullptr)},
              {"escape", s.escape}};
}

TrStepRecord read_step(const json& j) {
  TrStepRecord s;
  s.iteration = j.at("iteration").get<int>();
  s.cost = read_number(j.at("cost"));
  s.grad_norm = read_number(j.at("grad_norm"));
  s.radius = read_number(j.at("radius"));
  s.ratio = read_optional(j.at("ratio"));
  s.accepted = j.at("accepted").get<bool>();
  s.inner_iterations = j.at("inner_iterations").get<int>();
  if (!j.at("inner_stop").is_null()) {
    s.inner_stop = enum_from(j.at("inner_stop").get<std::string>(), kTcgStops, "inner stop");
  }
  s.escape = j.at("escape").get<bool>();
  return s;
}

json run_json(const RankRun& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(step_json(s));
  return json{{"p", r.p},
              {"status", to_string(r.status)},
              {"initial_cost", number(r.initial_cost)},
              {"initial_grad_norm", number(r.initial_grad_norm)},
              {"final_cost", number(r.final_cost)},
              {"final_grad_norm", number(r.final_grad_norm)},
              {"escape_decrease", optional_number(r.escape_decrease)},
              {"lambda_min", optional_number(r.smin)},
              {"steps", std::move(steps)}};
}

RankRun read_run(const json& j) {
  RankRun r;
  r.p = j.at("p").get<Index>();
  r.status = enum_from(j.at("status").get<std::string>(), kTrStatuses, "trust-region status");
  r.initial_cost = read_number(j.at("initial_cost"));
  r.initial_grad_norm = read_number(j.at("initial_grad_norm"));
  r.final_cost = read_number(j.at("final_cost"));
  r.final_grad_norm = read_number(j.at("final_grad_norm"));
  r.escape_decrease = read_optional(j.at("escape_decrease"));
  r.smin = read_optional(j.at("lambda_min"));
  for (const json& s : j.at("steps")) r.steps.push_back(read_step(s));
  return r;
}

json result_json(const MetaResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(run_json(run));
  const DualCertificate& c = r.certificate;
  return json{{"status", to_string(r.status)},
              {"rank_p", r.rank_p},
              {"numerical_rank", r.numerical_rank},
              {"objective", number(r.objective)},
              {"y_star", matrix_json(r.y_star)},
              {"certificate",
               json{{"lambda", vector_json(c.lambda)},
                    {"lambda_min", number(c.smin)},
                    {"v_min", vector_json(c.vmin)},
                    {"residual", number(c.residual)}}},
              {"runs", std::move(runs)}};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace

std::string trace_csv(const MetaResult& result) {
  std::ostringstream os;
  os << "rank_p,outer_iter,cost,grad_norm,tr_radius,lambda_min\n";
  for (const RankRun& run : result.runs) {
    const auto last = [&](bool is_last) {
      return is_last && run.smin ? fmt(*run.smin) : std::string();
    };
    os << run.p << ",0," << fmt(run.initial_cost) << ',' << fmt(run.initial_grad_norm) << ",,"
       << last(run.steps.empty()) << '\n';
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
      const TrStepRecord& s = run.steps[k];
      os << run.p << ',' << s.iteration << ',' << fmt(s.cost) << ',' << fmt(s.grad_norm) << ','
         << fmt(s.radius) << ',' << last(k + 1 == run.steps.size()) << '\n';
    }
  }
  return os.str();
}

std::string trace_json(const MetaResult& result) { return result_json(result).dump(2) + "\n"; }

MetaResult parse_trace_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  try {
    MetaResult r;
    r.status = enum_from(j.at("status").get<std::string>(), kMetaStatuses, "status");
    r.rank_p = j.at("rank_p").get<Index>();
    r.numerical_rank = j.at("numerical_rank").get<Index>();
    r.objective = read_number(j.at("objective"));
    r.y_star = read_matrix(j.at("y_star"), r.rank_p);
    const json& c = j.at("certificate");
    r.certificate.lambda = read_vector(c.at("lambda"));
    r.certificate.smin = read_number(c.at("lambda_min"));
    r.certificate.vmin = read_vector(c.at("v_min"));
    r.certificate.residual = read_number(c.at("residual"));
    for (const json& run : j.at("runs")) r.runs.push_back(read_run(run));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed trace: ") + e.what());
  }
}

void emit_trace(const MetaResult& result, TraceFormat format, const std::string& path) {
  write_file(path, format == TraceFormat::Json ? trace_json(result) : trace_csv(result));
}

std::string homotopy_csv(const HomotopyResult& result) {
  std::ostringstream os;
  os << "mu,f_ccv,f_evd,lambda_max,rank,status\n";
  for (const HomotopyStep& s : result.trace) {
    os << fmt(s.mu) << ',' << fmt(s.f_ccv) << ',' << fmt(s.f_evd) << ',' << fmt(s.lambda_max)
       << ',' << s.rank << ',' << to_string(s.status) << '\n';
  }
  return os.str();
}

std::string homotopy_json(const HomotopyResult& result) {
  json steps = json::array();
  for (const HomotopyStep& s : result.trace) {
    steps.push_back(json{{"mu", number(s.mu)},
                         {"f_ccv", number(s.f_ccv)},
                         {"f_evd", number(s.f_evd)},
                         {"lambda_max", number(s.lambda_max)},
                         {"rank", s.rank},
                         {"status", to_string(s.status)}});
  }
  json pattern = json::array();
  for (const bool b : result.component.pattern) pattern.push_back(b);
  const json doc{{"y", matrix_json(result.y)},
                 {"component",
                  json{{"vector", vector_json(result.component.vector)},
                       {"pattern", std::move(pattern)},
                       {"cardinality", result.component.cardinality},
                       {"objective", number(result.component.objective)}}},
                 {"trace", std::move(steps)}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------- CLI

MetaOptions RunConfig::meta_options() const {
  MetaOptions o;
  o.p0 = p0;
  o.epsilon = epsilon;
  o.rank_tol = rank_tol;
  o.p_max = p_max;
  return o;
}

int thread_request(const char* value) {
  if (value == nullptr || *value == '\0') return 0;
  long long n = 0;
  if (!parse_integer(trim(value), n) || n < 0 || n > 4096) {
    throw DimensionMismatch(std::string("LOWRANK_SDP_THREADS must be a nonnegative integer, got \"") +
                            value + "\"");
  }
  return static_cast<int>(n);
}

namespace {

int exit_code(MetaStatus status) { return status == MetaStatus::ReachedPMax ? 2 : 0; }

double resolve_rho(const RunConfig& cfg, const Matrix& data) {
  if (cfg.rho) return *cfg.rho;
  return cfg.rho_frac.value_or(0.05) * rho_bar(data);
}

void report(std::ostream& out, const RunConfig& cfg, const MetaResult& r) {
  if (cfg.quiet) return;
  out << std::setprecision(12);
  out << "status: " << to_string(r.status) << "\n";
  out << "objective: " << r.objective << "\n";
  out << "rank: " << r.rank_p << " (numerical " << r.numerical_rank << ")\n";
  out << "lambda_min: " << r.certificate.smin << "\n";
}

void write_trace(const RunConfig& cfg, const MetaResult& r) {
  if (cfg.trace) emit_trace(r, cfg.format, *cfg.trace);
}

int run_maxcut(const RunConfig& cfg, std::ostream& out) {
  const Graph g = parse_graph(cfg.input);
  const MaxCutBound b = maxcut_bound(g, cfg.meta_options(), cfg.seed);
  write_trace(cfg, b.result);
  report(out, cfg, b.result);
  if (!cfg.quiet) out << "bound: " << b.bound << "\n";
  if (cfg.round_trials > 0) {
    const Cut cut = maxcut_round(g, b.result.y_star, cfg.round_trials, cfg.seed);
    if (!cfg.quiet) out << "cut: " << cut.value << "\n";
  }
  return exit_code(b.result.status);
}

void report_component(std::ostream& out, const RunConfig& cfg, const SparseComponent& c) {
  if (cfg.quiet) return;
  out << "cardinality: " << c.cardinality << "\n";
  out << "component_objective: " << c.objective << "\n";
}

int run_dspca(const RunConfig& cfg, std::ostream& out) {
  const Matrix data = parse_dense_matrix(cfg.input);
  const SpcaInstance inst{data, resolve_rho(cfg, data)};
  const DspcaResult r = spca_dspca(inst, cfg.kappas, cfg.meta_options(), cfg.seed);
  write_trace(cfg, r.result);
  report(out, cfg, r.result);
  if (!cfg.quiet) out << "rho: " << inst.rho << "\nlambda_max: " << r.lambda_max << "\n";
  report_component(out, cfg, r.component);
  return exit_code(r.result.status);
}

int run_spectral(const RunConfig& cfg, std::ostream& out) {
  const Matrix data = parse_dense_matrix(cfg.input);
  const SpcaInstance inst{data, resolve_rho(cfg, data)};
  const SpectralResult r = spca_spectral(inst, cfg.meta_options(), cfg.seed);
  write_trace(cfg, r.result);
  report(out, cfg, r.result);
  if (!cfg.quiet) out << "rho: " << inst.rho << "\nvalue: " << r.value << "\n";
  report_component(out, cfg, r.component);
  return exit_code(r.result.status);
}

int run_homotopy(const RunConfig& cfg, std::ostream& out) {
  const Matrix data = parse_dense_matrix(cfg.input);
  const SpcaInstance inst{data, resolve_rho(cfg, data)};
  const SpectralResult start = spca_spectral(inst, cfg.meta_options(), cfg.seed);
  const HomotopyResult h = spca_homotopy(inst, start.result.y_star, mu_schedule(cfg.mu_step),
                                         cfg.meta_options().inner, cfg.rank_tol);
  if (cfg.trace) {
    write_file(*cfg.trace, cfg.format == TraceFormat::Json ? homotopy_json(h) : homotopy_csv(h));
  }
  if (!cfg.quiet) {
    out << std::setprecision(12);
    out << "status: " << to_string(h.trace.back().status) << "\n";
    out << "relaxation_value: " << start.value << "\n";
    out << "rho: " << inst.rho << "\n";
    out << "lambda_max: " << h.trace.back().lambda_max << "\n";
    out << "f_evd: " << h.trace.back().f_evd << "\n";
  }
  report_component(out, cfg, h.component);
  return 0;
}

int run_generic(const RunConfig& cfg, std::ostream& out) {
  const GenericProblem problem = parse_generic_problem(cfg.input);
  const LinearCost cost(problem.cost);
  const MetaResult r = solve(problem.constraints, cost, cfg.meta_options(), cfg.seed);
  write_trace(cfg, r);
  report(out, cfg, r);
  return exit_code(r.status);
}

std::vector<double> parse_kappas(const std::string& text) {
  std::vector<double> out;
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    double v = 0.0;
    if (!parse_number(trim(rest.substr(0, comma)), v) || !(v > 0.0) || !std::isfinite(v)) {
      throw DimensionMismatch("--kappa expects a comma-separated list of positive numbers");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank semidefinite optimization by factorization and rank escalation",
               "lowrank_sdp_cli"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string format = "json";
  std::string kappas;
  std::optional<double> rho, rho_frac;
  std::optional<Index> p_max;
  std::optional<std::string> trace;

  struct Sub {
    const char* name;
    const char* help;
    bool spca;
  };
  const Sub subs[] = {
      {"maxcut", "Max-cut SDP bound on a Gset-style graph", false},
      {"spca-dspca", "Smoothed l1-penalized sparse PCA on CSV data", true},
      {"spca-spectral", "Spectral sparse-PCA relaxation on CSV data", true},
      {"spca-homotopy", "Spectral relaxation followed by the rank-one homotopy", true},
      {"solve-generic", "Linear cost over Tr(A_i X) = b_i read from JSON", false},
  };
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("input", cfg.input, "Input file")->required()->check(CLI::ExistingFile);
    sub->add_option("--p0", cfg.p0, "Initial rank")->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", cfg.epsilon, "Certificate threshold on lambda_min")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--rank-tol", cfg.rank_tol, "Singular-value threshold for numerical rank")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--p-max", p_max, "Largest rank to try")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--trace", trace, "Write the solve trace to this path");
    sub->add_option("--format", format, "Trace format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--quiet", cfg.quiet, "Print nothing on success");
    if (s.spca) {
      auto* r = sub->add_option("--rho", rho, "Penalty (absolute)")->check(CLI::NonNegativeNumber);
      sub->add_option("--rho-frac", rho_frac, "Penalty as a fraction of max_i ||a_i||^2")
          ->check(CLI::NonNegativeNumber)
          ->excludes(r);
    }
    if (std::string(s.name) == "spca-dspca") {
      sub->add_option("--kappa", kappas, "Comma-separated smoothing ladder");
    }
    if (std::string(s.name) == "spca-homotopy") {
      sub->add_option("--mu-step", cfg.mu_step, "Homotopy step")
          ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
    }
    if (std::string(s.name) == "maxcut") {
      sub->add_option("--round-trials", cfg.round_trials, "Random-hyperplane roundings")
          ->check(CLI::NonNegativeNumber);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return 1;
  }

  try {
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.p_max = p_max;
    cfg.rho = rho;
    cfg.rho_frac = rho_frac;
    cfg.trace = trace;
    cfg.format = parse_trace_format(format);
    if (!kappas.empty()) cfg.kappas = parse_kappas(kappas);
    const int threads = thread_request(std::getenv("LOWRANK_SDP_THREADS"));
    if (threads > 0) Eigen::setNbThreads(threads);

    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    if (cfg.subcommand == "maxcut") code = run_maxcut(cfg, out);
    else if (cfg.subcommand == "spca-dspca") code = run_dspca(cfg, out);
    else if (cfg.subcommand == "spca-spectral") code = run_spectral(cfg, out);
    else if (cfg.subcommand == "spca-homotopy") code = run_homotopy(cfg, out);
    else code = run_generic(cfg, out);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.quiet) out << "wall_time_s: " << std::setprecision(4) << secs << "\n";
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lowrank_sdp
