#include "cli.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>

#include "sysid/controlled.hpp"
#include "sysid/report_io.hpp"
#include "sysid/sim.hpp"
#include "sysid/spectral.hpp"
#include "sysid/uncontrolled.hpp"

namespace sysid::cli {

namespace {

constexpr Eigen::Index kMaxDimension = 64;

struct Output {
  std::string path;
  std::string format = "json";
};

void add_output_flags(CLI::App* cmd, Output& o) {
  cmd->add_option("--output", o.path, "Write the report to this file instead of stdout");
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void emit(const std::string& text, const Output& o, std::ostream& out) {
  if (o.path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.path, std::ios::binary);
  if (!file) throw InputError("output: cannot write '" + o.path + "'");
  file << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json header(std::string_view command, Json flags) {
  Json j;
  j["command"] = std::string(command);
  j["flags"] = std::move(flags);
  j["prng"] = std::string(kPrngId);
  return j;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                   : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

Matrix load_square(const std::string& path, std::string_view name) {
  Matrix A = load_matrix_file(path, name);
  if (A.rows() != A.cols()) throw InputError(std::string(name) + " must be square");
  if (A.rows() > kMaxDimension) {
    throw InputError(std::string(name) + " dimension exceeds " + std::to_string(kMaxDimension));
  }
  return A;
}

Vector parse_vector(std::string_view s, std::string_view field) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_double(parts[i], field);
  }
  return v;
}

/// "constant:<v1,v2,...>" or "feedback:<Kfile>[,<c1,c2,...>]".
Policy parse_policy(const std::string& spec, Eigen::Index d, Eigen::Index p) {
  const std::string_view s(spec);
  if (s.rfind("constant:", 0) == 0) {
    Vector u = parse_vector(s.substr(9), "input");
    if (u.size() != p) {
      throw InputError("input: constant vector has length " + std::to_string(u.size()) +
                       ", B has " + std::to_string(p) + " columns");
    }
    return Policy::constant(std::move(u));
  }
  if (s.rfind("feedback:", 0) == 0) {
    const std::string_view rest = s.substr(9);
    const std::size_t comma = rest.find(',');
    const std::string path(rest.substr(0, comma));
    Matrix K = load_matrix_file(path, "K");
    if (K.rows() != p || K.cols() != d) {
      throw InputError("K must be " + std::to_string(p) + "x" + std::to_string(d));
    }
    Vector c = Vector::Zero(p);
    if (comma != std::string_view::npos) {
      c = parse_vector(rest.substr(comma + 1), "input");
      if (c.size() != p) throw InputError("input: feedback offset must have length p");
    }
    return Policy::feedback(std::move(K), std::move(c));
  }
  throw InputError("input: expected 'constant:<vec>' or 'feedback:<Kfile>,<vec>'");
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

struct BoundArgs {
  std::string A;
  double eps = 0.0;
  double delta = 0.0;
  std::string method = "both";
  Output out;
};

int cmd_bound(const BoundArgs& a, std::ostream& out) {
  const Matrix A = load_square(a.A, "A");
  const AccuracySpec spec(a.eps, a.delta);

  std::vector<BoundReport> reports;
  if (a.method == "gramian" || a.method == "both") reports.push_back(tau_gramian(A, spec));
  if (a.method == "spectral" || a.method == "both") reports.push_back(tau_spectral(A, spec));

  if (a.out.format == "csv") {
    std::string text = "method,t,value\n";
    for (const auto& r : reports) {
      for (const auto& p : r.curve) {
        text += std::string(to_string(r.method)) + "," + std::to_string(p.t) + "," +
                format_double(p.value) + "\n";
      }
    }
    emit(text, a.out, out);
    return kOk;
  }

  Json flags;
  flags["A"] = a.A;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["method"] = a.method;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("bound", std::move(flags));
  j["dimension"] = A.rows();
  if (a.method != "gramian") j["lambda_d_amplitude"] = eigenvalues_sorted(A).min_amplitude();
  Json list = Json::array();
  for (const auto& r : reports) {
    j["tau_" + std::string(to_string(r.method))] = r.tau;
    list.push_back(to_json(r));
  }
  j["trivial"] = !reports.empty() && reports.front().trivial;
  j["reports"] = std::move(list);
  emit(dump(j), a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// confuse
// ---------------------------------------------------------------------------

struct ConfuseArgs {
  std::string A;
  double eps = 0.0;
  double delta = 0.05;
  std::string kind = "schur";
  std::int64_t t = 10;
  std::string out_matrix;
  Output out;
};

int cmd_confuse(const ConfuseArgs& a, std::ostream& out) {
  const Matrix A = load_square(a.A, "A");
  const AccuracySpec spec(a.eps, a.delta);
  if (a.t < 1) throw InputError("t must be >= 1");
  const ConfusingInstance inst =
      a.kind == "gramian" ? confusing_gramian(A, spec, a.t) : confusing_schur(A, spec);
  if (!a.out_matrix.empty()) save_matrix_file(a.out_matrix, inst.Aprime);

  const double llr = expected_llr(A, inst.Aprime, a.t);
  if (a.out.format == "csv") {
    std::string text = "kind,distance,lambda_d_amplitude,t,expected_llr\n";
    text += std::string(to_string(inst.kind)) + "," + format_double(inst.distance) + "," +
            format_double(eigenvalues_sorted(A).min_amplitude()) + "," + std::to_string(a.t) +
            "," + format_double(llr) + "\n";
    emit(text, a.out, out);
    return kOk;
  }

  Json flags;
  flags["A"] = a.A;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["kind"] = a.kind;
  flags["t"] = a.t;
  flags["out_matrix"] = a.out_matrix;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("confuse", std::move(flags));
  j["kind"] = std::string(to_string(inst.kind));
  j["distance"] = inst.distance;
  j["in_admissible_gap"] = check_locally_stable_gap(A, inst.Aprime, spec);
  j["lambda_d_amplitude"] = eigenvalues_sorted(A).min_amplitude();
  j["t"] = a.t;
  j["expected_llr"] = llr;
  j["Aprime"] = matrix_to_json(inst.Aprime);
  emit(dump(j), a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string A;
  double eps = 0.0;
  double delta = 0.0;
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
  std::int64_t tmax = 1'000'000;
  Output out;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const Matrix A = load_square(a.A, "A");
  const AccuracySpec spec(a.eps, a.delta);
  if (a.trials < 1) throw InputError("trials must be >= 1");
  const TightnessReport r = tightness_report(UncontrolledSystem(A), spec, a.trials, a.seed, a.tmax);

  if (a.out.format == "csv") {
    std::string text = "t,success_fraction\n";
    for (const auto& p : r.success_curve) {
      text += std::to_string(p.t) + "," + format_double(p.fraction) + "\n";
    }
    emit(text, a.out, out);
    return kOk;
  }
  Json flags;
  flags["A"] = a.A;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["trials"] = a.trials;
  flags["seed"] = a.seed;
  flags["tmax"] = a.tmax;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("verify", std::move(flags));
  j["report"] = to_json(r);
  emit(dump(j), a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// bound-controlled
// ---------------------------------------------------------------------------

struct ControlledArgs {
  std::string A;
  std::string B;
  double eps = 0.0;
  double delta = 0.0;
  std::string input;
  std::string variant = "theorem2";
  Output out;
};

int cmd_bound_controlled(const ControlledArgs& a, std::ostream& out) {
  const Matrix A = load_square(a.A, "A");
  const Matrix B = load_matrix_file(a.B, "B");
  if (B.rows() != A.rows()) throw InputError("B must have as many rows as A");
  const ControlledSystem sys(A, B);
  const AccuracySpec spec(a.eps, a.delta);
  const ScalarVariant variant = scalar_variant_from_string(a.variant);
  const Policy policy = parse_policy(a.input, sys.state_dim(), sys.input_dim());
  const BoundReport r = tau_controlled(sys, spec, policy);

  const bool scalar_constant = sys.state_dim() == 1 && sys.input_dim() == 1 &&
                               policy.kind() == Policy::Kind::constant;
  if (a.out.format == "csv") {
    std::string text = "t,value\n";
    for (const auto& p : r.curve) text += std::to_string(p.t) + "," + format_double(p.value) + "\n";
    emit(text, a.out, out);
    return kOk;
  }

  Json flags;
  flags["A"] = a.A;
  flags["B"] = a.B;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["input"] = a.input;
  flags["variant"] = a.variant;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("bound-controlled", std::move(flags));
  j["tau"] = r.tau;
  j["report"] = to_json(r);
  if (scalar_constant) {
    const double aa = A(0, 0), bb = B(0, 0), u = policy.as_constant().u(0);
    const BoundReport closed = tau_scalar_constant(aa, bb, spec, u, variant);
    Json check;
    check["variant"] = std::string(to_string(variant));
    check["tau"] = closed.tau;
    check["f_at_tau"] = f_scalar(aa, bb, r.tau, u, variant);
    check["agrees"] = closed.tau == r.tau;
    j["scalar_check"] = std::move(check);
  }
  emit(dump(j), a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// design-input
// ---------------------------------------------------------------------------

struct DesignArgs {
  double a = 0.0;
  double b = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double umax = 0.0;
  std::string variant = "theorem2";
  Output out;
};

int cmd_design_input(const DesignArgs& a, std::ostream& out) {
  const AccuracySpec spec(a.eps, a.delta);
  const InputDesign d =
      design_constant_input(a.a, a.b, spec, a.umax, scalar_variant_from_string(a.variant));
  if (a.out.format == "csv") {
    std::string text = "u,tau\n";
    for (const auto& [u, tau] : d.scan) {
      text += format_double(u) + "," + (tau >= 0 ? std::to_string(tau) : std::string()) + "\n";
    }
    emit(text, a.out, out);
    return kOk;
  }
  Json flags;
  flags["a"] = a.a;
  flags["b"] = a.b;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["umax"] = a.umax;
  flags["variant"] = a.variant;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("design-input", std::move(flags));
  j["design"] = to_json(d);
  emit(dump(j), a.out, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string family;
  double eps = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  Output out{"", "csv"};
};

struct SweepRow {
  double param = 0.0;
  std::int64_t tau_gramian = 0;
  std::int64_t tau_spectral = 0;
  double threshold = 0.0;
};

double grid_point(double lo, double hi, std::int64_t n, std::int64_t i) {
  if (n == 1) return lo;
  if (i == n - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const AccuracySpec spec(a.eps, a.delta);
  const auto parts = split(a.family, ':');
  std::vector<SweepRow> rows;
  if (parts.size() == 4 && parts[0] == "scalar") {
    const double lo = parse_double(parts[1], "family");
    const double hi = parse_double(parts[2], "family");
    const std::int64_t n = parse_int(parts[3], "family");
    if (n < 1) throw InputError("family: n must be >= 1");
    for (std::int64_t i = 0; i < n; ++i) {
      const double value = grid_point(lo, hi, n, i);
      const Matrix A = Matrix::Constant(1, 1, value);
      rows.push_back({value, tau_gramian(A, spec).tau, tau_spectral(A, spec).tau,
                      rate_threshold(spec)});
    }
  } else if (parts.size() == 5 && parts[0] == "scaled-orthogonal") {
    const double lo = parse_double(parts[1], "family");
    const double hi = parse_double(parts[2], "family");
    const std::int64_t n = parse_int(parts[3], "family");
    const std::int64_t d = parse_int(parts[4], "family");
    if (n < 1) throw InputError("family: n must be >= 1");
    if (d < 1 || d > kMaxDimension) throw InputError("family: d must lie in [1, 64]");
    for (std::int64_t i = 0; i < n; ++i) {
      const double rho = grid_point(lo, hi, n, i);
      const Matrix A = rho * random_orthogonal(d, derive_seed(a.seed, static_cast<std::uint64_t>(i)));
      rows.push_back({rho, tau_gramian(A, spec).tau, tau_spectral(A, spec).tau,
                      rate_threshold(spec)});
    }
  } else {
    throw InputError("family: expected 'scalar:a0:a1:n' or 'scaled-orthogonal:rho0:rho1:n:d'");
  }

  if (a.out.format == "csv") {
    std::string text = "param,tau_gramian,tau_spectral,threshold\n";
    for (const auto& r : rows) {
      text += format_double(r.param) + "," + std::to_string(r.tau_gramian) + "," +
              std::to_string(r.tau_spectral) + "," + format_double(r.threshold) + "\n";
    }
    emit(text, a.out, out);
    return kOk;
  }
  Json flags;
  flags["family"] = a.family;
  flags["eps"] = a.eps;
  flags["delta"] = a.delta;
  flags["seed"] = a.seed;
  flags["format"] = a.out.format;
  flags["output"] = a.out.path;
  Json j = header("sweep", std::move(flags));
  Json list = Json::array();
  for (const auto& r : rows) {
    Json row;
    row["param"] = r.param;
    row["tau_gramian"] = r.tau_gramian;
    row["tau_spectral"] = r.tau_spectral;
    row["threshold"] = r.threshold;
    list.push_back(std::move(row));
  }
  j["rows"] = std::move(list);
  emit(dump(j), a.out, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sample-complexity lower bounds for linear system identification", "sysid"};
  app.require_subcommand(1);

  BoundArgs bound;
  auto* c_bound = app.add_subcommand("bound", "Lower bounds for x_{t+1} = A x_t + w_t");
  c_bound->add_option("--A", bound.A, "MatrixFile holding A")->required();
  c_bound->add_option("--eps", bound.eps, "Frobenius accuracy")->required();
  c_bound->add_option("--delta", bound.delta, "Failure probability")->required();
  c_bound->add_option("--method", bound.method, "Which bound to compute")
      ->check(CLI::IsMember({"gramian", "spectral", "both"}))
      ->capture_default_str();
  add_output_flags(c_bound, bound.out);

  ConfuseArgs confuse;
  auto* c_confuse = app.add_subcommand("confuse", "Construct a confusing instance A'");
  c_confuse->add_option("--A", confuse.A, "MatrixFile holding A")->required();
  c_confuse->add_option("--eps", confuse.eps, "Frobenius accuracy")->required();
  c_confuse->add_option("--delta", confuse.delta, "Failure probability")->capture_default_str();
  c_confuse->add_option("--kind", confuse.kind, "Construction")
      ->check(CLI::IsMember({"schur", "gramian"}))
      ->capture_default_str();
  c_confuse->add_option("--t", confuse.t, "Horizon for the gramian direction and expected LLR")
      ->capture_default_str();
  c_confuse->add_option("--out-matrix", confuse.out_matrix, "Write A' as a MatrixFile");
  add_output_flags(c_confuse, confuse.out);

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Compare bounds with the empirical OLS sample complexity");
  c_verify->add_option("--A", verify.A, "MatrixFile holding A")->required();
  c_verify->add_option("--eps", verify.eps, "Frobenius accuracy")->required();
  c_verify->add_option("--delta", verify.delta, "Failure probability")->required();
  c_verify->add_option("--trials", verify.trials, "Monte Carlo trials")->capture_default_str();
  c_verify->add_option("--seed", verify.seed, "Base seed")->capture_default_str();
  c_verify->add_option("--tmax", verify.tmax, "Largest horizon simulated")->capture_default_str();
  add_output_flags(c_verify, verify.out);

  ControlledArgs controlled;
  auto* c_controlled =
      app.add_subcommand("bound-controlled", "Lower bound for x_{t+1} = A x_t + B u_t + w_t");
  c_controlled->add_option("--A", controlled.A, "MatrixFile holding A")->required();
  c_controlled->add_option("--B", controlled.B, "MatrixFile holding B")->required();
  c_controlled->add_option("--eps", controlled.eps, "Frobenius accuracy")->required();
  c_controlled->add_option("--delta", controlled.delta, "Failure probability")->required();
  c_controlled
      ->add_option("--input", controlled.input, "constant:<v1,...> or feedback:<Kfile>,<c1,...>")
      ->required();
  c_controlled->add_option("--variant", controlled.variant, "Scalar cross-check variant")
      ->check(CLI::IsMember({"paper", "theorem2"}))
      ->capture_default_str();
  add_output_flags(c_controlled, controlled.out);

  DesignArgs design;
  auto* c_design = app.add_subcommand("design-input", "Best constant input for a scalar system");
  c_design->add_option("--a", design.a, "State coefficient a")->required();
  c_design->add_option("--b", design.b, "Input coefficient b")->required();
  c_design->add_option("--eps", design.eps, "Frobenius accuracy")->required();
  c_design->add_option("--delta", design.delta, "Failure probability")->required();
  c_design->add_option("--umax", design.umax, "Input amplitude limit")->required();
  c_design->add_option("--variant", design.variant, "Information-matrix variant")
      ->check(CLI::IsMember({"paper", "theorem2"}))
      ->capture_default_str();
  add_output_flags(c_design, design.out);

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Bounds over a scalar or scaled-orthogonal family");
  c_sweep->add_option("--family", sweep.family,
                      "scalar:a0:a1:n or scaled-orthogonal:rho0:rho1:n:d")
      ->required();
  c_sweep->add_option("--eps", sweep.eps, "Frobenius accuracy")->required();
  c_sweep->add_option("--delta", sweep.delta, "Failure probability")->required();
  c_sweep->add_option("--seed", sweep.seed, "Seed for the random orthogonal factors")
      ->capture_default_str();
  add_output_flags(c_sweep, sweep.out);

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (c_bound->parsed()) return cmd_bound(bound, out);
    if (c_confuse->parsed()) return cmd_confuse(confuse, out);
    if (c_verify->parsed()) return cmd_verify(verify, out);
    if (c_controlled->parsed()) return cmd_bound_controlled(controlled, out);
    if (c_design->parsed()) return cmd_design_input(design, out);
    if (c_sweep->parsed()) return cmd_sweep(sweep, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kNumericalError;
  } catch (const HorizonExhaustedError& e) {
    err << "error: " << e.what() << " (final success fraction " << e.final_fraction() << ")\n";
    return kHorizonExhausted;
  } catch (const IterationCapError& e) {
    err << "error: " << e.what() << '\n';
    return kHorizonExhausted;
  } catch (const UnreachableBoundError& e) {
    err << "error: " << e.what() << '\n';
    return kUnreachable;
  }
  return kInputError;
}

}  // namespace sysid::cli
