#include "ddlab/experiment.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace ddlab {

using nlohmann::json;

std::string to_string(Method m)
{
  switch (m) {
  case Method::feti1: return "feti1";
  case Method::pfeti1: return "pfeti1";
  case Method::bdd: return "bdd";
  case Method::fetidp: return "fetidp";
  case Method::pfetidp: return "pfetidp";
  case Method::bddc: return "bddc";
  }
  return "?";
}

const std::vector<Method>& all_methods()
{
  static const std::vector<Method> methods{Method::feti1, Method::pfeti1, Method::bdd,
                                           Method::fetidp, Method::pfetidp, Method::bddc};
  return methods;
}

Method parse_method(const std::string& name)
{
  for (Method m : all_methods())
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method '" + name + "'");
}

Scaling parse_scaling(const std::string& name)
{
  if (name == "multiplicity") return Scaling::multiplicity;
  if (name == "stiffness") return Scaling::stiffness;
  throw ConfigError("unknown scaling '" + name + "'");
}

QChoice parse_q(const std::string& name)
{
  if (name == "dirichlet") return QChoice::dirichlet;
  if (name == "identity") return QChoice::identity;
  throw ConfigError("unknown Q choice '" + name + "'");
}

DirichletEdges parse_dirichlet(const std::string& name)
{
  if (name == "left") return DirichletEdges::left();
  if (name == "all") return DirichletEdges::all();
  if (name == "left-bottom") return DirichletEdges::left_bottom();
  throw ConfigError("unknown Dirichlet boundary '" + name + "'");
}

namespace {

std::string dirichlet_name(DirichletEdges d)
{
  if (d.mask == DirichletEdges::left().mask) return "left";
  if (d.mask == DirichletEdges::all().mask) return "all";
  if (d.mask == DirichletEdges::left_bottom().mask) return "left-bottom";
  return "mask:" + std::to_string(d.mask);
}

double parse_positive(const std::string& text, const std::string& what)
{
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("malformed " + what + " '" + text + "'");
  }
  if (used != text.size() || !(value > 0.0)) throw ConfigError("malformed " + what + " '" + text + "'");
  return value;
}

} // namespace

Coefficients parse_coefficients(const std::string& text)
{
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("coefficient must be uniform:RHO or checkerboard:RHO1,RHO2");
  const std::string kind = text.substr(0, colon);
  const std::string values = text.substr(colon + 1);
  if (kind == "uniform") return Coefficients::uniform(parse_positive(values, "coefficient"));
  if (kind == "checkerboard") {
    const auto comma = values.find(',');
    if (comma == std::string::npos) throw ConfigError("checkerboard needs two values");
    return Coefficients::checkerboard(parse_positive(values.substr(0, comma), "coefficient"),
                                      parse_positive(values.substr(comma + 1), "coefficient"));
  }
  throw ConfigError("unknown coefficient kind '" + kind + "'");
}

std::pair<int, int> parse_sub_grid(const std::string& text)
{
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("sub grid must look like MxN");
  try {
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, x), b = text.substr(x + 1);
    const int m = std::stoi(a, &used_a);
    const int n = std::stoi(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw ConfigError("sub grid must look like MxN");
    return {m, n};
  } catch (const std::logic_error&) {
    throw ConfigError("sub grid must look like MxN");
  }
}

bool is_dual(Method m)
{
  return m == Method::feti1 || m == Method::fetidp;
}

Lab::Lab(const ProblemConfig& config, Scaling scaling, QChoice q, Execution exec)
    : problem_(build_problem(config, exec)), ops_(build_operators(problem_, scaling, exec)), q_(q)
{
}

const CoarseSplit& Lab::split()
{
  if (!split_) split_ = std::make_unique<CoarseSplit>(build_coarse_split(problem_, ops_));
  return *split_;
}

const Feti1Projector& Lab::projector(QChoice q)
{
  auto& slot = projector_[q == QChoice::dirichlet ? 1 : 0];
  if (!slot) slot = std::make_unique<Feti1Projector>(ops_, q);
  return *slot;
}

const Feti1Projector& Lab::projector()
{
  return projector(q_);
}

const Bdd& Lab::bdd()
{
  if (!bdd_) bdd_ = std::make_unique<Bdd>(ops_);
  return *bdd_;
}

const FetiDp& Lab::fetidp()
{
  if (!fetidp_) fetidp_ = std::make_unique<FetiDp>(ops_, split());
  return *fetidp_;
}

const Bddc& Lab::bddc()
{
  if (!bddc_) bddc_ = std::make_unique<Bddc>(ops_, split());
  return *bddc_;
}

LinearMap Lab::primal_preconditioner(Method m)
{
  switch (m) {
  case Method::pfeti1: {
    const Feti1Projector& proj = projector();
    return [&proj](const Vector& r) { return pfeti1_apply(proj, r); };
  }
  case Method::bdd: {
    const Bdd& b = bdd();
    return [&b](const Vector& r) { return b.apply(r); };
  }
  case Method::pfetidp: {
    const CoarseSplit& s = split();
    return [&s](const Vector& r) { return pfetidp_apply(s, r); };
  }
  case Method::bddc: {
    const Bddc& b = bddc();
    return [&b](const Vector& r) { return b.apply(r); };
  }
  default:
    throw ConfigError(to_string(m) + " is a dual method");
  }
}

Matrix Lab::dense_preconditioner(Method m)
{
  const Index n = ops_.dim_hat();
  return assemble_dense(n, n, primal_preconditioner(m), ops_.exec);
}

SpectrumReport Lab::spectrum(Method m)
{
  if (m == Method::feti1) {
    const Feti1Projector& proj = projector();
    const Index nl = ops_.dim_lambda();
    const Matrix M = assemble_dense(nl, nl, [&](const Vector& v) { return feti1_precond_apply(ops_, v); }, ops_.exec);
    const Matrix F = assemble_dense(nl, nl, [&](const Vector& v) { return feti1_F_apply(ops_, v); }, ops_.exec);
    const Matrix P = assemble_dense(nl, nl, [&](const Vector& v) { return proj.apply_P(v); }, ops_.exec);
    return make_spectrum_report("feti1", dual_spectrum(M, F, P), {0.0, 1.0});
  }
  if (m == Method::fetidp) {
    const FetiDp& dp = fetidp();
    const Index nl = dp.dim_lambda();
    const Matrix M = assemble_dense(nl, nl, [&](const Vector& v) { return dp.apply_M(v); }, ops_.exec);
    const Matrix F = assemble_dense(nl, nl, [&](const Vector& v) { return dp.apply_F(v); }, ops_.exec);
    return make_spectrum_report("fetidp", dual_spectrum(M, F), {0.0, 1.0});
  }
  return make_spectrum_report(to_string(m), primal_spectrum(dense_preconditioner(m), ops_.S_hat), {1.0});
}

SolveOutcome solve(Lab& lab, Method m, const Vector& r, const PcgOptions& options)
{
  const CouplingOperators& ops = lab.ops();
  SolveOutcome out;
  if (m == Method::feti1) {
    const Feti1System sys = feti1_build(ops, lab.q(), ops.E.transpose() * r);
    out.report = projected_pcg(sys, options);
    out.u = recover_primal(sys, out.report.solution).u;
  } else if (m == Method::fetidp) {
    const FetiDp& dp = lab.fetidp();
    out.report = pcg([&](const Vector& v) { return dp.apply_F(v); }, [&](const Vector& v) { return dp.apply_M(v); },
                     dp.rhs(r), options);
    out.u = dp.recover(out.report.solution, r);
  } else {
    out.report = pcg([&](const Vector& v) { return Vector(ops.S_hat * v); }, lab.primal_preconditioner(m), r, options);
    out.u = out.report.solution;
  }
  const Vector direct = ops.S_hat_factor.solve(r);
  const double scale = direct.norm();
  out.relative_error = scale == 0.0 ? out.u.norm() : (out.u - direct).norm() / scale;
  return out;
}

TheoremCheck check_pfeti1_equals_bdd(Lab& lab)
{
  TheoremCheck check{"pfeti1-eq-bdd", false, 0.0, 1e-10, ""};
  const Feti1Projector& proj = lab.projector(QChoice::dirichlet);
  const Index n = lab.ops().dim_hat();
  const Matrix pfeti = assemble_dense(n, n, [&](const Vector& r) { return pfeti1_apply(proj, r); }, lab.ops().exec);
  const Matrix bdd = lab.dense_preconditioner(Method::bdd);
  check.measured = rel_frobenius_diff(pfeti, bdd);
  check.pass = check.measured <= check.tolerance;
  check.detail = "relative Frobenius difference of dense P-FETI-1 (Q = B_D S B_D^T) and BDD";
  return check;
}

TheoremCheck check_pfetidp_equals_bddc(Lab& lab)
{
  TheoremCheck check{"pfetidp-eq-bddc", false, 0.0, 1e-10, ""};
  const double operators = rel_frobenius_diff(lab.dense_preconditioner(Method::pfetidp),
                                              lab.dense_preconditioner(Method::bddc));
  const double gram = rel_frobenius_diff(lab.bddc().coarse_gram(), lab.split().S_cc_star);
  check.measured = std::max(operators, gram);
  check.pass = check.measured <= check.tolerance;
  std::ostringstream detail;
  detail << "dense P-FETI-DP vs BDDC " << operators << ", Psi^T S Psi vs S*_cc " << gram;
  check.detail = detail.str();
  return check;
}

namespace {

TheoremCheck spectral_check(std::string name, const SpectrumReport& primal, const SpectrumReport& dual)
{
  const MatchVerdict v = spectra_match(primal, dual, 1e-6);
  return {std::move(name), v.pass, v.max_pair_diff, 1e-6, v.message};
}

} // namespace

TheoremCheck check_spectra_bdd_feti1(Lab& lab)
{
  const CouplingOperators& ops = lab.ops();
  const Feti1Projector& proj = lab.projector(QChoice::dirichlet);
  const Index nl = ops.dim_lambda();
  const Matrix M = assemble_dense(nl, nl, [&](const Vector& v) { return feti1_precond_apply(ops, v); }, ops.exec);
  const Matrix F = assemble_dense(nl, nl, [&](const Vector& v) { return feti1_F_apply(ops, v); }, ops.exec);
  const Matrix P = assemble_dense(nl, nl, [&](const Vector& v) { return proj.apply_P(v); }, ops.exec);
  const SpectrumReport dual = make_spectrum_report("feti1", dual_spectrum(M, F, P), {0.0, 1.0});
  return spectral_check("spectra-bdd-feti1", lab.spectrum(Method::bdd), dual);
}

TheoremCheck check_spectra_bddc_fetidp(Lab& lab)
{
  return spectral_check("spectra-bddc-fetidp", lab.spectrum(Method::bddc), lab.spectrum(Method::fetidp));
}

namespace {

json config_json(const ExperimentOptions& o)
{
  const ProblemConfig& c = o.config;
  json coeff = {{"kind", c.coefficient.kind == Coefficients::Kind::uniform ? "uniform" : "checkerboard"},
                {"values", {c.coefficient.first, c.coefficient.second}}};
  static const char* rhs_names[] = {"zero", "ones", "random", "load"};
  return {{"geometry", to_string(c.geometry)},
          {"sub_grid", std::to_string(c.subs_x) + "x" + std::to_string(c.subs_y)},
          {"elems_per_sub", c.elems_per_sub},
          {"coefficient", coeff},
          {"dirichlet", dirichlet_name(c.dirichlet)},
          {"rhs", {{"kind", rhs_names[static_cast<int>(c.rhs.kind)]}, {"seed", c.rhs.seed}}},
          {"scaling", to_string(o.scaling)},
          {"q", to_string(o.q)},
          {"tol", o.pcg.tol},
          {"maxit", o.pcg.maxit}};
}

json spectrum_json(const SpectrumReport& s)
{
  json clusters = json::array();
  for (const Cluster& c : s.multiplicity_table) clusters.push_back({{"value", c.value}, {"count", c.count}});
  return {{"count", s.eigenvalues.size()},
          {"min", s.eigenvalues.size() ? s.eigenvalues(0) : 0.0},
          {"max", s.eigenvalues.size() ? s.eigenvalues(s.eigenvalues.size() - 1) : 0.0},
          {"condition_number", s.condition_number()},
          {"excluded_targets", s.excluded_targets},
          {"excluded_count", s.removed.size()},
          {"identification_tol", s.identification_tol},
          {"clusters", clusters}};
}

json check_json(const TheoremCheck& c)
{
  return {{"pass", c.pass}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"detail", c.detail}};
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

} // namespace

ExperimentResult run_experiment(const ExperimentOptions& options)
{
  options.config.validate();
  ExperimentResult result;
  json& report = result.report;
  json timings = json::object();
  report["config"] = config_json(options);

  auto start = Clock::now();
  Lab lab(options.config, options.scaling, options.q);
  timings["build"] = elapsed_ms(start);
  const Vector r = interface_rhs(lab.problem());
  report["problem"] = {{"substructures", lab.problem().num_subs()},
                       {"floating", lab.problem().num_floating()},
                       {"dim_w_hat", lab.ops().dim_hat()},
                       {"dim_w", lab.ops().dim_w()},
                       {"dim_lambda", lab.ops().dim_lambda()}};

  json verdicts = json::object();
  auto record = [&](const TheoremCheck& c) {
    verdicts[c.name] = check_json(c);
    if (!c.pass) result.failed_checks.push_back(c.name);
  };

  const std::vector<Method> methods = options.methods.empty() ? all_methods() : options.methods;
  json per_method = json::object();
  for (Method m : methods) {
    const std::string name = to_string(m);
    json entry;
    start = Clock::now();
    try {
      const SolveOutcome out = solve(lab, m, r, options.pcg);
      entry["solve"] = {{"iterations", out.report.iterations},
                        {"converged", out.report.converged},
                        {"kappa_estimate", out.report.kappa_estimate},
                        {"residual_history", out.report.residual_history},
                        {"relative_error", out.relative_error}};
      record({"solve-" + name, out.report.converged && out.relative_error <= 1e-6, out.relative_error, 1e-6,
              "relative error against the dense direct solve"});
      timings["solve-" + name] = elapsed_ms(start);
      start = Clock::now();
      entry["spectrum"] = spectrum_json(lab.spectrum(m));
      timings["spectrum-" + name] = elapsed_ms(start);
    } catch (const NumericalError& e) {
      entry["error"] = e.what();
      record({"solve-" + name, false, 0.0, 1e-6, e.what()});
    }
    per_method[name] = entry;
  }
  report["methods"] = per_method;

  if (options.certify_all) {
    start = Clock::now();
    const AlgebraReport algebra = verify_algebra(lab.ops());
    const double algebra_tol = options.scaling == Scaling::multiplicity ? 1e-12 : 1e-10;
    report["algebra"] = {{"BR", algebra.br},
                         {"ER-I", algebra.er_minus_identity},
                         {"BD^T B+RE-I", algebra.jump_plus_average},
                         {"B^T BD E^T", algebra.jump_average_transpose},
                         {"tolerance", algebra_tol}};
    record({"algebra", algebra.pass(algebra_tol), algebra.worst(), algebra_tol, "max-norm residuals"});

    auto guarded = [&](const char* name, auto&& fn) {
      try {
        record(fn());
      } catch (const NumericalError& e) {
        record({name, false, 0.0, 0.0, e.what()});
      }
    };
    guarded("identities", [&] {
      const IdentityTable table = identity_suite(lab.ops(), lab.projector(QChoice::dirichlet), lab.bdd());
      json rows = json::object();
      for (const auto& row : table.rows) rows[row.name] = row.residual;
      report["identities"] = rows;
      return TheoremCheck{"identities", table.pass(1e-10), table.worst(), 1e-10, "normalized Frobenius residuals"};
    });
    guarded("pfeti1-eq-bdd", [&] { return check_pfeti1_equals_bdd(lab); });
    guarded("pfetidp-eq-bddc", [&] { return check_pfetidp_equals_bddc(lab); });
    guarded("spectra-bdd-feti1", [&] { return check_spectra_bdd_feti1(lab); });
    guarded("spectra-bddc-fetidp", [&] { return check_spectra_bddc_fetidp(lab); });
    timings["certify"] = elapsed_ms(start);
  }

  report["verdicts"] = verdicts;
  report["failed_checks"] = result.failed_checks;
  report["status"] = result.failed_checks.empty() ? "pass" : "fail";
  if (options.timings) report["timings_ms"] = timings;
  result.exit_code = result.failed_checks.empty() ? 0 : 2;
  return result;
}

LogSquaredFit fit_log_squared(const std::vector<int>& n_values, const std::vector<double>& kappas)
{
  LogSquaredFit fit;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const double shape = std::pow(1.0 + std::log(1.0 + n_values[k]), 2);
    fit.ratios.push_back(kappas[k] / shape);
  }
  fit.constant = fit.ratios.empty() ? 0.0 : *std::max_element(fit.ratios.begin(), fit.ratios.end());
  fit.ratios_nonincreasing = true;
  for (std::size_t k = 1; k < fit.ratios.size(); ++k)
    fit.ratios_nonincreasing = fit.ratios_nonincreasing && fit.ratios[k] <= fit.ratios[k - 1];
  return fit;
}

bool SweepResult::any_error() const
{
  return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
}

SweepResult sweep(const SweepOptions& options)
{
  if (options.m_values.empty() || options.n_values.empty()) throw ConfigError("sweep ranges must be nonempty");
  if (options.methods.empty()) throw ConfigError("sweep needs at least one method");
  if (options.scalings.empty()) throw ConfigError("sweep needs at least one scaling");
  SweepResult result;
  for (int m : options.m_values) {
    for (int n : options.n_values) {
      for (Scaling scaling : options.scalings) {
        ProblemConfig config = options.base;
        config.subs_x = m;
        config.subs_y = config.geometry == Geometry::bar ? 1 : m;
        config.elems_per_sub = n;
        config.validate();
        std::unique_ptr<Lab> lab;
        std::string build_error;
        try {
          lab = std::make_unique<Lab>(config, scaling, options.q);
        } catch (const std::runtime_error& e) {
          build_error = e.what();
        }
        for (Method method : options.methods) {
          SweepRow row{m, n, scaling, method};
          if (!lab) {
            row.status = "error: " + build_error;
          } else {
            try {
              const SolveOutcome out = solve(*lab, method, interface_rhs(lab->problem()), options.pcg);
              row.iterations = out.report.iterations;
              row.kappa_lanczos = out.report.kappa_estimate;
              row.kappa = lab->spectrum(method).condition_number();
              if (!out.report.converged) row.status = "not converged";
            } catch (const std::runtime_error& e) {
              row.status = std::string("error: ") + e.what();
            }
          }
          result.rows.push_back(row);
        }
      }
    }
  }
  for (int m : options.m_values)
    for (Scaling scaling : options.scalings)
      for (Method method : options.methods) {
        std::vector<int> ns;
        std::vector<double> kappas;
        for (const SweepRow& row : result.rows)
          if (row.m == m && row.scaling == scaling && row.method == method && row.status == "ok") {
            ns.push_back(row.n);
            kappas.push_back(row.kappa);
          }
        result.fits.push_back({m, scaling, method, fit_log_squared(ns, kappas)});
      }
  return result;
}

void write_table(std::ostream& out, const SweepResult& result)
{
  out << "kind,m,n,scaling,method,iterations,kappa,kappa_lanczos,status\n";
  out << std::setprecision(10);
  for (const SweepRow& r : result.rows)
    out << "row," << r.m << ',' << r.n << ',' << to_string(r.scaling) << ',' << to_string(r.method) << ','
        << r.iterations << ',' << r.kappa << ',' << r.kappa_lanczos << ',' << r.status << '\n';
  for (const SweepFit& f : result.fits)
    out << "fit," << f.m << ",," << to_string(f.scaling) << ',' << to_string(f.method) << ",," << f.fit.constant
        << ",," << (f.fit.ratios_nonincreasing ? "ratios-nonincreasing" : "ratios-increasing") << '\n';
}

} // namespace ddlab
