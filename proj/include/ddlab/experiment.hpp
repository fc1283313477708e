#pragma once

// Experiment runner behind the command-line tool: builds a configured
// problem, runs the requested methods, computes dense spectra and the
// theorem checks, and renders the JSON report and the sweep table.

#include "ddlab/krylov.hpp"
#include "ddlab/model_problem.hpp"
#include "ddlab/operators.hpp"
#include "ddlab/preconditioners.hpp"
#include "ddlab/spectral.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ddlab {

enum class Method { feti1, pfeti1, bdd, fetidp, pfetidp, bddc };

std::string to_string(Method m);
Method parse_method(const std::string& name);
Scaling parse_scaling(const std::string& name);
QChoice parse_q(const std::string& name);
DirichletEdges parse_dirichlet(const std::string& name);
/// "uniform:RHO" or "checkerboard:RHO1,RHO2"
Coefficients parse_coefficients(const std::string& text);
/// "MxN"
std::pair<int, int> parse_sub_grid(const std::string& text);
bool is_dual(Method m);
const std::vector<Method>& all_methods();

/// One problem with every operator the six methods need. Method-specific
/// pieces are built on first use; not safe for concurrent first use.
class Lab {
public:
  Lab(const ProblemConfig& config, Scaling scaling, QChoice q, Execution exec = Execution::parallel);
  Lab(const Lab&) = delete;
  Lab& operator=(const Lab&) = delete;

  [[nodiscard]] const Problem& problem() const { return problem_; }
  [[nodiscard]] const CouplingOperators& ops() const { return ops_; }
  [[nodiscard]] QChoice q() const { return q_; }
  const CoarseSplit& split();
  const Feti1Projector& projector();
  const Feti1Projector& projector(QChoice q);
  const Bdd& bdd();
  const FetiDp& fetidp();
  const Bddc& bddc();

  /// Primal preconditioner of a primal method as a map on W_hat.
  LinearMap primal_preconditioner(Method m);
  /// Dense preconditioner (primal methods only).
  Matrix dense_preconditioner(Method m);
  SpectrumReport spectrum(Method m);

private:
  Problem problem_;
  CouplingOperators ops_;
  QChoice q_;
  std::unique_ptr<CoarseSplit> split_;
  std::unique_ptr<Feti1Projector> projector_[2];
  std::unique_ptr<Bdd> bdd_;
  std::unique_ptr<FetiDp> fetidp_;
  std::unique_ptr<Bddc> bddc_;
};

struct SolveOutcome {
  SolveReport report;
  Vector u;
  double relative_error = 0.0;  // against the dense direct solve of S_hat u = r
};

SolveOutcome solve(Lab& lab, Method m, const Vector& r, const PcgOptions& options);

struct TheoremCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

TheoremCheck check_pfeti1_equals_bdd(Lab& lab);
TheoremCheck check_pfetidp_equals_bddc(Lab& lab);
TheoremCheck check_spectra_bdd_feti1(Lab& lab);
TheoremCheck check_spectra_bddc_fetidp(Lab& lab);

struct ExperimentOptions {
  ProblemConfig config;
  Scaling scaling = Scaling::multiplicity;
  QChoice q = QChoice::dirichlet;
  std::vector<Method> methods;
  bool certify_all = false;
  bool timings = false;
  PcgOptions pcg;
};

struct ExperimentResult {
  nlohmann::json report;
  int exit_code = 0;  // 0 pass, 2 numerical check failure
  std::vector<std::string> failed_checks;
};

/// Throws ConfigError on invalid input.
ExperimentResult run_experiment(const ExperimentOptions& options);

/// kappa(n) against C (1 + log(1 + n))^2: ratios C_n = kappa / (1 + log(1 + n))^2.
struct LogSquaredFit {
  std::vector<double> ratios;
  double constant = 0.0;  // max ratio, so kappa(n) <= C (1 + log(1 + n))^2 on the data
  bool ratios_nonincreasing = false;
};

LogSquaredFit fit_log_squared(const std::vector<int>& n_values, const std::vector<double>& kappas);

struct SweepOptions {
  ProblemConfig base;
  std::vector<int> m_values;
  std::vector<int> n_values;
  std::vector<Scaling> scalings{Scaling::multiplicity};
  std::vector<Method> methods;
  QChoice q = QChoice::dirichlet;
  PcgOptions pcg;
};

struct SweepRow {
  int m = 0;
  int n = 0;
  Scaling scaling = Scaling::multiplicity;
  Method method = Method::bddc;
  int iterations = 0;
  double kappa = 0.0;          // dense spectrum
  double kappa_lanczos = 0.0;  // from the PCG coefficients
  std::string status = "ok";
};

struct SweepFit {
  int m = 0;
  Scaling scaling = Scaling::multiplicity;
  Method method = Method::bddc;
  LogSquaredFit fit;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFit> fits;
  [[nodiscard]] bool any_error() const;
};

/// Throws ConfigError for empty ranges or an empty method list.
SweepResult sweep(const SweepOptions& options);
void write_table(std::ostream& out, const SweepResult& result);

} // namespace ddlab
