#include "ddlab/errors.hpp"
#include "ddlab/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct ProblemFlags {
  std::string sub_grid = "2x2";
  int elems_per_sub = 4;
  std::string geometry = "square";
  std::string dirichlet = "left";
  std::string coeff = "uniform:1";
  std::string q = "dirichlet";
  std::string rhs = "random";
  std::uint64_t seed = 42;
  double tol = 1e-8;
  int maxit = 500;
};

ddlab::ProblemConfig make_config(const ProblemFlags& f)
{
  ddlab::ProblemConfig c;
  if (f.geometry == "square") c.geometry = ddlab::Geometry::square;
  else if (f.geometry == "bar") c.geometry = ddlab::Geometry::bar;
  else throw ddlab::ConfigError("unknown geometry '" + f.geometry + "'");
  const auto [mx, my] = ddlab::parse_sub_grid(f.sub_grid);
  c.subs_x = mx;
  c.subs_y = my;
  c.elems_per_sub = f.elems_per_sub;
  c.dirichlet = ddlab::parse_dirichlet(f.dirichlet);
  c.coefficient = ddlab::parse_coefficients(f.coeff);
  using Kind = ddlab::RhsSeed::Kind;
  if (f.rhs == "random") c.rhs.kind = Kind::random;
  else if (f.rhs == "ones") c.rhs.kind = Kind::ones;
  else if (f.rhs == "zero") c.rhs.kind = Kind::zero;
  else if (f.rhs == "load") c.rhs.kind = Kind::load;
  else throw ddlab::ConfigError("unknown rhs '" + f.rhs + "'");
  c.rhs.seed = f.seed;
  c.validate();
  return c;
}

std::vector<int> parse_int_list(const std::string& text, const char* what)
{
  std::vector<int> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ddlab::ConfigError(std::string("malformed ") + what + " list");
    values.push_back(v);
  }
  if (values.empty()) throw ddlab::ConfigError(std::string("empty ") + what + " list");
  return values;
}

void add_problem_flags(CLI::App& app, ProblemFlags& f, bool with_grid)
{
  if (with_grid) {
    app.add_option("--sub-grid", f.sub_grid, "substructure grid MxN")->capture_default_str();
    app.add_option("--elems-per-sub", f.elems_per_sub, "elements per substructure edge")->capture_default_str();
  }
  app.add_option("--geometry", f.geometry, "square or bar")->capture_default_str();
  app.add_option("--dirichlet", f.dirichlet, "left, all or left-bottom")->capture_default_str();
  app.add_option("--coeff", f.coeff, "uniform:RHO or checkerboard:RHO1,RHO2")->capture_default_str();
  app.add_option("--q", f.q, "FETI-1 projector weight: identity or dirichlet")->capture_default_str();
  app.add_option("--rhs", f.rhs, "interface right-hand side: random, ones, zero or load")->capture_default_str();
  app.add_option("--seed", f.seed, "seed of the random right-hand side")->capture_default_str();
  app.add_option("--tol", f.tol, "relative PCG tolerance")->capture_default_str();
  app.add_option("--maxit", f.maxit, "PCG iteration limit")->capture_default_str();
}

void write_output(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ddlab::ConfigError("cannot write '" + path + "'");
  out << text;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Substructuring lab: FETI-1, P-FETI-1, BDD, FETI-DP, P-FETI-DP and BDDC on a model Laplace problem"};
  ProblemFlags run;
  std::vector<std::string> methods;
  std::string scaling = "multiplicity";
  std::string out_path;
  bool certify_all = false;
  bool timings = false;
  add_problem_flags(app, run, true);
  app.add_option("--scaling", scaling, "multiplicity or stiffness")->capture_default_str();
  app.add_option("--method", methods, "method to run (repeatable; default all)");
  app.add_flag("--certify-all", certify_all, "run the algebra, identity and theorem checks");
  app.add_flag("--timings", timings, "include wall-clock timings in the report");
  app.add_option("--out", out_path, "report path (default stdout)");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "condition-number sweep over substructure counts and sizes");
  ProblemFlags sw;
  std::string m_list = "4", n_list = "2,4,8,16", table_path;
  std::vector<std::string> sweep_scalings{"multiplicity"};
  std::vector<std::string> sweep_methods{"bddc"};
  add_problem_flags(*sweep_cmd, sw, false);
  sweep_cmd->add_option("--m", m_list, "comma-separated substructures per side")->capture_default_str();
  sweep_cmd->add_option("--n", n_list, "comma-separated elements per substructure edge")->capture_default_str();
  sweep_cmd->add_option("--scaling", sweep_scalings, "scalings (repeatable)")->capture_default_str();
  sweep_cmd->add_option("--method", sweep_methods, "methods (repeatable)")->capture_default_str();
  sweep_cmd->add_option("--table", table_path, "table path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sweep_cmd) {
      ddlab::SweepOptions options;
      options.base = make_config(sw);
      options.m_values = parse_int_list(m_list, "--m");
      options.n_values = parse_int_list(n_list, "--n");
      options.scalings.clear();
      for (const auto& s : sweep_scalings) options.scalings.push_back(ddlab::parse_scaling(s));
      for (const auto& m : sweep_methods) options.methods.push_back(ddlab::parse_method(m));
      options.q = ddlab::parse_q(sw.q);
      options.pcg = {sw.tol, sw.maxit};
      const ddlab::SweepResult result = ddlab::sweep(options);
      std::ostringstream table;
      ddlab::write_table(table, result);
      write_output(table_path, table.str());
      if (result.any_error()) {
        std::cerr << "ddlab: sweep: at least one row failed\n";
        return 2;
      }
      return 0;
    }

    ddlab::ExperimentOptions options;
    options.config = make_config(run);
    options.scaling = ddlab::parse_scaling(scaling);
    options.q = ddlab::parse_q(run.q);
    for (const auto& m : methods) options.methods.push_back(ddlab::parse_method(m));
    options.certify_all = certify_all;
    options.timings = timings;
    options.pcg = {run.tol, run.maxit};
    const ddlab::ExperimentResult result = ddlab::run_experiment(options);
    write_output(out_path, result.report.dump(2) + "\n");
    for (const auto& name : result.failed_checks) std::cerr << "ddlab: check failed: " << name << '\n';
    return result.exit_code;
  } catch (const ddlab::ConfigError& e) {
    std::cerr << "ddlab: usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ddlab: numerical failure: " << e.what() << '\n';
    return 2;
  }
}
