#include "ddlab/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>

namespace {

double best_ms(int repeat, const std::function<void()>& fn)
{
  double best = 1e300;
  for (int k = 0; k < repeat; ++k) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"serial vs OpenMP kernel timings"};
  int m = 4, n = 8, repeat = 3;
  app.add_option("--m", m, "substructures per side")->capture_default_str();
  app.add_option("--n", n, "elements per substructure edge")->capture_default_str();
  app.add_option("--repeat", repeat, "repetitions (best time reported)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  ddlab::ProblemConfig config;
  config.subs_x = config.subs_y = m;
  config.elems_per_sub = n;

  std::printf("%-22s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");
  double max_diff = 0.0;
  auto report = [](const char* name, double serial, double parallel) {
    std::printf("%-22s %12.3f %12.3f %8.2f\n", name, serial, parallel, parallel > 0 ? serial / parallel : 0.0);
  };

  const double build_serial = best_ms(repeat, [&] { (void)ddlab::build_problem(config, ddlab::Execution::serial); });
  const double build_parallel = best_ms(repeat, [&] { (void)ddlab::build_problem(config, ddlab::Execution::parallel); });
  report("build_problem", build_serial, build_parallel);

  const ddlab::Problem problem = ddlab::build_problem(config, ddlab::Execution::serial);
  ddlab::CouplingOperators serial_ops = ddlab::build_operators(problem, ddlab::Scaling::multiplicity, ddlab::Execution::serial);
  ddlab::CouplingOperators parallel_ops = serial_ops;
  parallel_ops.exec = ddlab::Execution::parallel;

  const ddlab::Vector w = ddlab::Vector::Ones(serial_ops.dim_w());
  ddlab::Vector ws, wp;
  const double pinv_serial = best_ms(repeat * 20, [&] { ws = serial_ops.apply_S_pinv(w); });
  const double pinv_parallel = best_ms(repeat * 20, [&] { wp = parallel_ops.apply_S_pinv(w); });
  report("S^+ apply", pinv_serial, pinv_parallel);
  max_diff = std::max(max_diff, (ws - wp).lpNorm<Eigen::Infinity>());

  const ddlab::CoarseSplit split = ddlab::build_coarse_split(problem, serial_ops);
  const ddlab::Bddc bddc_serial(serial_ops, split);
  const ddlab::Bddc bddc_parallel(parallel_ops, split);
  const ddlab::Index nh = serial_ops.dim_hat();
  ddlab::Matrix ms, mp;
  const double bddc_s = best_ms(repeat, [&] {
    ms = ddlab::assemble_dense(nh, nh, [&](const ddlab::Vector& r) { return bddc_serial.apply(r); }, ddlab::Execution::serial);
  });
  const double bddc_p = best_ms(repeat, [&] {
    mp = ddlab::assemble_dense(nh, nh, [&](const ddlab::Vector& r) { return bddc_parallel.apply(r); }, ddlab::Execution::parallel);
  });
  report("dense BDDC assembly", bddc_s, bddc_p);
  max_diff = std::max(max_diff, (ms - mp).lpNorm<Eigen::Infinity>());

  std::printf("max |serial - parallel| = %.3e\n", max_diff);
  return max_diff == 0.0 ? 0 : 1;
}
