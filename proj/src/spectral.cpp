#include "ddlab/spectral.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>

namespace ddlab {

namespace {

Matrix symmetrized(const Matrix& a)
{
  return 0.5 * (a + a.transpose());
}

} // namespace

Vector primal_spectrum(const Matrix& M, const Matrix& S_hat)
{
  const SpdFactor factor(S_hat, "S_hat (primal spectrum)");
  const Matrix L = factor.lower();
  return sym_eigenvalues(symmetrized(L.transpose() * M * L));
}

Vector dual_spectrum(const Matrix& M, const Matrix& F, const std::optional<Matrix>& P)
{
  const Matrix A = P ? symmetrized(P->transpose() * F * *P) : symmetrized(F);
  const Matrix root = psd_sqrt(A);
  return sym_eigenvalues(symmetrized(root * M * root));
}

std::vector<Cluster> cluster_values(const std::vector<double>& sorted, double gap)
{
  std::vector<Cluster> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i] - sorted[i - 1] > gap) {
      if (!out.empty()) out.back().value = sum / out.back().count;
      out.push_back({sorted[i], 0});
      sum = 0.0;
    }
    sum += sorted[i];
    ++out.back().count;
  }
  if (!out.empty()) out.back().value = sum / out.back().count;
  return out;
}

double SpectrumReport::condition_number() const
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    const double v = eigenvalues(i);
    if (v <= identification_tol) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi > 0.0 ? hi / lo : std::numeric_limits<double>::quiet_NaN();
}

SpectrumReport make_spectrum_report(std::string method, const Vector& eigenvalues,
                                    std::vector<double> excluded_targets, double identification_tol)
{
  SpectrumReport report;
  report.method = std::move(method);
  report.eigenvalues = eigenvalues;
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end());
  report.excluded_targets = std::move(excluded_targets);
  report.identification_tol = identification_tol;
  for (double v : report.eigenvalues) {
    const bool hit = std::any_of(report.excluded_targets.begin(), report.excluded_targets.end(),
                                 [&](double t) { return std::abs(v - t) <= identification_tol; });
    (hit ? report.removed : report.kept).push_back(v);
  }
  report.multiplicity_table = cluster_values(report.kept);
  return report;
}

MatchVerdict spectra_match(const SpectrumReport& primal, const SpectrumReport& dual, double tol)
{
  MatchVerdict verdict;
  const auto& a = primal.kept;
  const auto& b = dual.kept;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double diff = std::abs(a[i] - b[j]);
    if (diff <= tol * std::max(1.0, std::abs(a[i]))) {
      verdict.pairs.emplace_back(a[i], b[j]);
      verdict.max_pair_diff = std::max(verdict.max_pair_diff, diff);
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      verdict.orphans_primal.push_back(a[i++]);
    } else {
      verdict.orphans_dual.push_back(b[j++]);
    }
  }
  for (; i < a.size(); ++i) verdict.orphans_primal.push_back(a[i]);
  for (; j < b.size(); ++j) verdict.orphans_dual.push_back(b[j]);

  const auto& ca = primal.multiplicity_table;
  const auto& cb = dual.multiplicity_table;
  verdict.clusters_match = ca.size() == cb.size();
  for (std::size_t k = 0; verdict.clusters_match && k < ca.size(); ++k)
    verdict.clusters_match = ca[k].count == cb[k].count &&
                             std::abs(ca[k].value - cb[k].value) <= tol * std::max(1.0, std::abs(ca[k].value));

  verdict.pass = verdict.orphans_primal.empty() && verdict.orphans_dual.empty() && verdict.clusters_match;
  std::ostringstream msg;
  msg << primal.method << " vs " << dual.method << ": " << a.size() << " / " << b.size()
      << " filtered eigenvalues, " << verdict.pairs.size() << " pairs, max diff " << verdict.max_pair_diff;
  if (!verdict.orphans_primal.empty() || !verdict.orphans_dual.empty()) {
    msg << "; orphaned primal {";
    for (double v : verdict.orphans_primal) msg << ' ' << v;
    msg << " } dual {";
    for (double v : verdict.orphans_dual) msg << ' ' << v;
    msg << " }";
  }
  if (!verdict.clusters_match) msg << "; cluster multiplicities differ";
  verdict.message = msg.str();
  return verdict;
}

double IdentityTable::worst() const
{
  double w = 0.0;
  for (const auto& row : rows) w = std::max(w, row.residual);
  return w;
}

namespace {

double normalized(const Matrix& diff, std::initializer_list<double> factor_norms)
{
  double scale = 1.0;
  for (double n : factor_norms) scale *= n;
  if (scale == 0.0) return diff.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff.norm() / scale;
}

} // namespace

IdentityTable identity_suite(const CouplingOperators& ops, const Feti1Projector& projector, const Bdd& bdd)
{
  if (projector.q() != QChoice::dirichlet)
    throw ConfigError("identity suite requires Q = B_D S B_D^T");
  const Execution exec = ops.exec;
  const Matrix S = ops.dense_S();
  const Matrix Sp = ops.dense_S_pinv();
  const Matrix R = Matrix(ops.R);
  const Matrix B = Matrix(ops.B);
  const Matrix E = Matrix(ops.E);
  const Matrix BD = Matrix(ops.B_D);
  const Matrix& S_hat = ops.S_hat;
  const Index nw = ops.dim_w();
  const Index nl = ops.dim_lambda();
  const Index nh = ops.dim_hat();

  const Matrix H = assemble_dense(nw, nw, [&](const Vector& v) { return projector.apply_H(v); }, exec);
  const Matrix P = assemble_dense(nl, nl, [&](const Vector& v) { return projector.apply_P(v); }, exec);
  const Matrix M_bdd = assemble_dense(nh, nh, [&](const Vector& v) { return bdd.apply(v); }, exec);
  const Matrix St = H.transpose() * Sp * H;
  const Matrix F = B * Sp * B.transpose();
  const Matrix Fcal = P.transpose() * F * P;
  const Matrix M_feti = BD * S * BD.transpose();
  const Matrix dual_op = M_feti * Fcal;
  const Matrix primal_op = M_bdd * S_hat;
  const Matrix T_D = E * St * B.transpose();
  const Matrix T_P = dual_op * BD * S * R;
  const Matrix X = BD * S * St * B.transpose();

  const double nS = S.norm(), nSt = St.norm(), nR = R.norm(), nB = B.norm(), nE = E.norm(), nBD = BD.norm();
  IdentityTable table;
  auto add = [&](std::string name, double value) { table.rows.push_back({std::move(name), value}); };
  add("H^2 = H", normalized(H * H - H, {H.norm(), H.norm()}));
  add("P^T F P = B S~+ B^T", normalized(Fcal - B * St * B.transpose(), {P.norm(), P.norm(), F.norm()}));
  add("M_BDD = E S~+ E^T", normalized(M_bdd - E * St * E.transpose(), {nE, nSt, nE}));
  add("S~+ S R = R", normalized(St * S * R - R, {nSt, nS, nR}));
  add("S~+ S S~+ = S~+", normalized(St * S * St - St, {nSt, nS, nSt}));
  add("B S~+ S R = 0", normalized(B * St * S * R, {nB, nSt, nS, nR}));
  add("S~+ B^T B_D S S~+ E^T = 0", normalized(St * B.transpose() * BD * S * St * E.transpose(),
                                              {nSt, nB, nBD, nS, nSt, nE}));
  add("T_D (M_FETI F) = (M_BDD S_hat) T_D",
      normalized(T_D * dual_op - primal_op * T_D,
                 {std::max(T_D.norm() * M_feti.norm() * Fcal.norm(), M_bdd.norm() * S_hat.norm() * T_D.norm())}));
  add("T_P (M_BDD S_hat) = (M_FETI F) T_P",
      normalized(T_P * primal_op - dual_op * T_P,
                 {std::max(T_P.norm() * M_bdd.norm() * S_hat.norm(), M_feti.norm() * Fcal.norm() * T_P.norm())}));
  add("(B_D S S~+ B^T)^2 = B_D S S~+ B^T", normalized(X * X - X, {X.norm(), X.norm()}));
  return table;
}

} // namespace ddlab
