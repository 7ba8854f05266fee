#include "tensorrank/estimators.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "tensorrank/error.hpp"
#include "tensorrank/identifiability.hpp"

namespace tensorrank {

namespace {

SharingSet modes(std::initializer_list<std::size_t> one_based) { return SharingSet::of(one_based); }

double mean_factor(const MomentTable& table) { return table.normalized ? 1.0 : table.mean * table.mean; }

void check_mode(std::size_t p, std::size_t order) {
  if (p < 1 || p > order) throw ConfigError("mode " + std::to_string(p) + " out of range 1.." + std::to_string(order));
}

}  // namespace

RatioParts cp_rank_ratio(const MomentTable& table, std::size_t p, std::size_t q) {
  if (p == q) throw ConfigError("the CP ratio needs two distinct modes");
  return {table.pure_term(modes({p, q})) * mean_factor(table), table.pure_term(modes({p})) * table.pure_term(modes({q})),
          "r"};
}

RatioParts tt_rank_ratio(const MomentTable& table, std::size_t p, std::size_t order) {
  const std::size_t M = order;
  if (M < 3)
    throw ConfigError("a TT model of order 2 is a matrix factorization; use the CP ratio v12*E^2/(v1*v2)");
  if (p < 1 || p > M - 1) throw ConfigError("TT bond " + std::to_string(p) + " out of range 1.." + std::to_string(M - 1));
  const std::string label = "r_" + std::to_string(p);
  auto v = [&](std::initializer_list<std::size_t> s) { return table.pure_term(modes(s)); };
  if (p + 2 <= M) return {v({p, p + 1}) * v({p + 2}), v({p + 1}) * v({p, p + 2}), label};
  if (M >= 4) return {v({M - 1, M}) * v({M - 3}), v({M}) * v({M - 3, M - 1}), label};
  return {v({2, 3}) * v({1}), v({2}) * v({1, 3}), label};  // M = 3, p = 2
}

RatioParts tr_xi_parts(const MomentTable& table, std::size_t p, std::size_t order) {
  if (order < 3) throw ConfigError("a TR model of order 2 reduces to a matrix factorization and is unsupported");
  check_mode(p, order);
  const std::size_t next = p % order + 1;
  return {mean_factor(table) * table.pure_term(modes({p, next})),
          table.pure_term(modes({p})) * table.pure_term(modes({next})), "xi_" + std::to_string(p)};
}

double tr_xi(const MomentTable& table, std::size_t p, std::size_t order) { return tr_xi_parts(table, p, order).value(); }

// Circulant systems ------------------------------------------------------------------

std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x) {
  const std::size_t m = x.size();
  std::vector<std::complex<double>> out(m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t p = 0; p < m; ++p)
      out[k] += x[p] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>((p * k) % m) / static_cast<double>(m));
  return out;
}

std::vector<std::complex<double>> idft(std::span<const std::complex<double>> x) {
  const std::size_t m = x.size();
  std::vector<std::complex<double>> out(m);
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t k = 0; k < m; ++k)
      out[p] += x[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((p * k) % m) / static_cast<double>(m));
    out[p] /= static_cast<double>(m);
  }
  return out;
}

std::vector<std::complex<double>> CirculantSystem::eigenvalues() const {
  const std::size_t m = size();
  std::vector<std::complex<double>> lambda(m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t d = 0; d < m; ++d)
      lambda[k] += stencil[d] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((d * k) % m) / static_cast<double>(m));
  return lambda;
}

std::vector<double> CirculantSystem::apply(std::span<const double> x) const {
  const std::size_t m = size();
  std::vector<double> out(m, 0.0);
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t d = 0; d < m; ++d) out[p] += stencil[d] * x[(p + d) % m];
  return out;
}

CirculantSystem CirculantSystem::ring_difference(std::size_t m) {
  if (m < 3) throw ConfigError("the ring difference system needs M >= 3");
  CirculantSystem c{std::vector<double>(m, 0.0)};
  c.stencil[0] = 1.0;
  c.stencil[1] = -1.0;
  c.stencil[m - 1] = 1.0;
  return c;
}

CirculantSystem CirculantSystem::identity(std::size_t m) {
  CirculantSystem c{std::vector<double>(m, 0.0)};
  c.stencil[0] = 1.0;
  return c;
}

CirculantSystem ring_stencil_from_monomials(const ModelSpec& spec) {
  if (spec.topology != Topology::TR) throw ConfigError("ring stencil needs a TR model");
  const std::size_t M = spec.order;
  if (M < 3) throw ConfigError("a TR model of order 2 reduces to a matrix factorization and is unsupported");
  const auto e2 = analytic_monomial(spec, MomentId::mean_squared());
  CirculantSystem system{std::vector<double>(M, 0.0)};
  for (std::size_t p = 0; p < M; ++p) {
    const std::size_t q = (p + 1) % M;
    const auto pair = analytic_monomial(spec, SharingSet::single(p).with(q));
    const auto vp = analytic_monomial(spec, SharingSet::single(p));
    const auto vq = analytic_monomial(spec, SharingSet::single(q));
    std::vector<int> row(e2.exponents.size());
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = e2.exponents[c] + pair.exponents[c] - vp.exponents[c] - vq.exponents[c];
    for (std::size_t c = M; c < row.size(); ++c)
      if (row[c] != 0) throw NumericError("xi_" + std::to_string(p + 1) + " retains a prior-moment factor");
    for (std::size_t d = 0; d < M; ++d) {
      const double coef = row[(p + d) % M];
      if (p == 0)
        system.stencil[d] = coef;
      else if (system.stencil[d] != coef)
        throw NumericError("xi exponents are not circulant");
    }
  }
  return system;
}

TrSolution tr_solve(std::span<const double> xis, const CirculantSystem& system) {
  const std::size_t m = xis.size();
  if (m < 3) throw ConfigError("a TR model of order 2 reduces to a matrix factorization and is unsupported");
  if (system.size() != m) throw ConfigError("circulant system size does not match the number of ratios");
  std::vector<std::complex<double>> psi(m);
  std::vector<double> psi_real(m);
  for (std::size_t p = 0; p < m; ++p) {
    if (!(xis[p] > 0) || !std::isfinite(xis[p]))
      throw DomainError("xi_" + std::to_string(p + 1) + " = " + std::to_string(xis[p]) + " is not positive");
    psi_real[p] = std::log(xis[p]);
    psi[p] = psi_real[p];
  }
  const auto lambda = system.eigenvalues();
  auto hat = dft(psi);
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(lambda[k]) < 1e-12) throw NumericError("singular circulant system");
    hat[k] /= lambda[k];
  }
  const auto x = idft(hat);
  TrSolution sol;
  for (std::size_t p = 0; p < m; ++p) {
    sol.log_ranks.push_back(x[p].real());
    sol.ranks.push_back(std::exp(x[p].real()));
  }
  const auto back = system.apply(sol.log_ranks);
  for (std::size_t p = 0; p < m; ++p) sol.residual = std::max(sol.residual, std::abs(back[p] - psi_real[p]));
  return sol;
}

// Regularization --------------------------------------------------------------------

double denominator_shrinkage(std::span<const double> dens) {
  const std::size_t b = dens.size();
  if (b < 2) {
    std::cerr << "warning: fewer than 2 replicates; denominator shrinkage set to 0\n";
    return 0.0;
  }
  double mean = 0.0;
  for (double d : dens) mean += d;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (double d : dens) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(b - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(b));
}

double regularized_ratio(double num, double den, double eps) {
  const double sign = den > 0 ? 1.0 : (den < 0 ? -1.0 : 0.0);
  return sign * num / (std::abs(den) + eps);
}

double regularized_ratio(std::span<const double> nums, std::span<const double> dens, std::size_t b) {
  if (nums.size() != dens.size() || b >= nums.size()) throw ConfigError("replicate index out of range");
  return regularized_ratio(nums[b], dens[b], denominator_shrinkage(dens));
}

}  // namespace tensorrank
