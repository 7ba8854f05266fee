#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "tensorrank/model.hpp"
#include "tensorrank/moments.hpp"

namespace tensorrank {

// Modes and bonds in this header are 1-based, matching the formulas.

struct RatioParts {
  double numerator = 0.0;
  double denominator = 0.0;
  std::string label;

  double value() const { return numerator / denominator; }
};

// r = v_{p,q} E[Y]^2 / (v_p v_q). A normalized table already carries the
// E[Y]^2 division, so the factor is dropped.
RatioParts cp_rank_ratio(const MomentTable& table, std::size_t p, std::size_t q);

// r_p for 1 <= p <= M-2: v_{p,p+1} v_{p+2} / (v_{p+1} v_{p,p+2});
// r_{M-1} for M >= 4:     v_{M-1,M} v_{M-3} / (v_M v_{M-3,M-1});
// r_2 for M = 3:          v_{2,3} v_1 / (v_2 v_{1,3}).
RatioParts tt_rank_ratio(const MomentTable& table, std::size_t p, std::size_t order);

// xi_p = E[Y]^2 v_{p,p+1} / (v_p v_{p+1}), indices cyclic.
RatioParts tr_xi_parts(const MomentTable& table, std::size_t p, std::size_t order);
double tr_xi(const MomentTable& table, std::size_t p, std::size_t order);

// Cyclic system sum_d c[d] x_{p+d} = psi_p (indices mod M), diagonalized by
// the DFT: with xhat_k = sum_p x_p e^{2 pi i p k / M} the eigenvalues are
// lambda_k = sum_d c[d] e^{-2 pi i d k / M}.
struct CirculantSystem {
  std::vector<double> stencil;

  std::size_t size() const { return stencil.size(); }
  std::vector<std::complex<double>> eigenvalues() const;
  std::vector<double> apply(std::span<const double> x) const;

  // x_p + x_{p-1} - x_{p+1}; eigenvalues 1 + 2i sin(2 pi k / M).
  static CirculantSystem ring_difference(std::size_t m);
  static CirculantSystem identity(std::size_t m);
};

// Log-rank exponents of xi_p read off the analytic monomials of a TR model.
CirculantSystem ring_stencil_from_monomials(const ModelSpec& spec);

struct TrSolution {
  std::vector<double> ranks;
  std::vector<double> log_ranks;
  double residual = 0.0;  // max |C x - psi|
};

// x = IDFT(DFT(log xi) / lambda), ranks = exp(x).
TrSolution tr_solve(std::span<const double> xis, const CirculantSystem& system);

std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x);   // kernel e^{+2 pi i p k / M}
std::vector<std::complex<double>> idft(std::span<const std::complex<double>> x);  // inverse of dft

// 1.96 * sd(dens) / sqrt(B); zero (with a warning) when B < 2.
double denominator_shrinkage(std::span<const double> dens);

// sign(den) * num / (|den| + eps).
double regularized_ratio(double num, double den, double eps);
double regularized_ratio(std::span<const double> nums, std::span<const double> dens, std::size_t b);

}  // namespace tensorrank
