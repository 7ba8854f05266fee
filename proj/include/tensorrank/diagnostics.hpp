#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensorrank/model.hpp"
#include "tensorrank/sharing_set.hpp"

namespace tensorrank {

struct GammaRawMoments {
  double m2 = 0.0;
  double m4 = 0.0;
};

// Raw second and fourth moments of a Gamma variable with mean mu and
// coefficient of variation cv.
GammaRawMoments gamma_raw_moments(double mu, double cv);

struct SnrQuery {
  std::size_t M = 3;
  std::size_t size_S = 1;
  double mu = 1.0;
  double cv = 1.0;
  double n = 1.0;
};

// Leading-order SNR of a TT pure-term estimate with equal Gamma priors:
// sqrt(n) * (mu cv^2 / sqrt(1 + 6cv^2 + 3cv^4))^|S| * (1 / (1 + cv^2))^(M-|S|).
double theoretical_snr(const SnrQuery& q);

// mean(v_S) / sd(v_S) over replicates, each on freshly simulated latents
// and observations.
double empirical_snr(const ModelSpec& spec, SharingSet s, std::size_t n_pairs, std::size_t replicates,
                     std::uint64_t seed);

struct SnrGrid {
  std::vector<std::size_t> orders{3, 4, 5};
  std::vector<std::size_t> sizes{1, 2};
  std::vector<double> mus{0.5, 1.0, 2.0};
  std::vector<double> cvs;  // empty means logspace(0.1, 5, 50)
  double n = 1.0;

  static std::vector<double> default_cvs();
};

struct SnrRow {
  std::size_t M;
  std::size_t size_S;
  double mu;
  double cv;
  double n;
  double snr;
};

struct SnrArgmax {
  std::size_t M;
  std::size_t size_S;
  double mu;
  double cv;
  double snr;
};

struct SnrSweep {
  std::vector<SnrRow> rows;
  std::vector<SnrArgmax> argmax;  // one per (M, |S|, mu)
};

SnrSweep snr_sweep(const SnrGrid& grid);
std::string to_csv(const SnrSweep& sweep);

}  // namespace tensorrank
