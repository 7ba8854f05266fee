#pragma once

#include <random>

#include "tensorrank/model.hpp"

namespace tensorrank::testing {

inline ModelSpec make_spec(Topology t, std::vector<std::size_t> ranks, std::vector<std::size_t> dims,
                           Prior prior = {1.0, 0.5}) {
  ModelSpec s;
  s.topology = t;
  s.order = dims.size();
  s.dims = std::move(dims);
  s.ranks = std::move(ranks);
  s.priors.assign(s.order, prior);
  if (t == Topology::Tucker) s.core_prior = prior;
  return s;
}

inline std::size_t rank_count(Topology t, std::size_t m) {
  switch (t) {
    case Topology::CP: return 1;
    case Topology::TT: return m - 1;
    default: return m;
  }
}

// Random spec with per-group moments drawn from the given ranges.
inline ModelSpec random_spec(std::mt19937_64& rng, Topology t, std::size_t m, std::size_t max_rank, std::size_t max_dim,
                             double mu_lo = 0.5, double mu_hi = 2.0, double cv2_lo = 0.2, double cv2_hi = 1.0) {
  std::uniform_int_distribution<std::size_t> rank(1, max_rank), dim(2, max_dim);
  std::uniform_real_distribution<double> mu(mu_lo, mu_hi), cv2(cv2_lo, cv2_hi);
  ModelSpec s;
  s.topology = t;
  s.order = m;
  for (std::size_t p = 0; p < m; ++p) {
    s.dims.push_back(dim(rng));
    const double u = mu(rng);
    s.priors.push_back({u, cv2(rng) * u * u});
  }
  for (std::size_t l = 0; l < rank_count(t, m); ++l) s.ranks.push_back(rank(rng));
  if (t == Topology::Tucker) {
    const double u = mu(rng);
    s.core_prior = Prior{u, cv2(rng) * u * u};
  }
  return s;
}

}  // namespace tensorrank::testing
