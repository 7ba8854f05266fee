#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tensorrank/tensor.hpp"

namespace tensorrank {

enum class Topology { CP, Tucker, TT, TR };
enum class PriorFamily { Gamma, ExplicitMoments };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view s);

// First two moments of a factor-group prior.
struct Prior {
  double mu = 1.0;
  double sigma2 = 1.0;

  // Gamma parameterization reproducing (mu, sigma2).
  double shape() const { return mu * mu / sigma2; }
  double scale() const { return sigma2 / mu; }

  static Prior from_gamma(double shape, double scale) { return {shape * scale, shape * scale * scale}; }

  friend bool operator==(const Prior&, const Prior&) = default;
};

struct ObservationModel {
  enum class Kind { Poisson, Gaussian };
  Kind kind = Kind::Poisson;
  double sigma2 = 0.0;  // Gaussian noise variance

  static ObservationModel poisson() { return {Kind::Poisson, 0.0}; }
  static ObservationModel gaussian(double sigma2) { return {Kind::Gaussian, sigma2}; }

  friend bool operator==(const ObservationModel&, const ObservationModel&) = default;
};

// A probabilistic tensor factorization model. Ranks are
//   CP: (r), Tucker: (r_1..r_M), TT: (r_1..r_{M-1}), TR: (r_1..r_M) with r_0 = r_M.
struct ModelSpec {
  Topology topology = Topology::CP;
  std::size_t order = 3;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> ranks;
  std::vector<Prior> priors;  // one per mode
  std::optional<Prior> core_prior;  // Tucker only
  PriorFamily prior_family = PriorFamily::Gamma;
  ObservationModel obs;

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);
ModelSpec load_model_spec(const std::string& path);

// Latent factors. factors[p] has shape
//   CP (N_p, r); Tucker (N_p, r_p); TT (r_{p-1}, N_p, r_p) with r_0 = r_M = 1;
//   TR (r_{p-1}, N_p, r_p) with r_0 = r_M.
// core is the Tucker core (r_1, ..., r_M).
struct LatentDraw {
  std::vector<DenseTensor> factors;
  std::optional<DenseTensor> core;
};

// Shapes the LatentDraw must have for `spec`.
std::vector<std::vector<std::size_t>> factor_shapes(const ModelSpec& spec);

// Draws every latent entry i.i.d. from its group prior. Entry e of group g
// uses a generator seeded from (seed, g, e), so the result does not depend
// on thread count.
LatentDraw sample_latents(const ModelSpec& spec, std::uint64_t seed);

// Contracts the latents into the rate tensor eta.
DenseTensor build_rate(const ModelSpec& spec, const LatentDraw& latents);

// Entrywise independent observation draws (seeded per flat index).
DenseTensor sample_observation(const DenseTensor& rate, const ObservationModel& obs, std::uint64_t seed);

// Reference evaluation of a single rate entry by summing over every latent
// index tuple. Exponential in the number of links; for oracles and tests.
double naive_rate_entry(const ModelSpec& spec, const LatentDraw& latents, std::span<const std::size_t> index);

}  // namespace tensorrank
