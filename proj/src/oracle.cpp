#include "tensorrank/oracle.hpp"

#include <cmath>
#include <vector>

#include "tensorrank/error.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/random.hpp"

namespace tensorrank {

std::string label(const ModelSpec& spec, const MomentId& id) {
  if (id.kind == MomentId::Kind::MeanSquared) return "E[Y]^2";
  std::string s;
  if (spec.topology == Topology::Tucker && id.groups.contains(spec.order)) s = "G";
  for (auto g : id.groups.modes()) {
    if (g >= spec.order) continue;
    if (!s.empty()) s += ',';
    s += std::to_string(g + 1);
  }
  return "v{" + s + "}";
}

OracleEstimate population_pure_term_oracle(const ModelSpec& spec, const MomentId& id, std::size_t n_mc,
                                           std::uint64_t seed) {
  spec.validate();
  if (n_mc < 2) throw ConfigError("the oracle needs at least 2 draws");
  const std::size_t M = spec.order;
  const std::size_t groups = group_count(spec);
  const bool tucker = spec.topology == Topology::Tucker;
  if (id.kind == MomentId::Kind::Pure && id.groups.empty()) return {0.0, 0.0};
  if (!id.groups.subset_of(SharingSet::all(groups)))
    throw ConfigError("moment " + label(spec, id) + " references groups outside the model");

  // Two copies per mode are the two index values of a size-2 latent draw.
  ModelSpec small = spec;
  small.dims.assign(M, 2);

  std::vector<double> z(n_mc);
  parallel_for(n_mc, [&](std::size_t d) {
    const auto draw_seed = derive_seed(seed, {d});
    LatentDraw latents = sample_latents(small, draw_seed);
    const DenseTensor eta0 = build_rate(small, latents);
    if (id.kind == MomentId::Kind::MeanSquared) {
      z[d] = eta0[0];
      return;
    }
    std::optional<DenseTensor> eta1;
    if (tucker) {
      LatentDraw other = latents;
      other.core = sample_latents(small, derive_seed(draw_seed, {1})).core;
      eta1 = build_rate(small, other);
    }
    const double eta_i = eta0[0];
    double acc = 0.0;
    for (auto t : id.groups.subsets()) {
      // Multi-index: 0 on shared modes, 1 elsewhere.
      std::size_t flat = 0;
      for (std::size_t k = 0; k < M; ++k) flat += (t.contains(k) ? 0 : 1) * eta0.strides()[k];
      const bool same_core = !tucker || t.contains(M);
      const double eta_j = same_core ? eta0[flat] : (*eta1)[flat];
      acc += ((id.groups.size() - t.size()) % 2 == 0 ? 1.0 : -1.0) * eta_i * eta_j;
    }
    z[d] = acc;
  });

  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(n_mc);
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  if (id.kind == MomentId::Kind::MeanSquared) return {mean * mean, 2.0 * std::abs(mean) * se};
  return {mean, se};
}

OracleEstimate population_pure_term_oracle(const ModelSpec& spec, SharingSet s, std::size_t n_mc,
                                           std::uint64_t seed) {
  return population_pure_term_oracle(spec, MomentId::pure(s), n_mc, seed);
}

}  // namespace tensorrank
