#include "tensorrank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tensorrank/error.hpp"
#include "tensorrank/estimators.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/random.hpp"

namespace tensorrank {

using nlohmann::json;

void PipelineConfig::validate(std::size_t order) const {
  if (B < 2) throw ConfigError("B must be >= 2");
  if (n_pairs < 2) throw ConfigError("n_pairs must be >= 2");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  if (block_mode < 1 || block_mode > order)
    throw ConfigError("block_mode must lie in 1.." + std::to_string(order));
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double h = (static_cast<double>(samples.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

Summary summarize(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw ConfigError("cannot summarize an empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  return {percentile(s, 0.5), percentile(s, alpha / 2), percentile(s, 1 - alpha / 2)};
}

std::vector<std::size_t> bootstrap_slice_map(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> map(n);
  for (auto& s : map) s = pick(rng);
  return map;
}

DenseTensor block_bootstrap(const DenseTensor& y, std::size_t block_mode, const std::vector<std::size_t>& slice_map) {
  if (block_mode < 1 || block_mode > y.order()) throw ConfigError("block_mode out of range");
  return TensorView(y, block_mode - 1, slice_map).materialize();
}

DenseTensor block_bootstrap(const DenseTensor& y, std::size_t block_mode, std::uint64_t seed) {
  if (block_mode < 1 || block_mode > y.order()) throw ConfigError("block_mode out of range");
  return block_bootstrap(y, block_mode, bootstrap_slice_map(y.dim(block_mode - 1), seed));
}

std::size_t min_valid_replicates(std::size_t B) {
  return std::min(B, std::max<std::size_t>(10, (B + 3) / 4));
}

namespace {

// Ratio parts of one replicate, in rank order. CP with averaging stores
// one entry per mode pair.
std::vector<RatioParts> replicate_parts(const MomentTable& table, Topology topology, std::size_t M,
                                        bool cp_average_pairs) {
  std::vector<RatioParts> parts;
  switch (topology) {
    case Topology::CP:
      if (cp_average_pairs) {
        for (std::size_t p = 1; p <= M; ++p)
          for (std::size_t q = p + 1; q <= M; ++q) parts.push_back(cp_rank_ratio(table, p, q));
      } else {
        parts.push_back(cp_rank_ratio(table, 1, 2));
      }
      break;
    case Topology::TT:
      for (std::size_t p = 1; p < M; ++p) parts.push_back(tt_rank_ratio(table, p, M));
      break;
    case Topology::TR:
      for (std::size_t p = 1; p <= M; ++p) parts.push_back(tr_xi_parts(table, p, M));
      break;
    case Topology::Tucker:
      break;
  }
  return parts;
}

// Stencil of log xi_p in the log ranks, from the analytic monomials. It
// depends only on the topology, so any valid spec of the right order works.
CirculantSystem ring_system(std::size_t M) {
  ModelSpec spec;
  spec.topology = Topology::TR;
  spec.order = M;
  spec.dims.assign(M, 2);
  spec.ranks.assign(M, 2);
  spec.priors.assign(M, Prior{1.0, 1.0});
  return ring_stencil_from_monomials(spec);
}

}  // namespace

PipelineResult run_pipeline(const DenseTensor& y, Topology topology, const PipelineConfig& cfg) {
  if (topology == Topology::Tucker)
    throw ConfigError("no moment-ratio estimator is provided for Tucker ranks; run `identify` for the "
                      "identifiability analysis of a Tucker model");
  const std::size_t M = y.order();
  cfg.validate(M);
  const auto sets = required_sharing_sets(topology, M, {cfg.cp_average_pairs});
  const std::size_t mode = cfg.block_mode - 1;
  const std::size_t B = cfg.B;

  // Pass 1: replicate moment tables and ratio parts.
  std::vector<std::vector<RatioParts>> parts(B);
  parallel_for(B, [&](std::size_t b) {
    const auto rep_seed = derive_seed(cfg.seed, {b});
    TensorView view(y, mode, bootstrap_slice_map(y.dim(mode), rep_seed));
    MomentOptions opts;
    opts.n_pairs = cfg.n_pairs;
    opts.seed = rep_seed;
    opts.normalize = cfg.normalize;
    const auto table = compute_moment_table(view, sets, opts);
    parts[b] = replicate_parts(table, topology, M, cfg.cp_average_pairs);
  });

  // Pass 2: shrinkage from the across-replicate denominator spread.
  const std::size_t n_parts = parts[0].size();
  std::vector<double> eps(n_parts);
  std::vector<std::vector<double>> reg(B, std::vector<double>(n_parts));
  for (std::size_t k = 0; k < n_parts; ++k) {
    std::vector<double> dens(B);
    for (std::size_t b = 0; b < B; ++b) dens[b] = parts[b][k].denominator;
    eps[k] = denominator_shrinkage(dens);
    for (std::size_t b = 0; b < B; ++b) reg[b][k] = regularized_ratio(parts[b][k].numerator, dens[b], eps[k]);
  }

  PipelineResult result;
  result.topology = topology;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> estimates;  // [b] -> per rank, NaN when invalid
  if (topology == Topology::CP) {
    labels = {"r"};
    for (std::size_t b = 0; b < B; ++b) {
      double acc = 0.0;
      for (double v : reg[b]) acc += v;
      estimates.push_back({acc / static_cast<double>(n_parts)});
    }
  } else if (topology == Topology::TT) {
    for (std::size_t p = 1; p < M; ++p) labels.push_back("r_" + std::to_string(p));
    estimates = reg;
  } else {
    for (std::size_t p = 1; p <= M; ++p) labels.push_back("r_" + std::to_string(p));
    const auto system = ring_system(M);
    for (std::size_t b = 0; b < B; ++b) {
      const bool valid = std::all_of(reg[b].begin(), reg[b].end(), [](double xi) { return xi > 0 && std::isfinite(xi); });
      if (!valid) {
        estimates.emplace_back(M, std::nan(""));
        continue;
      }
      const auto sol = tr_solve(reg[b], system);
      result.max_circulant_residual = std::max(result.max_circulant_residual, sol.residual);
      estimates.push_back(sol.ranks);
    }
  }

  const std::size_t needed = min_valid_replicates(B);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    RankEstimate est;
    est.label = labels[k];
    for (std::size_t b = 0; b < B; ++b) {
      const double v = estimates[b][k];
      if (std::isfinite(v))
        est.samples.push_back(v);
      else
        ++est.n_invalid;
    }
    if (est.samples.size() < needed) {
      est.available = false;
      est.median = est.ci_low = est.ci_high = std::nan("");
      est.diagnostic = std::to_string(est.samples.size()) + " valid replicates of " + std::to_string(B) +
                       " (need " + std::to_string(needed) + ")";
    } else {
      const auto s = summarize(est.samples, cfg.alpha);
      est.median = s.median;
      est.ci_low = s.ci_low;
      est.ci_high = s.ci_high;
    }
    result.ranks.push_back(std::move(est));
  }
  return result;
}

json to_json(const PipelineResult& result, bool include_samples) {
  json ranks = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& r : result.ranks) {
    json e{{"label", r.label},
           {"median", num(r.median)},
           {"ci", {num(r.ci_low), num(r.ci_high)}},
           {"n_invalid", r.n_invalid},
           {"available", r.available}};
    if (!r.diagnostic.empty()) e["diagnostic"] = r.diagnostic;
    if (include_samples) e["samples"] = r.samples;
    ranks.push_back(std::move(e));
  }
  json j{{"topology", to_string(result.topology)}, {"ranks", ranks}};
  if (result.topology == Topology::TR) j["max_circulant_residual"] = result.max_circulant_residual;
  return j;
}

std::string to_csv(const PipelineResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "label,replicate,estimate\n";
  for (const auto& r : result.ranks)
    for (std::size_t b = 0; b < r.samples.size(); ++b) os << r.label << ',' << b << ',' << r.samples[b] << '\n';
  return os.str();
}

}  // namespace tensorrank
