#include "tensorrank/model.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>


#include "tensorrank/error.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/random.hpp"

namespace tensorrank {

using nlohmann::json;

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::CP: return "CP";
    case Topology::Tucker: return "Tucker";
    case Topology::TT: return "TT";
    case Topology::TR: return "TR";
  }
  return "?";
}

Topology parse_topology(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "cp" || lower == "parafac") return Topology::CP;
  if (lower == "tucker") return Topology::Tucker;
  if (lower == "tt" || lower == "tensor-train") return Topology::TT;
  if (lower == "tr" || lower == "tensor-ring") return Topology::TR;
  throw ConfigError("unsupported topology '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
  const std::size_t M = order;
  if (M < 2) throw ConfigError("order must be >= 2");
  if (dims.size() != M) throw ConfigError("dims must have one extent per mode");
  for (auto d : dims)
    if (d < 2) throw ConfigError("all dims must be >= 2");
  std::size_t expected = 0;
  switch (topology) {
    case Topology::CP: expected = 1; break;
    case Topology::Tucker: expected = M; break;
    case Topology::TT: expected = M - 1; break;
    case Topology::TR: expected = M; break;
  }
  if (ranks.size() != expected)
    throw ConfigError(std::string(to_string(topology)) + " of order " + std::to_string(M) + " needs " +
                      std::to_string(expected) + " ranks, got " + std::to_string(ranks.size()));
  for (auto r : ranks)
    if (r < 1) throw ConfigError("all ranks must be >= 1");
  if (priors.size() != M) throw ConfigError("priors must have one entry per mode");
  if (topology == Topology::Tucker && !core_prior) throw ConfigError("Tucker needs core_prior");
  auto check = [&](const Prior& p, const std::string& what) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.sigma2)) throw ConfigError(what + ": non-finite moments");
    if (p.sigma2 < 0) throw ConfigError(what + ": negative variance");
    if (prior_family == PriorFamily::Gamma && (p.mu <= 0 || p.sigma2 <= 0))
      throw ConfigError(what + ": Gamma prior needs mu > 0 and sigma2 > 0");
  };
  for (std::size_t p = 0; p < M; ++p) check(priors[p], "prior of mode " + std::to_string(p + 1));
  if (core_prior) check(*core_prior, "core prior");
  if (obs.kind == ObservationModel::Kind::Gaussian && !(obs.sigma2 >= 0))
    throw ConfigError("Gaussian observation variance must be >= 0");
}

// JSON ----------------------------------------------------------------------

namespace {

json prior_json(const Prior& p) { return {{"mu", p.mu}, {"sigma2", p.sigma2}}; }

Prior prior_from_json(const json& j) {
  if (j.contains("shape") || j.contains("scale"))
    return Prior::from_gamma(j.at("shape").get<double>(), j.at("scale").get<double>());
  return {j.at("mu").get<double>(), j.at("sigma2").get<double>()};
}

}  // namespace

void to_json(json& j, const ModelSpec& spec) {
  j = json{{"topology", to_string(spec.topology)},
           {"order", spec.order},
           {"dims", spec.dims},
           {"ranks", spec.ranks},
           {"prior_family", spec.prior_family == PriorFamily::Gamma ? "Gamma" : "ExplicitMoments"}};
  json priors = json::array();
  for (const auto& p : spec.priors) priors.push_back(prior_json(p));
  j["priors"] = priors;
  if (spec.core_prior) j["core_prior"] = prior_json(*spec.core_prior);
  if (spec.obs.kind == ObservationModel::Kind::Poisson)
    j["obs"] = {{"kind", "Poisson"}};
  else
    j["obs"] = {{"kind", "Gaussian"}, {"sigma2", spec.obs.sigma2}};
}

void from_json(const json& j, ModelSpec& spec) {
  spec = ModelSpec{};
  spec.topology = parse_topology(j.at("topology").get<std::string>());
  spec.dims = j.at("dims").get<std::vector<std::size_t>>();
  spec.order = j.value("order", spec.dims.size());
  spec.ranks = j.at("ranks").get<std::vector<std::size_t>>();
  const auto& priors = j.at("priors");
  if (priors.is_object()) {
    // A single prior shared by every mode.
    spec.priors.assign(spec.order, prior_from_json(priors));
  } else {
    for (const auto& p : priors) spec.priors.push_back(prior_from_json(p));
  }
  if (j.contains("core_prior")) spec.core_prior = prior_from_json(j.at("core_prior"));
  const auto family = j.value("prior_family", std::string("Gamma"));
  if (family == "Gamma")
    spec.prior_family = PriorFamily::Gamma;
  else if (family == "ExplicitMoments")
    spec.prior_family = PriorFamily::ExplicitMoments;
  else
    throw ConfigError("unknown prior_family '" + family + "'");
  if (j.contains("obs")) {
    const auto& o = j.at("obs");
    const auto kind = o.at("kind").get<std::string>();
    if (kind == "Poisson")
      spec.obs = ObservationModel::poisson();
    else if (kind == "Gaussian")
      spec.obs = ObservationModel::gaussian(o.value("sigma2", 0.0));
    else
      throw ConfigError("unknown observation kind '" + kind + "'");
  }
  spec.validate();
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model spec " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  try {
    return j.get<ModelSpec>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Sampling -----------------------------------------------------------------

std::vector<std::vector<std::size_t>> factor_shapes(const ModelSpec& spec) {
  const std::size_t M = spec.order;
  std::vector<std::vector<std::size_t>> shapes(M);
  for (std::size_t p = 0; p < M; ++p) {
    switch (spec.topology) {
      case Topology::CP: shapes[p] = {spec.dims[p], spec.ranks[0]}; break;
      case Topology::Tucker: shapes[p] = {spec.dims[p], spec.ranks[p]}; break;
      case Topology::TT: {
        const std::size_t left = p == 0 ? 1 : spec.ranks[p - 1];
        const std::size_t right = p + 1 == M ? 1 : spec.ranks[p];
        shapes[p] = {left, spec.dims[p], right};
        break;
      }
      case Topology::TR: {
        const std::size_t left = spec.ranks[(p + M - 1) % M];
        shapes[p] = {left, spec.dims[p], spec.ranks[p]};
        break;
      }
    }
  }
  return shapes;
}

namespace {

DenseTensor sample_group(const std::vector<std::size_t>& shape, const Prior& prior, PriorFamily family,
                         std::uint64_t seed, std::uint64_t group) {
  DenseTensor t(shape);
  if (prior.sigma2 == 0.0) {
    for (auto& v : t.values()) v = prior.mu;
    return t;
  }
  if (family != PriorFamily::Gamma)
    throw ConfigError("ExplicitMoments priors with nonzero variance cannot be sampled");
  const double shape_param = prior.shape();
  const double scale = prior.scale();
  if (!(shape_param > 0) || !(scale > 0)) throw ConfigError("non-positive Gamma parameters");
  auto values = t.values();
  for (std::size_t e = 0; e < values.size(); ++e) {
    CounterRng rng(derive_seed(seed, {group, e}));
    std::gamma_distribution<double> gamma(shape_param, scale);
    values[e] = gamma(rng);
  }
  return t;
}

}  // namespace

LatentDraw sample_latents(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto shapes = factor_shapes(spec);
  LatentDraw draw;
  draw.factors.resize(spec.order);
  parallel_for(spec.order, [&](std::size_t p) {
    draw.factors[p] = sample_group(shapes[p], spec.priors[p], spec.prior_family, seed, p);
  });
  if (spec.topology == Topology::Tucker)
    draw.core = sample_group(spec.ranks, *spec.core_prior, spec.prior_family, seed, spec.order);
  return draw;
}

namespace {

void check_shapes(const ModelSpec& spec, const LatentDraw& latents) {
  const auto shapes = factor_shapes(spec);
  if (latents.factors.size() != shapes.size()) throw ConfigError("latent draw has wrong number of factors");
  for (std::size_t p = 0; p < shapes.size(); ++p)
    if (latents.factors[p].dims() != shapes[p])
      throw ConfigError("factor " + std::to_string(p + 1) + " has the wrong shape");
  if (spec.topology == Topology::Tucker && (!latents.core || latents.core->dims() != spec.ranks))
    throw ConfigError("Tucker core has the wrong shape");
}

// Depth-first walk over the index space for chain-like contractions. The
// state after fixing modes 0..d is built by `step`; the last mode is
// handled by `leaf`, which writes the contiguous run of N_{M-1} outputs.
// Work is split across the first mode.
template <class Init, class Step, class Leaf>
void chain_contract(const std::vector<std::size_t>& dims, DenseTensor& out, Init init, Step step, Leaf leaf) {
  const std::size_t M = dims.size();
  parallel_for(dims[0], [&](std::size_t i0) {
    std::vector<std::vector<double>> states(M - 1);
    Index index(M, 0);
    index[0] = i0;
    init(i0, states[0]);
    auto walk = [&](auto& self, std::size_t d) -> void {
      if (d == M - 1) {
        leaf(states[M - 2], &out[out.flat_index(index)], dims[M - 1]);
        return;
      }
      for (std::size_t i = 0; i < dims[d]; ++i) {
        index[d] = i;
        step(states[d - 1], d, i, states[d]);
        self(self, d + 1);
      }
    };
    walk(walk, 1);
  });
}

}  // namespace

DenseTensor build_rate(const ModelSpec& spec, const LatentDraw& latents) {
  check_shapes(spec, latents);
  const std::size_t M = spec.order;
  DenseTensor out(spec.dims);
  const auto& F = latents.factors;

  switch (spec.topology) {
    case Topology::CP: {
      const std::size_t r = spec.ranks[0];
      chain_contract(
          spec.dims, out,
          [&](std::size_t i, std::vector<double>& s) {
            s.assign((F[0].values().data() + (i * r)), (F[0].values().data() + (i * r)) + r);
          },
          [&](const std::vector<double>& in, std::size_t p, std::size_t i, std::vector<double>& s) {
            s.resize(r);
            for (std::size_t k = 0; k < r; ++k) s[k] = in[k] * F[p][i * r + k];
          },
          [&](const std::vector<double>& s, double* dst, std::size_t n) {
            const auto& last = F[M - 1];
            for (std::size_t i = 0; i < n; ++i) {
              double acc = 0.0;
              for (std::size_t k = 0; k < r; ++k) acc += s[k] * last[i * r + k];
              dst[i] = acc;
            }
          });
      break;
    }
    case Topology::TT: {
      // state: row vector over the right link of the last fixed core.
      chain_contract(
          spec.dims, out,
          [&](std::size_t i, std::vector<double>& s) {
            const std::size_t r1 = F[0].dim(2);
            s.assign((F[0].values().data() + (i * r1)), (F[0].values().data() + (i * r1)) + r1);
          },
          [&](const std::vector<double>& in, std::size_t p, std::size_t i, std::vector<double>& s) {
            const std::size_t rl = F[p].dim(0), n = F[p].dim(1), rr = F[p].dim(2);
            s.assign(rr, 0.0);
            for (std::size_t a = 0; a < rl; ++a) {
              const double* row = (F[p].values().data() + ((a * n + i) * rr));
              for (std::size_t b = 0; b < rr; ++b) s[b] += in[a] * row[b];
            }
          },
          [&](const std::vector<double>& s, double* dst, std::size_t n) {
            const auto& G = F[M - 1];
            const std::size_t rl = G.dim(0);
            for (std::size_t i = 0; i < n; ++i) {
              double acc = 0.0;
              for (std::size_t a = 0; a < rl; ++a) acc += s[a] * G[a * n + i];
              dst[i] = acc;
            }
          });
      break;
    }
    case Topology::TR: {
      // state: r_0 x r_p matrix product of the fixed cores.
      const std::size_t r0 = F[0].dim(0);
      chain_contract(
          spec.dims, out,
          [&](std::size_t i, std::vector<double>& s) {
            const std::size_t n = F[0].dim(1), rr = F[0].dim(2);
            s.resize(r0 * rr);
            for (std::size_t a = 0; a < r0; ++a)
              for (std::size_t b = 0; b < rr; ++b) s[a * rr + b] = F[0][(a * n + i) * rr + b];
          },
          [&](const std::vector<double>& in, std::size_t p, std::size_t i, std::vector<double>& s) {
            const std::size_t rl = F[p].dim(0), n = F[p].dim(1), rr = F[p].dim(2);
            s.assign(r0 * rr, 0.0);
            for (std::size_t a = 0; a < r0; ++a)
              for (std::size_t c = 0; c < rl; ++c) {
                const double x = in[a * rl + c];
                const double* row = (F[p].values().data() + ((c * n + i) * rr));
                for (std::size_t b = 0; b < rr; ++b) s[a * rr + b] += x * row[b];
              }
          },
          [&](const std::vector<double>& s, double* dst, std::size_t n) {
            const auto& G = F[M - 1];
            const std::size_t rl = G.dim(0);  // columns of s
            for (std::size_t i = 0; i < n; ++i) {
              double acc = 0.0;
              for (std::size_t a = 0; a < r0; ++a)
                for (std::size_t c = 0; c < rl; ++c) acc += s[a * rl + c] * G[(c * n + i) * r0 + a];
              dst[i] = acc;
            }
          });
      break;
    }
    case Topology::Tucker: {
      // Successive mode products core x_1 A_1 ... x_M A_M.
      DenseTensor cur = *latents.core;
      for (std::size_t p = 0; p < M; ++p) {
        const auto& A = F[p];
        const std::size_t n = A.dim(0), r = A.dim(1);
        auto dims = cur.dims();
        const std::size_t left = product(std::span(dims).first(p));
        const std::size_t right = product(std::span(dims).subspan(p + 1));
        dims[p] = n;
        DenseTensor next(dims);
        parallel_for(left, [&](std::size_t l) {
          for (std::size_t i = 0; i < n; ++i) {
            double* dst = &next[(l * n + i) * right];
            for (std::size_t k = 0; k < r; ++k) {
              const double a = A[i * r + k];
              const double* src = cur.values().data() + (l * r + k) * right;
              for (std::size_t x = 0; x < right; ++x) dst[x] += a * src[x];
            }
          }
        });
        cur = std::move(next);
      }
      out = std::move(cur);
      break;
    }
  }
  for (double v : out.values())
    if (!std::isfinite(v)) throw NumericError("rate tensor overflowed to a non-finite value");
  return out;
}

DenseTensor sample_observation(const DenseTensor& rate, const ObservationModel& obs, std::uint64_t seed) {
  DenseTensor y(rate.dims());
  const std::size_t n = rate.size();
  if (obs.kind == ObservationModel::Kind::Poisson) {
    for (std::size_t e = 0; e < n; ++e) {
      const double lambda = rate[e];
      if (!(lambda > 0) || !std::isfinite(lambda)) {
        std::string where;
        for (auto i : rate.unflatten(e)) where += (where.empty() ? "" : ",") + std::to_string(i + 1);
        throw DomainError("Poisson rate " + std::to_string(lambda) + " at index (" + where +
                          ") is not strictly positive");
      }
    }
    parallel_for(n, [&](std::size_t e) {
      CounterRng rng(derive_seed(seed, {e}));
      std::poisson_distribution<long long> poisson(rate[e]);
      y[e] = static_cast<double>(poisson(rng));
    });
  } else {
    if (!(obs.sigma2 >= 0)) throw ConfigError("Gaussian observation variance must be >= 0");
    if (obs.sigma2 == 0.0) return rate;
    const double sd = std::sqrt(obs.sigma2);
    parallel_for(n, [&](std::size_t e) {
      CounterRng rng(derive_seed(seed, {e}));
      std::normal_distribution<double> noise(0.0, sd);
      y[e] = rate[e] + noise(rng);
    });
  }
  return y;
}

double naive_rate_entry(const ModelSpec& spec, const LatentDraw& latents, std::span<const std::size_t> index) {
  const std::size_t M = spec.order;
  const auto& F = latents.factors;
  // Enumerate link index tuples; link sizes depend on topology.
  std::vector<std::size_t> links;
  switch (spec.topology) {
    case Topology::CP: links = {spec.ranks[0]}; break;
    case Topology::Tucker:
    case Topology::TR: links = spec.ranks; break;
    case Topology::TT: links = spec.ranks; break;
  }
  Index k(links.size(), 0);
  double total = 0.0;
  do {
    double term = 1.0;
    switch (spec.topology) {
      case Topology::CP:
        for (std::size_t p = 0; p < M; ++p) term *= F[p].at(std::array{index[p], k[0]});
        break;
      case Topology::Tucker:
        term = latents.core->at(k);
        for (std::size_t p = 0; p < M; ++p) term *= F[p].at(std::array{index[p], k[p]});
        break;
      case Topology::TT:
        for (std::size_t p = 0; p < M; ++p) {
          const std::size_t a = p == 0 ? 0 : k[p - 1];
          const std::size_t b = p + 1 == M ? 0 : k[p];
          term *= F[p].at(std::array{a, index[p], b});
        }
        break;
      case Topology::TR:
        // Link p (0-based) joins core p and core p+1; core 0 uses link M-1 on its left.
        for (std::size_t p = 0; p < M; ++p)
          term *= F[p].at(std::array{k[(p + M - 1) % M], index[p], k[p]});
        break;
    }
    total += term;
  } while (next_index(k, links));
  return total;
}

}  // namespace tensorrank
