#include "tensorrank/moments.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "tensorrank/error.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/random.hpp"

namespace tensorrank {

using nlohmann::json;

double MomentTable::pure_term(SharingSet s) const {
  auto it = pure.find(s);
  if (it == pure.end()) throw DependencyError("pure term v_{" + s.to_string() + "} is not in the moment table");
  return it->second;
}

double MomentTable::covariance(SharingSet s) const {
  if (s.empty()) return 0.0;
  auto it = cov.find(s);
  if (it == cov.end()) throw DependencyError("covariance C_{" + s.to_string() + "} is not in the moment table");
  return it->second;
}

void to_json(json& j, const MomentTable& t) {
  json cov = json::object(), pure = json::object(), used = json::object();
  for (const auto& [s, v] : t.cov) cov[s.to_string()] = v;
  for (const auto& [s, v] : t.pure) pure[s.to_string()] = v;
  for (const auto& [s, v] : t.n_pairs_used) used[s.to_string()] = v;
  j = json{{"mean", t.mean}, {"cov", cov}, {"pure", pure}, {"normalized", t.normalized}};
  if (!t.n_pairs_used.empty()) j["n_pairs_used"] = used;
}

void from_json(const json& j, MomentTable& t) {
  t = MomentTable{};
  t.mean = j.at("mean").get<double>();
  for (const auto& [k, v] : j.at("cov").items()) t.cov[SharingSet::parse(k)] = v.get<double>();
  for (const auto& [k, v] : j.at("pure").items()) t.pure[SharingSet::parse(k)] = v.get<double>();
  if (j.contains("n_pairs_used"))
    for (const auto& [k, v] : j.at("n_pairs_used").items()) t.n_pairs_used[SharingSet::parse(k)] = v.get<std::size_t>();
  t.normalized = j.value("normalized", false);
}

// Set planning ---------------------------------------------------------------

std::vector<SharingSet> required_sharing_sets(Topology topology, std::size_t M, SetPlanOptions options) {
  if (M < 2 || M > SharingSet::kMaxModes) throw ConfigError("unsupported order " + std::to_string(M));
  std::vector<SharingSet> sets;
  auto singletons = [&] {
    for (std::size_t p = 0; p < M; ++p) sets.push_back(SharingSet::single(p));
  };
  switch (topology) {
    case Topology::CP:
      singletons();
      if (options.cp_all_pairs) {
        for (std::size_t p = 0; p < M; ++p)
          for (std::size_t q = p + 1; q < M; ++q) sets.push_back(SharingSet::single(p).with(q));
      } else {
        sets.push_back(SharingSet::of({1, 2}));
      }
      break;
    case Topology::TT:
      if (M < 3)
        throw ConfigError("a TT model of order 2 is a matrix factorization; use the CP estimator (rank ratio v12*E^2/(v1*v2))");
      singletons();
      for (std::size_t p = 0; p + 1 < M; ++p) sets.push_back(SharingSet::single(p).with(p + 1));
      for (std::size_t p = 0; p + 2 < M; ++p) sets.push_back(SharingSet::single(p).with(p + 2));
      break;
    case Topology::TR:
      if (M < 3) throw ConfigError("a TR model of order 2 reduces to a matrix factorization and is unsupported");
      singletons();
      for (std::size_t p = 0; p < M; ++p) sets.push_back(SharingSet::single(p).with((p + 1) % M));
      break;
    case Topology::Tucker:
      sets.push_back(SharingSet::all(M));
      break;
  }
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  return sets;
}

std::vector<SharingSet> required_sharing_sets(const ModelSpec& spec, SetPlanOptions options) {
  return required_sharing_sets(spec.topology, spec.order, options);
}

std::vector<SharingSet> close_under_subsets(std::span<const SharingSet> sets) {
  std::set<SharingSet> closed;
  for (auto s : sets)
    for (auto t : s.subsets())
      if (!t.empty()) closed.insert(t);
  return {closed.begin(), closed.end()};
}

// Views ------------------------------------------------------------------------

TensorView::TensorView(const DenseTensor& base, std::size_t mode, std::vector<std::size_t> slice_map)
    : base_(&base), mode_(mode), map_(std::move(slice_map)) {
  if (mode >= base.order()) throw ConfigError("view mode out of range");
  if (map_.size() != base.dim(mode)) throw ConfigError("slice map length must equal the mode extent");
  for (auto s : map_)
    if (s >= base.dim(mode)) throw ConfigError("slice map entry out of range");
}

double TensorView::mean() const {
  if (map_.empty()) return base_->mean();
  // Sum each base slice once, then weight by how often the map uses it.
  const std::size_t n = base_->dim(mode_);
  const std::size_t inner = base_->strides()[mode_];
  const std::size_t outer = base_->size() / (n * inner);
  std::vector<double> slice_sum(n, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < n; ++s) {
      const double* p = base_->values().data() + (o * n + s) * inner;
      double acc = 0.0;
      for (std::size_t x = 0; x < inner; ++x) acc += p[x];
      slice_sum[s] += acc;
    }
  double total = 0.0;
  for (auto s : map_) total += slice_sum[s];
  return total / static_cast<double>(base_->size());
}

DenseTensor TensorView::materialize() const {
  DenseTensor out(base_->dims());
  Index index(order(), 0);
  std::size_t flat = 0;
  do {
    out[flat++] = (*this)(index);
  } while (next_index(index, dims()));
  return out;
}

// Pair sampling ------------------------------------------------------------------

PairSampler::PairSampler(std::vector<std::size_t> dims, SharingSet s, std::uint64_t seed)
    : dims_(std::move(dims)), set_(s), state_(seed) {
  const std::size_t M = dims_.size();
  if (M == 0 || M > SharingSet::kMaxModes) throw ConfigError("unsupported tensor order");
  if (!s.subset_of(SharingSet::all(M))) throw ConfigError("sharing set {" + s.to_string() + "} exceeds the tensor order");
  if (s == SharingSet::all(M))
    throw ConfigError("a pair sharing every mode is a single entry; exact sharing of all modes is not sampled");
  for (std::size_t k = 0; k < M; ++k)
    if (!s.contains(k) && dims_[k] < 2)
      throw ConfigError("mode " + std::to_string(k + 1) + " has extent 1, so pairs cannot differ on it");
}

void PairSampler::next(std::span<std::size_t> a, std::span<std::size_t> b) {
  CounterRng rng(state_);
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    const std::size_t n = dims_[k];
    if (set_.contains(k)) {
      a[k] = b[k] = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    } else {
      // Uniform over ordered pairs of distinct values.
      const std::size_t x = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      std::size_t y = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (y >= x) ++y;
      a[k] = x;
      b[k] = y;
    }
  }
  state_ = rng();
}

std::vector<std::pair<Index, Index>> sample_sharing_pairs(const std::vector<std::size_t>& dims, SharingSet s,
                                                          std::size_t n, std::uint64_t seed) {
  PairSampler sampler(dims, s, seed);
  std::vector<std::pair<Index, Index>> out(n, {Index(dims.size()), Index(dims.size())});
  for (auto& [a, b] : out) sampler.next(a, b);
  return out;
}

double estimate_covariance(const TensorView& y, SharingSet s, std::size_t n_pairs, std::uint64_t seed, double mean) {
  if (s.empty()) return 0.0;
  if (n_pairs < 2) throw ConfigError("covariance estimation needs at least 2 pairs");
  PairSampler sampler(y.dims(), s, seed);
  Index a(y.order()), b(y.order());
  double acc = 0.0;
  for (std::size_t j = 0; j < n_pairs; ++j) {
    sampler.next(a, b);
    acc += (y(a) - mean) * (y(b) - mean);
  }
  return acc / static_cast<double>(n_pairs - 1);
}

double estimate_covariance(const DenseTensor& y, SharingSet s, std::size_t n_pairs, std::uint64_t seed, double mean) {
  return estimate_covariance(TensorView(y), s, n_pairs, seed, mean);
}

double mobius_invert(MomentTable& table, SharingSet s) {
  if (s.empty()) throw DependencyError("the pure term of the empty set is undefined");
  double v = 0.0;
  for (auto t : s.subsets()) {
    if (t.empty()) continue;  // C_empty = 0
    auto it = table.cov.find(t);
    if (it == table.cov.end())
      throw DependencyError("v_{" + s.to_string() + "} needs C_{" + t.to_string() + "}, which is missing");
    v += ((s.size() - t.size()) % 2 == 0 ? 1.0 : -1.0) * it->second;
  }
  table.pure[s] = v;
  return v;
}

MomentTable compute_moment_table(const TensorView& y, std::span<const SharingSet> sets, const MomentOptions& options) {
  MomentTable table;
  table.mean = options.mean ? *options.mean : y.mean();
  const auto closed = close_under_subsets(sets);
  std::vector<double> cov(closed.size());
  parallel_for(closed.size(), [&](std::size_t i) {
    cov[i] = estimate_covariance(y, closed[i], options.n_pairs, derive_seed(options.seed, {closed[i].mask()}),
                                 table.mean);
  });
  for (std::size_t i = 0; i < closed.size(); ++i) {
    table.cov[closed[i]] = cov[i];
    table.n_pairs_used[closed[i]] = options.n_pairs;
  }
  for (auto s : closed) mobius_invert(table, s);
  if (options.normalize) {
    const double scale = table.mean * table.mean + kNormalizationEpsilon;
    for (auto& [s, v] : table.pure) v /= scale;
    table.normalized = true;
  }
  return table;
}

MomentTable compute_moment_table(const DenseTensor& y, std::span<const SharingSet> sets, std::size_t n_pairs,
                                 std::uint64_t seed, bool normalize) {
  MomentOptions options;
  options.n_pairs = n_pairs;
  options.seed = seed;
  options.normalize = normalize;
  return compute_moment_table(TensorView(y), sets, options);
}

}  // namespace tensorrank
