#include "tensorrank/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "tensorrank/error.hpp"

namespace tensorrank {

using nlohmann::json;

SymbolLayout SymbolLayout::for_spec(const ModelSpec& spec) {
  SymbolLayout layout;
  const std::size_t links = spec.ranks.size();
  layout.n_rank = links;
  for (std::size_t l = 0; l < links; ++l)
    layout.symbols.push_back({Kind::LogRank, l, links == 1 && spec.topology == Topology::CP ? "log r" : "log r_" + std::to_string(l + 1)});
  const std::size_t groups = group_count(spec);
  auto group_name = [&](std::size_t g) { return g == spec.order ? std::string("G") : std::to_string(g + 1); };
  for (std::size_t g = 0; g < groups; ++g) layout.symbols.push_back({Kind::LogMu2, g, "log mu_" + group_name(g) + "^2"});
  for (std::size_t g = 0; g < groups; ++g)
    layout.symbols.push_back({Kind::LogSigma2, g, "log sigma_" + group_name(g) + "^2"});
  return layout;
}

std::size_t SymbolLayout::mu_column(std::size_t group) const { return n_rank + group; }
std::size_t SymbolLayout::sigma_column(std::size_t group) const { return n_rank + n_groups() + group; }

std::vector<std::vector<std::size_t>> group_link_incidence(const ModelSpec& spec) {
  const std::size_t M = spec.order;
  std::vector<std::vector<std::size_t>> inc(group_count(spec));
  switch (spec.topology) {
    case Topology::CP:
      for (auto& g : inc) g = {0};
      break;
    case Topology::Tucker:
      for (std::size_t p = 0; p < M; ++p) inc[p] = {p};
      for (std::size_t l = 0; l < M; ++l) inc[M].push_back(l);
      break;
    case Topology::TT:
      // Link l joins cores l and l+1.
      for (std::size_t p = 0; p < M; ++p) {
        if (p > 0) inc[p].push_back(p - 1);
        if (p + 1 < M) inc[p].push_back(p);
      }
      break;
    case Topology::TR:
      for (std::size_t p = 0; p < M; ++p) {
        inc[p].push_back((p + M - 1) % M);
        inc[p].push_back(p);
        std::sort(inc[p].begin(), inc[p].end());
        inc[p].erase(std::unique(inc[p].begin(), inc[p].end()), inc[p].end());
      }
      break;
  }
  return inc;
}

Monomial analytic_monomial(const ModelSpec& spec, const MomentId& id) {
  spec.validate();
  const auto layout = SymbolLayout::for_spec(spec);
  const std::size_t groups = group_count(spec);
  const SharingSet u = id.kind == MomentId::Kind::MeanSquared ? SharingSet{} : id.groups;
  if (id.kind == MomentId::Kind::Pure) {
    if (u.empty()) throw ConfigError("the pure term of the empty set is undefined (C_empty = 0)");
    if (!u.subset_of(SharingSet::all(groups)))
      throw ConfigError("sharing set {" + u.to_string() + "} exceeds the model order");
    if (spec.topology == Topology::Tucker) {
      const std::size_t modes = u.without(spec.order).size();
      if (modes > 1)
        throw ConfigError("Tucker monomials are available for v{G}, v{p} and v{G,p} only, not " + label(spec, id));
    }
  }
  const auto inc = group_link_incidence(spec);
  Monomial m{id, label(spec, id), std::vector<int>(layout.size(), 0)};
  for (std::size_t l = 0; l < layout.n_rank; ++l) m.exponents[l] = 2;
  for (std::size_t g = 0; g < groups; ++g) {
    if (u.contains(g)) {
      m.exponents[layout.sigma_column(g)] = 1;
      for (auto l : inc[g]) m.exponents[l] = 1;
    } else {
      m.exponents[layout.mu_column(g)] = 1;
    }
  }
  return m;
}

Monomial analytic_monomial(const ModelSpec& spec, SharingSet s) { return analytic_monomial(spec, MomentId::pure(s)); }

namespace {

// r_l, mu_g^2 or sigma_g^2 for one symbol.
double symbol_value(const ModelSpec& spec, const SymbolLayout::Symbol& sym) {
  if (sym.kind == SymbolLayout::Kind::LogRank) return static_cast<double>(spec.ranks[sym.index]);
  const Prior& prior = sym.index == spec.order ? *spec.core_prior : spec.priors[sym.index];
  return sym.kind == SymbolLayout::Kind::LogMu2 ? prior.mu * prior.mu : prior.sigma2;
}

}  // namespace

double evaluate_log_monomial(const ModelSpec& spec, const Monomial& m) {
  const auto layout = SymbolLayout::for_spec(spec);
  if (m.exponents.size() != layout.size()) throw ConfigError("monomial does not match the model's symbol layout");
  double acc = 0.0;
  for (std::size_t c = 0; c < layout.size(); ++c)
    if (m.exponents[c] != 0) acc += m.exponents[c] * std::log(symbol_value(spec, layout.symbols[c]));
  return acc;
}

double evaluate_monomial(const ModelSpec& spec, const Monomial& m) {
  // Direct product keeps integer-valued cases exact.
  const auto layout = SymbolLayout::for_spec(spec);
  if (m.exponents.size() != layout.size()) throw ConfigError("monomial does not match the model's symbol layout");
  double acc = 1.0;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const int e = m.exponents[c];
    if (e == 0) continue;
    const double v = symbol_value(spec, layout.symbols[c]);
    acc *= e > 0 ? std::pow(v, e) : 1.0 / std::pow(v, -e);
  }
  return acc;
}

MomentTable population_moment_table(const ModelSpec& spec, std::span<const SharingSet> sets) {
  MomentTable table;
  table.mean = std::sqrt(evaluate_monomial(spec, analytic_monomial(spec, MomentId::mean_squared())));
  for (auto s : close_under_subsets(sets)) table.pure[s] = evaluate_monomial(spec, analytic_monomial(spec, s));
  for (const auto& [s, v] : table.pure) {
    double c = 0.0;
    for (auto t : s.subsets())
      if (!t.empty()) c += table.pure.at(t);
    table.cov[s] = c;
  }
  return table;
}

DesignMatrix build_design_matrix(const ModelSpec& spec, SetPlanOptions options) {
  DesignMatrix dm{SymbolLayout::for_spec(spec), {}};
  dm.rows.push_back(analytic_monomial(spec, MomentId::mean_squared()));
  if (spec.topology == Topology::Tucker) {
    const std::size_t core = spec.order;
    dm.rows.push_back(analytic_monomial(spec, MomentId::pure(SharingSet::single(core))));
    for (std::size_t p = 0; p < spec.order; ++p)
      dm.rows.push_back(analytic_monomial(spec, MomentId::pure(SharingSet::single(p))));
    for (std::size_t p = 0; p < spec.order; ++p)
      dm.rows.push_back(analytic_monomial(spec, MomentId::pure(SharingSet::single(core).with(p))));
    return dm;
  }
  for (auto s : required_sharing_sets(spec, options)) dm.rows.push_back(analytic_monomial(spec, s));
  return dm;
}

std::size_t exact_rank(std::vector<std::vector<Rational>> rows) {
  std::size_t rank = 0;
  const std::size_t cols = rows.empty() ? 0 : rows[0].size();
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][c].is_zero()) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[rank], rows[pivot]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      if (rows[r][c].is_zero()) continue;
      const Rational f = rows[r][c] / rows[rank][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[rank][k];
    }
    ++rank;
  }
  return rank;
}

IdentifiabilityVerdict rank_identifiability(const DesignMatrix& dm) {
  if (dm.rows.empty()) throw ConfigError("empty design matrix");
  const std::size_t n_rows = dm.rows.size();
  const std::size_t n_cols = dm.layout.size();
  const std::size_t n_rank = dm.layout.n_rank;

  std::vector<std::vector<Rational>> a(n_rows, std::vector<Rational>(n_cols));
  std::vector<std::vector<Rational>> comb(n_rows, std::vector<Rational>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) a[r][c] = dm.rows[r].exponents[c];
    comb[r][r] = 1;
  }

  // Eliminate nuisance columns left to right; the pivot is the unused row
  // with the smallest index.
  std::vector<bool> used(n_rows, false);
  for (std::size_t c = n_rank; c < n_cols; ++c) {
    std::optional<std::size_t> pivot;
    for (std::size_t r = 0; r < n_rows && !pivot; ++r)
      if (!used[r] && !a[r][c].is_zero()) pivot = r;
    if (!pivot) continue;
    used[*pivot] = true;
    const auto& prow = a[*pivot];
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (r == *pivot || a[r][c].is_zero()) continue;
      const Rational f = a[r][c] / prow[c];
      for (std::size_t k = 0; k < n_cols; ++k) a[r][k] -= f * prow[k];
      for (std::size_t k = 0; k < n_rows; ++k) comb[r][k] -= f * comb[*pivot][k];
    }
  }

  IdentifiabilityVerdict verdict;
  verdict.n_rank_symbols = n_rank;
  std::vector<std::vector<Rational>> reduced;
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (used[r]) continue;
    WitnessRow w;
    for (std::size_t k = 0; k < n_rows; ++k)
      if (!comb[r][k].is_zero()) w.combination.emplace_back(k, comb[r][k]);
    w.rank_residual.assign(a[r].begin(), a[r].begin() + static_cast<std::ptrdiff_t>(n_rank));
    reduced.push_back(w.rank_residual);
    verdict.witness.push_back(std::move(w));
  }
  verdict.reduced_rank = exact_rank(reduced);
  verdict.identifiable = verdict.reduced_rank == n_rank;
  return verdict;
}

std::vector<TuckerIdentityResidual> tucker_identity_check(const ModelSpec& spec, const DesignMatrix& dm) {
  if (spec.topology != Topology::Tucker) throw ConfigError("the Tucker identity check needs a Tucker model");
  const std::size_t core = spec.order;
  auto find = [&](const MomentId& id) -> const Monomial& {
    for (const auto& row : dm.rows)
      if (row.moment == id) return row;
    throw DependencyError("design matrix lacks row " + label(spec, id));
  };
  const auto& e2 = find(MomentId::mean_squared());
  const auto& vg = find(MomentId::pure(SharingSet::single(core)));
  std::vector<TuckerIdentityResidual> out;
  for (std::size_t p = 0; p < spec.order; ++p) {
    const auto& vp = find(MomentId::pure(SharingSet::single(p)));
    const auto& vgp = find(MomentId::pure(SharingSet::single(core).with(p)));
    TuckerIdentityResidual res{p, std::vector<int>(dm.layout.size()), 0.0, 0.0};
    for (std::size_t c = 0; c < dm.layout.size(); ++c)
      res.residual[c] = vp.exponents[c] - e2.exponents[c] - vgp.exponents[c] + vg.exponents[c];
    res.lhs = evaluate_log_monomial(spec, vp) - evaluate_log_monomial(spec, e2);
    res.rhs = evaluate_log_monomial(spec, vgp) - evaluate_log_monomial(spec, vg);
    out.push_back(std::move(res));
  }
  return out;
}

std::string monomial_string(const SymbolLayout& layout, const Monomial& m) {
  std::string s;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const int e = m.exponents[c];
    if (e == 0) continue;
    if (!s.empty()) s += " + ";
    if (e != 1) s += std::to_string(e) + "*";
    s += layout.symbols[c].name;
  }
  return s.empty() ? "0" : s;
}

json verdict_json(const DesignMatrix& dm, const IdentifiabilityVerdict& verdict) {
  json symbols = json::array();
  for (const auto& s : dm.layout.symbols) symbols.push_back(s.name);
  json rows = json::array();
  for (const auto& r : dm.rows) rows.push_back({{"moment", r.name}, {"exponents", r.exponents}});
  json witness = json::array();
  for (const auto& w : verdict.witness) {
    json comb = json::array();
    for (const auto& [row, coef] : w.combination) comb.push_back({{"row", dm.rows[row].name}, {"coef", coef.to_string()}});
    json res = json::array();
    for (const auto& q : w.rank_residual) res.push_back(q.to_string());
    witness.push_back({{"combination", comb}, {"rank_residual", res}});
  }
  return {{"identifiable", verdict.identifiable},
          {"reduced_rank", verdict.reduced_rank},
          {"n_rank_symbols", verdict.n_rank_symbols},
          {"symbols", symbols},
          {"rows", rows},
          {"witness", witness}};
}

}  // namespace tensorrank
