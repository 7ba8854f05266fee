#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tensorrank/model.hpp"
#include "tensorrank/moment_id.hpp"
#include "tensorrank/moments.hpp"
#include "tensorrank/rational.hpp"

namespace tensorrank {

// Log-parameter symbols; the rank block comes first.
struct SymbolLayout {
  enum class Kind { LogRank, LogMu2, LogSigma2 };
  struct Symbol {
    Kind kind;
    std::size_t index;  // link for ranks, factor group otherwise
    std::string name;
  };
  std::vector<Symbol> symbols;
  std::size_t n_rank = 0;

  static SymbolLayout for_spec(const ModelSpec& spec);
  std::size_t size() const { return symbols.size(); }
  std::size_t rank_column(std::size_t link) const { return link; }
  std::size_t mu_column(std::size_t group) const;
  std::size_t sigma_column(std::size_t group) const;
  std::size_t n_groups() const { return (symbols.size() - n_rank) / 2; }
};

struct Monomial {
  MomentId moment;
  std::string name;            // e.g. "v{1,2}"
  std::vector<int> exponents;  // aligned with SymbolLayout
};

struct DesignMatrix {
  SymbolLayout layout;
  std::vector<Monomial> rows;
};

// Latent links touched by each factor group. A pure term v_U has rank
// exponent 1 on links touched by some group in U and 2 on the rest, a
// sigma^2 factor for each group in U and a mu^2 factor for each group
// outside it. The squared mean is U = {}.
std::vector<std::vector<std::size_t>> group_link_incidence(const ModelSpec& spec);

Monomial analytic_monomial(const ModelSpec& spec, const MomentId& id);
Monomial analytic_monomial(const ModelSpec& spec, SharingSet s);  // pure term of modes

// Value of the monomial at the model's ranks and prior moments.
double evaluate_monomial(const ModelSpec& spec, const Monomial& m);
double evaluate_log_monomial(const ModelSpec& spec, const Monomial& m);

// Population moment table (mean, pure terms) for the given mode sets;
// covariances are filled by summing pure terms over subsets.
MomentTable population_moment_table(const ModelSpec& spec, std::span<const SharingSet> sets);

DesignMatrix build_design_matrix(const ModelSpec& spec, SetPlanOptions options = {});

struct WitnessRow {
  std::vector<std::pair<std::size_t, Rational>> combination;  // (row, coefficient)
  std::vector<Rational> rank_residual;                       // rank-column entries
};

struct IdentifiabilityVerdict {
  bool identifiable = false;
  std::size_t reduced_rank = 0;
  std::size_t n_rank_symbols = 0;
  std::vector<WitnessRow> witness;
};

IdentifiabilityVerdict rank_identifiability(const DesignMatrix& dm);

// Rank of a rational matrix by exact elimination.
std::size_t exact_rank(std::vector<std::vector<Rational>> rows);

// Per mode p: row(v_p) - row(E^2) - row(v_{G,p}) + row(v_G).
struct TuckerIdentityResidual {
  std::size_t mode;
  std::vector<int> residual;
  double lhs = 0.0;  // log v_p - log E^2 at the model's values
  double rhs = 0.0;  // log v_{G,p} - log v_G
};
std::vector<TuckerIdentityResidual> tucker_identity_check(const ModelSpec& spec, const DesignMatrix& dm);

nlohmann::json verdict_json(const DesignMatrix& dm, const IdentifiabilityVerdict& verdict);
std::string monomial_string(const SymbolLayout& layout, const Monomial& m);

}  // namespace tensorrank
