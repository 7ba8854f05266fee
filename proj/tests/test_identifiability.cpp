#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tensorrank/error.hpp"
#include "tensorrank/identifiability.hpp"
#include "tensorrank/oracle.hpp"

using namespace tensorrank;
using tensorrank::testing::make_spec;
using tensorrank::testing::random_spec;

namespace {

std::vector<std::vector<Rational>> to_rational(const DesignMatrix& dm) {
  std::vector<std::vector<Rational>> out;
  for (const auto& row : dm.rows) out.emplace_back(row.exponents.begin(), row.exponents.end());
  return out;
}

std::size_t svd_rank(const std::vector<std::vector<Rational>>& rows) {
  if (rows.empty()) return 0;
  Eigen::MatrixXd a(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j].to_double();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) > 1e-8) ++r;
  return r;
}

}  // namespace

TEST_CASE("symbol layout") {
  const auto cp = SymbolLayout::for_spec(make_spec(Topology::CP, {3}, {4, 4, 4}));
  CHECK(cp.size() == 7);
  CHECK(cp.symbols[0].name == "log r");
  CHECK(cp.symbols[1].name == "log mu_1^2");
  CHECK(cp.symbols[4].name == "log sigma_1^2");
  const auto tk = SymbolLayout::for_spec(make_spec(Topology::Tucker, {2, 3}, {4, 4}));
  CHECK(tk.size() == 8);
  CHECK(tk.n_groups() == 3);
  CHECK(tk.symbols[tk.mu_column(2)].name == "log mu_G^2");
}

TEST_CASE("design matrix shapes") {
  CHECK(build_design_matrix(make_spec(Topology::CP, {3}, {4, 4, 4})).rows.size() == 5);
  const auto tk = build_design_matrix(make_spec(Topology::Tucker, {2, 3}, {4, 4}));
  std::vector<std::string> labels;
  for (const auto& r : tk.rows) labels.push_back(r.name);
  CHECK(labels == std::vector<std::string>{"E[Y]^2", "v{G}", "v{1}", "v{2}", "v{G,1}", "v{G,2}"});
  CHECK(build_design_matrix(make_spec(Topology::TT, {2, 3}, {4, 4, 4})).rows.size() == 7);
}

TEST_CASE("CP monomials") {
  const auto spec = make_spec(Topology::CP, {3}, {4, 4, 4});
  CHECK(analytic_monomial(spec, MomentId::mean_squared()).exponents == std::vector<int>{2, 1, 1, 1, 0, 0, 0});
  CHECK(analytic_monomial(spec, SharingSet::of({1})).exponents == std::vector<int>{1, 0, 1, 1, 1, 0, 0});
  CHECK(analytic_monomial(spec, SharingSet::of({1, 2})).exponents == std::vector<int>{1, 0, 0, 1, 1, 1, 0});
  CHECK_THROWS_AS(analytic_monomial(spec, SharingSet{}), ConfigError);
  CHECK_THROWS_AS(analytic_monomial(spec, SharingSet::of({4})), ConfigError);
}

TEST_CASE("TT rank exponent is one exactly on bonds touched by the shared cores") {
  std::mt19937_64 rng(11);
  for (std::size_t m = 3; m <= 6; ++m) {
    const auto spec = random_spec(rng, Topology::TT, m, 5, 4);
    for (auto s : SharingSet::all(m).subsets()) {
      if (s.empty()) continue;
      const auto mono = analytic_monomial(spec, s);
      for (std::size_t l = 0; l + 1 < m; ++l) {
        const bool touched = s.contains(l) || s.contains(l + 1);
        CHECK(mono.exponents[l] == (touched ? 1 : 2));
      }
    }
  }
}

TEST_CASE("verdicts per topology") {
  for (std::size_t m = 3; m <= 6; ++m) {
    const auto cp = build_design_matrix(make_spec(Topology::CP, {2}, std::vector<std::size_t>(m, 4)));
    const auto v = rank_identifiability(cp);
    CHECK(v.identifiable);
    CHECK(v.reduced_rank == 1);

    const auto tt = build_design_matrix(make_spec(Topology::TT, std::vector<std::size_t>(m - 1, 2),
                                                  std::vector<std::size_t>(m, 4)));
    const auto vt = rank_identifiability(tt);
    CHECK(vt.identifiable);
    CHECK(vt.reduced_rank == m - 1);
  }
  for (std::size_t m = 3; m <= 8; ++m) {
    const auto tr = build_design_matrix(make_spec(Topology::TR, std::vector<std::size_t>(m, 2),
                                                  std::vector<std::size_t>(m, 3)));
    const auto v = rank_identifiability(tr);
    CHECK(v.identifiable);
    CHECK(v.reduced_rank == m);
    CHECK(v.witness.size() >= m);
  }
}

TEST_CASE("Tucker: the identity residual is minus the rank-p indicator") {
  // v_p / E^2 and v_{G,p} / v_G differ by exactly one factor of r_p, so
  // the moments separate each Tucker rank from the nuisance parameters.
  for (std::size_t m = 2; m <= 6; ++m) {
    std::vector<std::size_t> ranks;
    for (std::size_t p = 0; p < m; ++p) ranks.push_back(p + 2);
    const auto spec = make_spec(Topology::Tucker, ranks, std::vector<std::size_t>(m, 4), Prior{1.5, 0.7});
    const auto dm = build_design_matrix(spec);
    for (const auto& res : tucker_identity_check(spec, dm)) {
      std::vector<int> expected(dm.layout.size(), 0);
      expected[res.mode] = -1;
      CHECK(res.residual == expected);
      CHECK(res.lhs - res.rhs == doctest::Approx(-std::log(static_cast<double>(ranks[res.mode]))));
    }
    const auto v = rank_identifiability(dm);
    CHECK(v.reduced_rank == m);
    CHECK(v.identifiable);
  }
  const auto spec = make_spec(Topology::Tucker, {2, 2, 2}, {3, 3, 3});
  CHECK_THROWS_AS(analytic_monomial(spec, SharingSet::of({1, 2})), ConfigError);
  CHECK_THROWS_AS(tucker_identity_check(make_spec(Topology::CP, {2}, {3, 3, 3}),
                                        build_design_matrix(make_spec(Topology::CP, {2}, {3, 3, 3}))),
                  ConfigError);
}

TEST_CASE("exact rank agrees with a floating SVD") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> entry(-3, 3), size(1, 7);
  for (int rep = 0; rep < 200; ++rep) {
    const int rows = size(rng), cols = size(rng), inner = size(rng);
    // Product of random integer factors gives controlled rank deficiency.
    std::vector<std::vector<int>> a(rows, std::vector<int>(inner)), b(inner, std::vector<int>(cols));
    for (auto& r : a)
      for (auto& x : r) x = entry(rng);
    for (auto& r : b)
      for (auto& x : r) x = entry(rng);
    std::vector<std::vector<Rational>> m(rows, std::vector<Rational>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        std::int64_t s = 0;
        for (int k = 0; k < inner; ++k) s += a[i][k] * b[k][j];
        m[i][j] = s;
      }
    CHECK(exact_rank(m) == svd_rank(m));
  }
  for (auto t : {Topology::CP, Topology::TT, Topology::TR, Topology::Tucker}) {
    const auto dm = build_design_matrix(make_spec(t, std::vector<std::size_t>(t == Topology::CP ? 1 : t == Topology::TT ? 3 : 4, 2),
                                                  {3, 3, 3, 4}));
    CHECK(exact_rank(to_rational(dm)) == svd_rank(to_rational(dm)));
  }
}

TEST_CASE("verdict is stable under row permutation and duplication") {
  std::mt19937_64 rng(4);
  for (auto t : {Topology::CP, Topology::TT, Topology::TR, Topology::Tucker}) {
    for (std::size_t m = 3; m <= 5; ++m) {
      auto dm = build_design_matrix(random_spec(rng, t, m, 4, 4));
      const auto base = rank_identifiability(dm);
      for (int rep = 0; rep < 10; ++rep) {
        auto shuffled = dm;
        std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
        shuffled.rows.push_back(shuffled.rows[rng() % shuffled.rows.size()]);
        const auto v = rank_identifiability(shuffled);
        CHECK(v.identifiable == base.identifiable);
        CHECK(v.reduced_rank == base.reduced_rank);
      }
    }
  }
}

TEST_CASE("witness combinations reproduce their rank residuals") {
  const auto dm = build_design_matrix(make_spec(Topology::TT, {2, 3, 4}, {4, 4, 4, 4}));
  const auto v = rank_identifiability(dm);
  for (const auto& w : v.witness) {
    std::vector<Rational> acc(dm.layout.size());
    for (const auto& [row, coef] : w.combination)
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += coef * Rational(dm.rows[row].exponents[c]);
    for (std::size_t c = dm.layout.n_rank; c < acc.size(); ++c) CHECK(acc[c].is_zero());
    for (std::size_t c = 0; c < dm.layout.n_rank; ++c) CHECK(acc[c] == w.rank_residual[c]);
  }
}

TEST_CASE("analytic monomials match the Monte-Carlo oracle") {
  std::mt19937_64 rng(8);
  for (auto t : {Topology::CP, Topology::TT, Topology::TR, Topology::Tucker}) {
    const auto spec = random_spec(rng, t, 3, 3, 3);
    for (const auto& row : build_design_matrix(spec).rows) {
      const auto o = population_pure_term_oracle(spec, row.moment, 20000, 99);
      const double a = evaluate_monomial(spec, row);
      CHECK_MESSAGE(std::abs(o.estimate - a) <= 5 * o.standard_error,
                    label(spec, row.moment) << " analytic " << a << " mc " << o.estimate << " se " << o.standard_error);
    }
  }
}

TEST_CASE("population table and JSON verdict") {
  const auto spec = make_spec(Topology::CP, {4}, {3, 3, 3}, Prior{2.0, 1.0});
  const auto sets = required_sharing_sets(spec);
  const auto t = population_moment_table(spec, sets);
  CHECK(t.mean == doctest::Approx(4 * 8));
  CHECK(t.pure.at(SharingSet::of({1})) == doctest::Approx(4 * 1 * 4 * 4));
  CHECK(t.cov.at(SharingSet::of({1, 2})) ==
        doctest::Approx(t.pure.at(SharingSet::of({1})) + t.pure.at(SharingSet::of({2})) +
                        t.pure.at(SharingSet::of({1, 2}))));
  const auto dm = build_design_matrix(spec);
  const auto j = verdict_json(dm, rank_identifiability(dm));
  CHECK(j.at("identifiable").get<bool>());
  CHECK(j.at("reduced_rank").get<int>() == 1);
  CHECK(monomial_string(dm.layout, dm.rows[0]) == "2*log r + log mu_1^2 + log mu_2^2 + log mu_3^2");
}
