// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on
// any failure. Usage: acceptance [N ...] [--cli PATH] [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tensorrank/diagnostics.hpp"
#include "tensorrank/estimators.hpp"
#include "tensorrank/identifiability.hpp"
#include "tensorrank/moments.hpp"
#include "tensorrank/oracle.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/pipeline.hpp"
#include "tensorrank/random.hpp"

namespace fs = std::filesystem;
using namespace tensorrank;
using tensorrank::testing::make_spec;
using tensorrank::testing::random_spec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Context {
  std::string cli;
  fs::path workdir;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

DenseTensor simulate(const ModelSpec& spec, std::uint64_t seed) {
  return sample_observation(build_rate(spec, sample_latents(spec, derive_seed(seed, {0}))), spec.obs,
                            derive_seed(seed, {1}));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// 1. Identifiability verdicts.
Outcome criterion1(const Context&) {
  Outcome out;
  std::ostringstream msg;
  for (std::size_t m = 2; m <= 6; ++m) {
    std::vector<std::size_t> ranks(m, 3);
    const auto dm = build_design_matrix(make_spec(Topology::Tucker, ranks, std::vector<std::size_t>(m, 4)));
    const auto v = rank_identifiability(dm);
    if (v.identifiable || v.reduced_rank != 0) {
      out.pass = false;
      msg << "Tucker M=" << m << " reduced rank " << v.reduced_rank << " (expected zero matrix); ";
    }
  }
  for (std::size_t m = 3; m <= 6; ++m) {
    const auto cp = rank_identifiability(build_design_matrix(make_spec(Topology::CP, {3}, std::vector<std::size_t>(m, 4))));
    if (cp.reduced_rank != 1) out.pass = false, msg << "CP M=" << m << " rank " << cp.reduced_rank << "; ";
    const auto tt = rank_identifiability(
        build_design_matrix(make_spec(Topology::TT, std::vector<std::size_t>(m - 1, 3), std::vector<std::size_t>(m, 4))));
    if (tt.reduced_rank != m - 1) out.pass = false, msg << "TT M=" << m << " rank " << tt.reduced_rank << "; ";
  }
  for (std::size_t m = 3; m <= 8; ++m) {
    const auto tr = rank_identifiability(
        build_design_matrix(make_spec(Topology::TR, std::vector<std::size_t>(m, 3), std::vector<std::size_t>(m, 3))));
    if (tr.reduced_rank != m) out.pass = false, msg << "TR M=" << m << " rank " << tr.reduced_rank << "; ";
  }
  out.detail = out.pass ? "all verdicts as expected" : msg.str();
  return out;
}

// 2. Population exactness of the closed-form estimators.
Outcome criterion2(const Context&) {
  std::mt19937_64 rng(2002);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int rep = 0; rep < 40; ++rep) {
    for (std::size_t m = 3; m <= 6; ++m) {
      auto rel = [&](double est, double truth) {
        worst = std::max(worst, std::abs(est - truth) / truth);
        ++checks;
      };
      const auto cp = random_spec(rng, Topology::CP, m, 8, 4, 0.2, 5.0, 0.05, 3.0);
      const auto tcp = population_moment_table(cp, required_sharing_sets(cp, {true}));
      for (std::size_t p = 1; p <= m; ++p)
        for (std::size_t q = p + 1; q <= m; ++q) rel(cp_rank_ratio(tcp, p, q).value(), double(cp.ranks[0]));

      const auto tt = random_spec(rng, Topology::TT, m, 8, 4, 0.2, 5.0, 0.05, 3.0);
      const auto ttt = population_moment_table(tt, required_sharing_sets(tt));
      for (std::size_t p = 1; p < m; ++p) rel(tt_rank_ratio(ttt, p, m).value(), double(tt.ranks[p - 1]));

      const auto tr = random_spec(rng, Topology::TR, m, 8, 4, 0.2, 5.0, 0.05, 3.0);
      const auto ttr = population_moment_table(tr, required_sharing_sets(tr));
      std::vector<double> xis;
      for (std::size_t p = 1; p <= m; ++p) xis.push_back(tr_xi(ttr, p, m));
      const auto sol = tr_solve(xis, ring_stencil_from_monomials(tr));
      for (std::size_t p = 0; p < m; ++p) rel(sol.ranks[p], double(tr.ranks[p]));
    }
  }
  return {worst <= 1e-9, std::to_string(checks) + " ranks, max relative error " + fmt("%.3g", worst)};
}

// 3. Monomials against the Monte-Carlo oracle.
Outcome criterion3(const Context&) {
  std::mt19937_64 rng(3003);
  double worst = 0.0;
  std::size_t checks = 0, failures = 0;
  std::string first_failure;
  for (auto t : {Topology::CP, Topology::TT, Topology::TR, Topology::Tucker}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::uniform_int_distribution<std::size_t> order(t == Topology::CP || t == Topology::Tucker ? 2 : 3, 4);
      const std::size_t m = t == Topology::CP ? std::max<std::size_t>(order(rng), 3) : order(rng);
      const auto spec = random_spec(rng, t, m, 4, 8);
      const auto dm = build_design_matrix(spec);
      for (const auto& row : dm.rows) {
        const auto o = population_pure_term_oracle(spec, row.moment, 10000, derive_seed(3003, {checks}));
        const double z = (o.estimate - evaluate_monomial(spec, row)) / o.standard_error;
        worst = std::max(worst, std::abs(z));
        ++checks;
        if (!(std::abs(z) <= 4.0)) {
          ++failures;
          if (first_failure.empty())
            first_failure = "; first: " + std::string(to_string(t)) + " " + label(spec, row.moment) + " z=" + fmt("%.2f", z);
        }
      }
    }
  }
  return {failures == 0, std::to_string(checks) + " rows, max |z| " + fmt("%.2f", worst) + ", " +
                             std::to_string(failures) + " beyond 4" + first_failure};
}

// 4. CP recovery at 100^3.
Outcome criterion4(const Context&) {
  Outcome out;
  std::ostringstream msg;
  const std::size_t runs = 20;
  for (std::size_t r : {5, 10, 15, 20, 25}) {
    const auto spec = make_spec(Topology::CP, {r}, {100, 100, 100}, Prior::from_gamma(1.25, 1.5));
    std::size_t hits = 0;
    std::vector<double> medians;
    for (std::size_t run = 0; run < runs; ++run) {
      const auto y = simulate(spec, derive_seed(4004, {r, run}));
      PipelineConfig cfg;
      cfg.B = 50;
      cfg.n_pairs = 50000;
      cfg.normalize = true;
      cfg.cp_average_pairs = true;
      cfg.seed = derive_seed(4104, {r, run});
      const auto res = run_pipeline(y, Topology::CP, cfg);
      const double med = res.ranks[0].median;
      medians.push_back(med);
      if (res.ranks[0].available && std::llround(med) == static_cast<long long>(r)) ++hits;
    }
    std::sort(medians.begin(), medians.end());
    const double rate = double(hits) / runs;
    if (rate < 0.8) out.pass = false;
    msg << "r=" << r << ": " << hits << "/" << runs << " exact (medians " << fmt("%.1f", medians.front()) << ".."
        << fmt("%.1f", medians.back()) << "); ";
  }
  out.detail = msg.str();
  return out;
}

// 5. TT recovery at 25^3.
Outcome criterion5(const Context&) {
  const std::size_t runs = 20;
  std::vector<double> truth, est;
  std::size_t within = 0, total = 0;
  std::ostringstream msg;
  for (std::size_t r : {2, 3, 4, 6, 8}) {
    const auto spec = make_spec(Topology::TT, {r, r}, {25, 25, 25}, Prior::from_gamma(1.25, 1.5));
    std::size_t ok = 0;
    for (std::size_t run = 0; run < runs; ++run) {
      const auto y = simulate(spec, derive_seed(5005, {r, run}));
      PipelineConfig cfg;
      cfg.normalize = true;
      cfg.seed = derive_seed(5105, {r, run});
      const auto res = run_pipeline(y, Topology::TT, cfg);
      // An order-3 train has no bond away from the boundary cores, so the
      // +-2 check covers every bond.
      bool all_close = true;
      for (std::size_t k = 0; k < res.ranks.size(); ++k) {
        const double med = res.ranks[k].median;
        truth.push_back(double(spec.ranks[k]));
        est.push_back(std::isfinite(med) ? med : -1.0);
        if (!(std::abs(med - double(spec.ranks[k])) <= 2.0)) all_close = false;
      }
      ok += all_close;
      ++total;
    }
    within += ok;
    msg << "r=" << r << " " << ok << "/" << runs << "; ";
  }
  const double rho = spearman(truth, est);
  const double frac = double(within) / double(total);
  return {rho >= 0.8 && frac >= 0.7,
          "Spearman " + fmt("%.3f", rho) + ", within +-2 in " + fmt("%.0f%%", 100 * frac) + " of runs (" + msg.str() + ")"};
}

// 6. TR recovery at 40^3.
Outcome criterion6(const Context&) {
  const std::size_t runs = 20;
  std::mt19937_64 rng(6006);
  std::uniform_int_distribution<std::size_t> rank(1, 6);
  std::size_t ok = 0;
  double max_residual = 0.0;
  std::ostringstream msg;
  for (std::size_t run = 0; run < runs; ++run) {
    const std::vector<std::size_t> ranks{rank(rng), rank(rng), rank(rng)};
    const auto spec = make_spec(Topology::TR, ranks, {40, 40, 40}, Prior::from_gamma(0.25, 4.0));
    const auto y = simulate(spec, derive_seed(6006, {run}));
    PipelineConfig cfg;
    cfg.normalize = true;
    cfg.seed = derive_seed(6106, {run});
    const auto res = run_pipeline(y, Topology::TR, cfg);
    max_residual = std::max(max_residual, res.max_circulant_residual);
    bool all_close = true;
    for (std::size_t k = 0; k < 3; ++k)
      if (!(std::abs(res.ranks[k].median - double(ranks[k])) <= 2.0)) all_close = false;
    ok += all_close;
    if (!all_close) {
      msg << " (" << ranks[0] << "," << ranks[1] << "," << ranks[2] << ")->(";
      for (std::size_t k = 0; k < 3; ++k) msg << fmt("%.1f", res.ranks[k].median) << (k < 2 ? "," : ")");
    }
  }
  const double frac = double(ok) / runs;
  return {frac >= 0.6 && max_residual <= 1e-10,
          std::to_string(ok) + "/" + std::to_string(runs) + " runs with all ranks within +-2, max circulant residual " +
              fmt("%.2g", max_residual) + (msg.str().empty() ? "" : "; misses:" + msg.str())};
}

// 7. Tucker identity: log v_p - log E^2 = log v_{G,p} - log v_G.
Outcome criterion7(const Context&) {
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<std::size_t> order(2, 6);
  double worst = 0.0;
  std::size_t nonzero = 0, total = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto spec = random_spec(rng, Topology::Tucker, order(rng), 8, 4);
    const auto dm = build_design_matrix(spec);
    for (const auto& res : tucker_identity_check(spec, dm)) {
      ++total;
      worst = std::max(worst, std::abs(res.lhs - res.rhs));
      if (std::any_of(res.residual.begin(), res.residual.end(), [](int e) { return e != 0; })) ++nonzero;
    }
  }
  return {worst <= 1e-12 && nonzero == 0,
          std::to_string(total) + " mode identities, max |lhs - rhs| " + fmt("%.3g", worst) + ", " +
              std::to_string(nonzero) + " nonzero symbolic residuals (residual is -e_{log r_p})"};
}

// 8. Empirical against theoretical SNR, sqrt(n) scaling, unimodality.
Outcome criterion8(const Context&) {
  Outcome out;
  std::ostringstream msg;
  const std::size_t n_pairs = 50000, replicates = 100;
  bool agree = true, scaling = true;
  for (double cv : {0.5, 1.0, 2.0}) {
    auto spec = make_spec(Topology::TT, {1, 1}, {25, 25, 25}, Prior{1.0, cv * cv});
    for (std::size_t s = 1; s <= 2; ++s) {
      const auto set = s == 1 ? SharingSet::of({1}) : SharingSet::of({1, 2});
      const double emp = empirical_snr(spec, set, n_pairs, replicates, derive_seed(8008, {s}));
      const double th = theoretical_snr({3, s, 1.0, cv, double(n_pairs)});
      const double rel = std::abs(emp - th) / th;
      if (!(rel <= 0.25)) agree = false;
      const double emp2 = empirical_snr(spec, set, 2 * n_pairs, replicates, derive_seed(8008, {s}));
      const double ratio = emp2 / emp;
      if (!(std::abs(ratio / std::sqrt(2.0) - 1.0) <= 0.15)) scaling = false;
      msg << "cv=" << cv << " |S|=" << s << ": emp " << fmt("%.3g", emp) << " th " << fmt("%.3g", th) << " x2 ratio "
          << fmt("%.3f", ratio) << "; ";
    }
  }
  bool unimodal = true;
  const auto cvs = SnrGrid::default_cvs();
  for (std::size_t m = 2; m <= 5; ++m)
    for (std::size_t s = 1; s <= std::min<std::size_t>(2, m); ++s) {
      bool falling = false;
      for (std::size_t i = 1; i < cvs.size(); ++i) {
        const double d = theoretical_snr({m, s, 1.0, cvs[i], 1.0}) - theoretical_snr({m, s, 1.0, cvs[i - 1], 1.0});
        if (d < 0) falling = true;
        if (falling && d > 0) unimodal = false;
      }
    }
  out.pass = agree && scaling && unimodal;
  out.detail = std::string("agreement ") + (agree ? "ok" : "FAIL") + ", sqrt(n) scaling " + (scaling ? "ok" : "FAIL") +
               ", unimodality " + (unimodal ? "ok" : "FAIL") + " [" + msg.str() + "]";
  return out;
}

// 9. Moebius round trip.
Outcome criterion9(const Context&) {
  std::mt19937_64 rng(9009);
  std::normal_distribution<double> z(0.0, 10.0);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 3 + rep % 4;
    MomentTable t;
    for (auto s : SharingSet::all(m).subsets())
      if (!s.empty() && s.size() <= 3) t.cov[s] = z(rng);
    for (const auto& [s, c] : t.cov) mobius_invert(t, s);
    for (const auto& [s, c] : t.cov) {
      double sum = 0.0;
      for (auto u : s.subsets())
        if (!u.empty()) sum += t.pure.at(u);
      worst = std::max(worst, std::abs(sum - c));
      ++checks;
    }
  }
  return {worst <= 1e-12, std::to_string(checks) + " sets, max |sum v_T - C_S| " + fmt("%.3g", worst)};
}

// 10. CLI determinism, including across thread counts.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const Context& ctx, const std::string& args, const fs::path& stdout_path) {
  const std::string cmd = "\"" + ctx.cli + "\" " + args + " > \"" + stdout_path.string() + "\" 2> \"" +
                          stdout_path.string() + ".err\"";
  return std::system(cmd.c_str());
}

Outcome criterion10(const Context& ctx) {
  if (ctx.cli.empty()) return {false, "no --cli path given"};
  const fs::path dir = ctx.workdir / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "tr.json") << R"({"topology":"TR","dims":[20,20,20],"ranks":[2,3,4],)"
                                   << R"("priors":{"shape":0.25,"scale":4.0}})";
    std::ofstream(dir / "tt.json") << R"({"topology":"TT","dims":[12,12,12],"ranks":[1,1],)"
                                   << R"("priors":{"mu":1.0,"sigma2":1.0}})";
    std::ofstream(dir / "grid.json") << R"({"orders":[3,4],"sizes":[1,2],"mus":[1.0],"cvs":[0.5,1.0,2.0],"n":100})";
  }
  struct Command {
    std::string name;
    std::string args;  // {run} expands to the run directory
    std::vector<std::string> files;
  };
  const std::string d = dir.string();
  const std::vector<Command> commands{
      {"simulate", "simulate --model " + d + "/tr.json --out {run}/y.tns --rate-out {run}/rate.tns --seed 11",
       {"y.tns", "rate.tns"}},
      {"identify", "identify --model " + d + "/tr.json --format json", {}},
      {"estimate", "estimate --tensor " + d + "/fixed.tns --topology TR --bootstrap 12 --pairs 4000 --normalize --samples",
       {}},
      {"estimate-csv", "estimate --tensor " + d + "/fixed.tns --topology CP --bootstrap 8 --pairs 3000 --format csv", {}},
      {"oracle", "oracle --model " + d + "/tr.json --sets \"1;1,2;E2\" --mc 2000 --format json", {}},
      {"snr", "snr --grid " + d + "/grid.json --model " + d + "/tt.json --sets \"1;1,2\" --pairs 2000 --replicates 30",
       {}},
  };
  // Fixed input for the estimate commands.
  if (run_cli(ctx, "simulate --model " + d + "/tr.json --out " + d + "/fixed.tns --seed 5", dir / "fixed.stdout") != 0)
    return {false, "simulate for the fixed tensor failed"};

  Outcome out;
  std::ostringstream msg;
  std::size_t compared = 0;
  for (const auto& c : commands) {
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "4"}) {
      const fs::path run = dir / (c.name + "_" + std::to_string(outputs.size()));
      fs::create_directories(run);
      std::string args = c.args;
      for (auto pos = args.find("{run}"); pos != std::string::npos; pos = args.find("{run}"))
        args.replace(pos, 5, run.string());
      const int rc = run_cli(ctx, args + " --threads " + threads, run / "stdout");
      if (rc != 0) {
        out.pass = false;
        msg << c.name << " exited with " << rc << "; ";
      }
      std::string blob = slurp(run / "stdout");
      for (const auto& f : c.files) blob += "\x1f" + slurp(run / f);
      outputs.push_back(std::move(blob));
    }
    ++compared;
    if (outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].empty()) {
      out.pass = false;
      msg << c.name << " differs; ";
    }
  }
  out.detail = std::to_string(compared) + " commands x 3 runs (threads 1, 1, 4)" +
               (msg.str().empty() ? ", byte-identical" : ": " + msg.str());
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.workdir = fs::temp_directory_path() / "tensorrank_acceptance";
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc)
      ctx.cli = argv[++i];
    else if (a == "--workdir" && i + 1 < argc)
      ctx.workdir = argv[++i];
    else
      selected.push_back(std::stoi(a));
  }
  fs::create_directories(ctx.workdir);

  const std::vector<Criterion> criteria{
      {1, "identifiability verdicts", 1.0, criterion1},
      {2, "population exactness", 1.0, criterion2},
      {3, "monomial/oracle agreement", 120.0, criterion3},
      {4, "CP recovery 100^3", 600.0, criterion4},
      {5, "TT recovery 25^3", 900.0, criterion5},
      {6, "TR recovery 40^3", 900.0, criterion6},
      {7, "Tucker identity", 1.0, criterion7},
      {8, "SNR", 300.0, criterion8},
      {9, "Moebius round trip", 60.0, criterion9},
      {10, "CLI determinism", 300.0, criterion10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_seconds) + " s budget";
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
