#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tensorrank/diagnostics.hpp"
#include "tensorrank/error.hpp"
#include "tensorrank/estimators.hpp"
#include "tensorrank/identifiability.hpp"
#include "tensorrank/model.hpp"
#include "tensorrank/oracle.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/pipeline.hpp"
#include "tensorrank/random.hpp"

using namespace tensorrank;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kDomain = 1, kConfig = 2 };

std::string fmt(double v, int precision = 10) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// Writes to --out when given, stdout otherwise.
void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw IoError("cannot write " + out);
  os << text;
}

// Expands a JSON config document into flags inserted ahead of the user's
// own flags; every option keeps its last value, so the command line wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      ++i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": config must be a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        flags.push_back(flag);
        flags.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    } else {
      flags.push_back(flag);
      flags.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  // Insert after the subcommand name (first positional token).
  std::size_t at = out.empty() ? 0 : 1;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(std::min(at, out.size())), flags.begin(), flags.end());
  return out;
}

void print_identify_text(const ModelSpec& spec, const DesignMatrix& dm, const IdentifiabilityVerdict& v) {
  std::printf("model: %s, order %zu\n\n", std::string(to_string(spec.topology)).c_str(), spec.order);
  std::printf("%-12s  %s\n", "moment", "log-monomial");
  for (const auto& row : dm.rows) std::printf("%-12s  %s\n", row.name.c_str(), monomial_string(dm.layout, row).c_str());
  std::printf("\nverdict: %s (reduced rank %zu of %zu rank symbols)\n", v.identifiable ? "identifiable" : "not identifiable",
              v.reduced_rank, v.n_rank_symbols);
  std::printf("\nresidual rows after eliminating prior moments:\n");
  for (const auto& w : v.witness) {
    std::string comb;
    for (const auto& [row, coef] : w.combination) {
      if (!comb.empty()) comb += " + ";
      comb += "(" + coef.to_string() + ")*" + dm.rows[row].name;
    }
    std::string res;
    for (const auto& q : w.rank_residual) res += (res.empty() ? "" : ", ") + q.to_string();
    std::printf("  %s -> [%s]\n", comb.c_str(), res.c_str());
  }
  switch (spec.topology) {
    case Topology::CP:
      std::printf("\nestimator: r = v{p,q} * E[Y]^2 / (v{p} * v{q})\n");
      break;
    case Topology::TT: {
      std::printf("\nestimators:\n");
      const std::size_t M = spec.order;
      for (std::size_t p = 1; p < M; ++p) {
        if (p + 2 <= M)
          std::printf("  r_%zu = v{%zu,%zu} * v{%zu} / (v{%zu} * v{%zu,%zu})\n", p, p, p + 1, p + 2, p + 1, p, p + 2);
        else if (M >= 4)
          std::printf("  r_%zu = v{%zu,%zu} * v{%zu} / (v{%zu} * v{%zu,%zu})\n", p, M - 1, M, M - 3, M, M - 3, M - 1);
        else
          std::printf("  r_2 = v{2,3} * v{1} / (v{2} * v{1,3})\n");
      }
      break;
    }
    case Topology::TR: {
      std::printf("\nestimator: xi_p = E[Y]^2 v{p,p+1} / (v{p} v{p+1}); log xi = C log r, solved by DFT\n");
      const auto system = ring_stencil_from_monomials(spec);
      std::string st, ev;
      for (double c : system.stencil) st += (st.empty() ? "" : ", ") + fmt(c);
      for (auto l : system.eigenvalues()) {
        const double im = std::abs(l.imag()) < 1e-12 ? 0.0 : l.imag();
        ev += (ev.empty() ? "" : ", ") + fmt(l.real(), 6) + (im < 0 ? " - " : " + ") + fmt(std::abs(im), 6) + "i";
      }
      std::printf("circulant stencil (coefficient of log r_{p+d}): [%s]\n", st.c_str());
      std::printf("eigenvalues: %s\n", ev.c_str());
      break;
    }
    case Topology::Tucker: {
      std::printf("\nidentity check, log v{p} - log E[Y]^2 versus log v{G,p} - log v{G}:\n");
      for (const auto& r : tucker_identity_check(spec, dm)) {
        std::string res;
        for (std::size_t c = 0; c < r.residual.size(); ++c)
          if (r.residual[c] != 0) res += (res.empty() ? "" : " + ") + std::to_string(r.residual[c]) + "*" + dm.layout.symbols[c].name;
        std::printf("  p=%zu: lhs %s, rhs %s, residual %s\n", r.mode + 1, fmt(r.lhs).c_str(), fmt(r.rhs).c_str(),
                    res.empty() ? "0" : res.c_str());
      }
      break;
    }
  }
}

json identify_json(const ModelSpec& spec, const DesignMatrix& dm, const IdentifiabilityVerdict& v) {
  json j = verdict_json(dm, v);
  j["topology"] = to_string(spec.topology);
  if (spec.topology == Topology::Tucker) {
    json rows = json::array();
    for (const auto& r : tucker_identity_check(spec, dm))
      rows.push_back(json{{"mode", r.mode + 1}, {"residual", r.residual}, {"lhs", r.lhs}, {"rhs", r.rhs}});
    j["tucker_identity"] = rows;
  }
  if (spec.topology == Topology::TR) {
    const auto system = ring_stencil_from_monomials(spec);
    json ev = json::array();
    for (auto l : system.eigenvalues()) ev.push_back(json::array({l.real(), l.imag()}));
    j["circulant"] = {{"stencil", system.stencil}, {"eigenvalues", ev}};
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank identifiability and moment-based rank estimation for probabilistic tensor models"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string model_path, tensor_path, out_path, format, rate_out, topology_name, sets_text, grid_path;
  std::size_t B = 50, pairs = 50000, mc = 10000, block_mode = 1, replicates = 0;
  double alpha = 0.05;
  bool normalize = false, round = false, cp_all_pairs = false, show_samples = false;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_option("--out", out_path, "Output path (stdout when omitted)");
  };

  auto* sim = app.add_subcommand("simulate", "Sample latents, rate and observations from a model spec");
  sim->add_option("--model", model_path, "Model spec JSON")->required();
  sim->add_option("--rate-out", rate_out, "Also write the rate tensor");
  common(sim);
  sim->get_option("--out")->required();

  auto* ident = app.add_subcommand("identify", "Monomial table and rank-identifiability verdict");
  ident->add_option("--model", model_path, "Model spec JSON")->required();
  ident->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  ident->add_option("--seed", seed, "Unused; accepted for uniformity");
  ident->add_option("--threads", threads, "Unused; accepted for uniformity");
  ident->add_option("--out", out_path, "Output path");

  auto* est = app.add_subcommand("estimate", "Bootstrap rank estimation from an observed tensor");
  est->add_option("--tensor", tensor_path, "Observed tensor (.tns text or binary)")->required();
  est->add_option("--topology", topology_name, "CP, TT or TR (or take it from --model)");
  est->add_option("--model", model_path, "Model spec JSON supplying the topology");
  est->add_option("--bootstrap", B, "Bootstrap replicates")->capture_default_str();
  est->add_option("--pairs", pairs, "Pairs per sharing set")->capture_default_str();
  est->add_option("--alpha", alpha, "Percentile interval level")->capture_default_str();
  est->add_option("--block-mode", block_mode, "Mode whose slices are resampled (1-based)")->capture_default_str();
  est->add_flag("--normalize", normalize, "Divide pure terms by the squared mean");
  est->add_flag("--cp-all-pairs", cp_all_pairs, "Average the CP estimate over all mode pairs");
  est->add_flag("--round", round, "Report nearest-integer ranks");
  est->add_flag("--samples", show_samples, "Include replicate estimates in JSON output");
  est->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  common(est);

  auto* orc = app.add_subcommand("oracle", "Analytic monomials against Monte-Carlo population moments");
  orc->add_option("--model", model_path, "Model spec JSON")->required();
  orc->add_option("--sets", sets_text,
                  "Semicolon-separated sharing sets such as \"1;1,2\" (G denotes the Tucker core); "
                  "default: every design-matrix row");
  orc->add_option("--mc", mc, "Monte-Carlo draws")->capture_default_str();
  orc->add_option("--format", format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  common(orc);

  auto* snr = app.add_subcommand("snr", "Theoretical SNR sweep (and optional empirical SNR)");
  snr->add_option("--grid", grid_path, "Grid JSON {orders, sizes, mus, cvs, n}");
  snr->add_option("--model", model_path, "TT model spec for an empirical SNR measurement");
  snr->add_option("--sets", sets_text, "Sharing sets for the empirical measurement");
  snr->add_option("--pairs", pairs, "Pairs per sharing set")->capture_default_str();
  snr->add_option("--replicates", replicates, "Empirical replicates (>= 30)");
  snr->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  common(snr);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }

  try {
    set_max_threads(threads);
    if (format.empty()) format = *est ? "json" : (*snr ? "csv" : "text");

    if (*sim) {
      const auto spec = load_model_spec(model_path);
      const auto latents = sample_latents(spec, derive_seed(seed, {0}));
      const auto rate = build_rate(spec, latents);
      const auto y = sample_observation(rate, spec.obs, derive_seed(seed, {1}));
      write_tensor(y, out_path);
      if (!rate_out.empty()) write_tensor(rate, rate_out);
      double mean = y.mean(), ss = 0.0;
      for (double v : y.values()) ss += (v - mean) * (v - mean);
      json summary{{"dims", y.dims()},
                   {"entries", y.size()},
                   {"mean", mean},
                   {"variance", ss / static_cast<double>(y.size() > 1 ? y.size() - 1 : 1)}};
      std::cout << summary.dump(2) << '\n';
      return kOk;
    }

    if (*ident) {
      const auto spec = load_model_spec(model_path);
      const auto dm = build_design_matrix(spec);
      const auto verdict = rank_identifiability(dm);
      if (format == "json") {
        emit(identify_json(spec, dm, verdict).dump(2) + "\n", out_path);
      } else {
        if (!out_path.empty() && !std::freopen(out_path.c_str(), "w", stdout)) throw IoError("cannot write " + out_path);
        print_identify_text(spec, dm, verdict);
      }
      return kOk;
    }

    if (*est) {
      Topology topology;
      if (!topology_name.empty())
        topology = parse_topology(topology_name);
      else if (!model_path.empty())
        topology = load_model_spec(model_path).topology;
      else
        throw ConfigError("estimate needs --topology or --model");
      const auto y = read_tensor(tensor_path);
      PipelineConfig cfg;
      cfg.B = B;
      cfg.n_pairs = pairs;
      cfg.alpha = alpha;
      cfg.normalize = normalize;
      cfg.block_mode = block_mode;
      cfg.seed = seed;
      cfg.cp_average_pairs = cp_all_pairs;
      const auto result = run_pipeline(y, topology, cfg);
      if (format == "csv") {
        emit(to_csv(result), out_path);
      } else {
        json j = to_json(result, show_samples);
        j["config"] = {{"bootstrap", B}, {"pairs", pairs},         {"alpha", alpha}, {"normalize", normalize},
                       {"block_mode", block_mode}, {"seed", seed}, {"cp_all_pairs", cp_all_pairs}};
        if (round)
          for (std::size_t k = 0; k < result.ranks.size(); ++k)
            j["ranks"][k]["rounded"] = result.ranks[k].available ? json(std::lround(result.ranks[k].median)) : json(nullptr);
        emit(j.dump(2) + "\n", out_path);
      }
      return kOk;
    }

    if (*orc) {
      const auto spec = load_model_spec(model_path);
      std::vector<MomentId> ids;
      if (orc->get_option("--sets")->count() == 0) {
        for (const auto& row : build_design_matrix(spec).rows) ids.push_back(row.moment);
      } else {
        std::stringstream ss(sets_text);
        std::string item;
        while (std::getline(ss, item, ';')) {
          if (item.find_first_not_of(' ') == std::string::npos) continue;
          if (item == "E2" || item == "mean") {
            ids.push_back(MomentId::mean_squared());
            continue;
          }
          std::string modes;
          SharingSet groups;
          for (char c : item) {
            if (c == 'G' || c == 'g') {
              if (spec.topology != Topology::Tucker) throw ConfigError("G names the Tucker core only");
              groups = groups.with(spec.order);
            } else {
              modes += c;
            }
          }
          groups = SharingSet(groups.mask() | SharingSet::parse(modes).mask());
          ids.push_back(MomentId::pure(groups));
        }
      }
      json rows = json::array();
      std::ostringstream text;
      if (format == "csv")
        text << "moment,analytic,mc,se,z\n";
      else
        text << "moment        analytic          mc                se                z\n";
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto mono = analytic_monomial(spec, ids[k]);
        const double analytic = evaluate_monomial(spec, mono);
        const auto mcest = population_pure_term_oracle(spec, ids[k], mc, derive_seed(seed, {k}));
        const double z = mcest.standard_error > 0 ? (mcest.estimate - analytic) / mcest.standard_error : 0.0;
        rows.push_back(json{{"moment", mono.name}, {"analytic", analytic}, {"mc", mcest.estimate}, {"se", mcest.standard_error}, {"z", z}});
        if (format == "csv") {
          text << mono.name << ',' << fmt(analytic, 17) << ',' << fmt(mcest.estimate, 17) << ',' << fmt(mcest.standard_error, 17)
               << ',' << fmt(z, 17) << '\n';
        } else {
          char line[160];
          std::snprintf(line, sizeof line, "%-12s  %-16.8g  %-16.8g  %-16.8g  %+.3f\n", mono.name.c_str(), analytic,
                        mcest.estimate, mcest.standard_error, z);
          text << line;
        }
      }
      emit(format == "json" ? json{{"rows", rows}}.dump(2) + "\n" : text.str(), out_path);
      return kOk;
    }

    if (*snr) {
      SnrGrid grid;
      if (!grid_path.empty()) {
        std::ifstream is(grid_path);
        if (!is) throw IoError("cannot open grid " + grid_path);
        json g;
        try {
          is >> g;
        } catch (const json::exception& e) {
          throw ConfigError(grid_path + ": " + e.what());
        }
        grid.orders = g.value("orders", grid.orders);
        grid.sizes = g.value("sizes", grid.sizes);
        grid.mus = g.value("mus", grid.mus);
        grid.cvs = g.value("cvs", grid.cvs);
        grid.n = g.value("n", grid.n);
      }
      const auto sweep = snr_sweep(grid);
      if (!model_path.empty()) {
        // Empirical measurement for the requested sets instead of the sweep.
        const auto spec = load_model_spec(model_path);
        json emp = json::array();
        std::stringstream ss(sets_text.empty() ? std::string("1") : sets_text);
        std::string item;
        std::size_t k = 0;
        while (std::getline(ss, item, ';')) {
          const auto s = SharingSet::parse(item);
          const double value = empirical_snr(spec, s, pairs, replicates ? replicates : 30, derive_seed(seed, {k++}));
          emp.push_back(json{{"set", s.to_string()}, {"pairs", pairs}, {"snr", value}});
        }
        emit(json{{"empirical", emp}}.dump(2) + "\n", out_path);
        return kOk;
      }
      if (format == "json") {
        json rows = json::array(), best = json::array();
        for (const auto& r : sweep.rows)
          rows.push_back(json{{"M", r.M}, {"size_S", r.size_S}, {"mu", r.mu}, {"cv", r.cv}, {"n", r.n}, {"snr", r.snr}});
        for (const auto& a : sweep.argmax)
          best.push_back(json{{"M", a.M}, {"size_S", a.size_S}, {"mu", a.mu}, {"cv", a.cv}, {"snr", a.snr}});
        emit(json{{"rows", rows}, {"argmax", best}}.dump(2) + "\n", out_path);
      } else {
        emit(to_csv(sweep), out_path);
      }
      return kOk;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kOk;
}
