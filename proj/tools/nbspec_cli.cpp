// Command-line front end: generate | spectrum | detect | branching | diagnose | sweep.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbspec/nbspec.hpp"

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

int cmd_generate(const std::string& weights, std::int64_t n, double a, double b,
                 std::uint64_t seed, const std::string& balance, const std::string& out_path,
                 bool emit_json) {
  nbspec::ModelParams params;
  params.n = n;
  params.a = a;
  params.b = b;
  params.law = nbspec::WeightLaw::parse(weights);
  params.seed = seed;
  if (balance == "exact")
    params.balance = nbspec::BalanceMode::ExactHalves;
  else if (balance == "iid")
    params.balance = nbspec::BalanceMode::IidUniform;
  else
    throw CLI::ValidationError("--balance", "must be 'exact' or 'iid'");
  auto [graph, report] = nbspec::sample_graph(params);
  nbspec::write_graph(graph, out_path);
  if (emit_json) {
    const nbspec::TheoryScalars th = nbspec::theory(params);
    json j{{"n", params.n},
           {"a", params.a},
           {"b", params.b},
           {"weights", params.law.to_string()},
           {"seed", params.seed},
           {"balance", balance},
           {"m", report.m},
           {"n_plus", report.n_plus},
           {"n_minus", report.n_minus},
           {"clipped_pairs", report.clipped_pairs},
           {"rho", th.rho},
           {"mu2", th.mu2},
           {"detectable", th.detectable}};
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int cmd_spectrum(const std::string& in_path, bool dense, std::int64_t dense_limit,
                 const std::string& dump_path, int max_iters, double tol, std::uint64_t seed) {
  const nbspec::ColoredGraph g = nbspec::read_graph(in_path);
  const nbspec::NbOperator op = nbspec::NbOperator::build(g);
  nbspec::SpectrumReport rep;
  if (dense) {
    rep = nbspec::dense_spectrum(op, dense_limit, seed);
  } else {
    nbspec::IterOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    opts.seed = seed;
    rep = nbspec::top_two_iterative(op, opts);
  }
  if (!dump_path.empty()) {
    if (!dense) throw std::runtime_error("--dump requires --dense (full spectrum)");
    auto out = open_out(dump_path);
    nbspec::write_spectrum_csv(rep, out);
  }
  json j{{"lambda1", rep.lambda1},
         {"lambda2_mod", rep.lambda2_mod()},
         {"bulk_radius", rep.bulk_radius},
         {"method", nbspec::to_string(rep.method)},
         {"residual1", rep.residual1},
         {"residual2", rep.residual2},
         {"converged", rep.converged},
         {"lambda2_complex", rep.lambda2_complex},
         {"seed", seed}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_detect(const std::string& in_path, double tau, bool tau_median,
               const std::string& out_path, int max_iters, double tol, std::uint64_t seed) {
  const nbspec::ColoredGraph g = nbspec::read_graph(in_path);
  nbspec::DetectConfig config;
  config.tau = tau;
  config.tau_from_median = tau_median;
  config.solver.max_iters = max_iters;
  config.solver.tol = tol;
  config.solver.seed = seed;
  const nbspec::DetectResult result = nbspec::detect(g, config);
  const auto& asg = result.assignment;
  std::ostream* lines = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    lines = &file;
  }
  for (std::size_t v = 0; v < asg.labels.size(); ++v)
    (*lines) << v << ' ' << (asg.labels[v] > 0 ? '+' : '-') << ' '
             << nbspec::fmt_metric(asg.scores[v]) << '\n';
  const nbspec::OverlapScore score = nbspec::overlap(asg.labels, g.spins);
  json j{{"tau", asg.tau},
         {"lambda1", result.spectrum.lambda1},
         {"lambda2_mod", result.spectrum.lambda2_mod()},
         {"overlap_if_truth_given", score.value},
         {"solver_converged", asg.solver_converged},
         {"seed", seed}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_branching(const std::string& mode, double a, double b, const std::string& weights,
                  int depth, int ell, int replicates, std::uint64_t seed,
                  int root_spin, const std::string& root_mode, double root_weight,
                  std::uint64_t budget, const std::string& out_path) {
  nbspec::BpParams params;
  params.a = a;
  params.b = b;
  params.law = nbspec::WeightLaw::parse(weights);
  params.root_spin = root_spin;
  params.root_weight = root_weight;
  if (root_mode == "nu")
    params.root_weight_mode = nbspec::RootWeightMode::FromNu;
  else if (root_mode == "nustar")
    params.root_weight_mode = nbspec::RootWeightMode::FromNuStar;
  else if (root_mode == "fixed")
    params.root_weight_mode = nbspec::RootWeightMode::Fixed;
  else
    throw CLI::ValidationError("--root-weight-mode", "must be nu, nustar or fixed");
  auto out = open_out(out_path);
  if (mode == "zpsi") {
    out << "replicate,t,Zp,Zm,PsiP,PsiM\n";
    for (int r = 0; r < replicates; ++r) {
      const nbspec::BpTree tree =
          nbspec::simulate(params, depth, nbspec::derive_seed(seed, r), budget);
      for (int t = 0; t <= tree.depth(); ++t) {
        const auto [zp, zm] = tree.z(t);
        const auto [pp, pm] = tree.psi(t);
        out << r << ',' << t << ',' << zp << ',' << zm << ',' << nbspec::fmt_metric(pp) << ','
            << nbspec::fmt_metric(pm) << '\n';
      }
    }
  } else if (mode == "q") {
    out << "replicate,Q1,Q2\n";
    const int need = std::max(1, 2 * ell - 1);
    if (depth < need) depth = need;
    for (int r = 0; r < replicates; ++r) {
      const nbspec::BpTree tree =
          nbspec::simulate(params, depth, nbspec::derive_seed(seed, r), budget);
      if (tree.truncated) {
        out << r << ",nan,nan\n";
        continue;
      }
      const auto [q1, q2] = nbspec::q_functional(tree, ell);
      out << r << ',' << nbspec::fmt_metric(q1) << ',' << nbspec::fmt_metric(q2) << '\n';
    }
  } else {
    throw CLI::ValidationError("--mode", "must be 'zpsi' or 'q'");
  }
  out << "# master_seed=" << seed << " a=" << nbspec::fmt_double(a)
      << " b=" << nbspec::fmt_double(b) << " weights=" << params.law.to_string()
      << " mode=" << mode << " depth=" << depth << " ell=" << ell
      << " replicates=" << replicates << '\n';
  return 0;
}

int cmd_diagnose(const std::string& in_path, int radius, int ell, const std::string& out_path) {
  const nbspec::ColoredGraph g = nbspec::read_graph(in_path);
  const nbspec::NbOperator op = nbspec::NbOperator::build(g);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << "edge,t,Yp,Ym,PsiP,PsiM,S,is_tree\n";
    for (std::int64_t e = 0; e < op.dim(); ++e) {
      const auto stats = nbspec::edge_ball(g, op, static_cast<std::uint32_t>(e), radius);
      for (int t = 0; t <= radius; ++t)
        out << e << ',' << t << ',' << stats.y[t][0] << ',' << stats.y[t][1] << ','
            << nbspec::fmt_metric(stats.psi[t][0]) << ',' << nbspec::fmt_metric(stats.psi[t][1])
            << ',' << stats.s[t] << ',' << (stats.is_tree ? 1 : 0) << '\n';
    }
  }
  const nbspec::TangleReport tangle = nbspec::tangle_scan(g, ell);
  json j{{"radius", tangle.radius},
         {"vertices_with_cycle", tangle.vertices_with_cycle},
         {"is_tangle_free", tangle.is_tangle_free}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path) {
  std::ifstream cfg(config_path);
  if (!cfg) throw std::runtime_error("cannot open '" + config_path + "'");
  const nbspec::SweepSpec spec = nbspec::SweepSpec::parse_config(cfg);
  const auto records = nbspec::run_sweep(spec);
  auto out = open_out(out_path);
  nbspec::write_sweep_csv(spec, records, out);
  std::int64_t failures = 0;
  for (const auto& r : records)
    if (!r.ok) ++failures;
  std::cerr << records.size() << " runs, " << failures << " flagged\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-backtracking spectra of degree-corrected stochastic block models"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a DC-SBM graph and write it to a file");
  std::int64_t gen_n = 1000;
  double gen_a = 5.0, gen_b = 1.0;
  std::string gen_weights = "1:1", gen_balance = "exact", gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_json = false;
  gen->add_option("--n", gen_n, "vertex count")->required();
  gen->add_option("--a", gen_a, "intra-cluster rate")->required();
  gen->add_option("--b", gen_b, "inter-cluster rate")->required();
  gen->add_option("--weights", gen_weights, "weight law, e.g. 0.5:0.5,1.5:0.5");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--balance", gen_balance, "exact | iid");
  gen->add_option("--out", gen_out, "output graph file")->required();
  gen->add_flag("--json", gen_json, "print a JSON generation report");

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "Top eigenvalues of the non-backtracking matrix");
  std::string spec_in, spec_dump;
  bool spec_dense = false;
  std::int64_t spec_dense_limit = 6000;
  int spec_iters = 4000;
  double spec_tol = 1e-9;
  std::uint64_t spec_seed = 0x5eed;
  spec->add_option("--in", spec_in, "input graph file")->required();
  spec->add_flag("--dense", spec_dense, "full dense spectrum (QR oracle)");
  spec->add_option("--dense-limit", spec_dense_limit, "max 2m for dense mode");
  spec->add_option("--dump", spec_dump, "write eigenvalue CSV here (dense mode)");
  spec->add_option("--max-iters", spec_iters, "iterative solver cap");
  spec->add_option("--tol", spec_tol, "iterative residual tolerance");
  spec->add_option("--seed", spec_seed, "solver seed");

  // detect
  auto* det = app.add_subcommand("detect", "Blind two-community detection from xi2");
  std::string det_in, det_out;
  double det_tau = 0.0;
  bool det_median = false;
  int det_iters = 4000;
  double det_tol = 1e-9;
  std::uint64_t det_seed = 0x5eed;
  det->add_option("--in", det_in, "input graph file")->required();
  det->add_option("--tau", det_tau, "threshold tau (score cutoff is tau/sqrt(n))");
  det->add_flag("--tau-median", det_median, "use the median score as threshold");
  det->add_option("--out", det_out, "write per-vertex 'id label score' lines here");
  det->add_option("--max-iters", det_iters, "solver cap");
  det->add_option("--tol", det_tol, "solver residual tolerance");
  det->add_option("--seed", det_seed, "solver seed");

  // branching
  auto* bp = app.add_subcommand("branching", "Simulate the two-type branching process");
  std::string bp_mode = "zpsi", bp_weights = "1:1", bp_root_mode = "nu", bp_out;
  double bp_a = 5.0, bp_b = 1.0, bp_root_weight = 1.0;
  int bp_depth = 5, bp_ell = 2, bp_replicates = 1000, bp_root_spin = 1;
  std::uint64_t bp_seed = 0, bp_budget = 1'000'000;
  bp->add_option("--mode", bp_mode, "zpsi (per-generation table) | q (Q functionals)");
  bp->add_option("--a", bp_a, "intra rate")->required();
  bp->add_option("--b", bp_b, "inter rate")->required();
  bp->add_option("--weights", bp_weights, "weight law");
  bp->add_option("--depth", bp_depth, "generations to simulate");
  bp->add_option("--ell", bp_ell, "ell for mode q");
  bp->add_option("--replicates", bp_replicates, "number of trees");
  bp->add_option("--seed", bp_seed, "master seed");
  bp->add_option("--root-spin", bp_root_spin, "+1 or -1");
  bp->add_option("--root-weight-mode", bp_root_mode, "nu | nustar | fixed");
  bp->add_option("--root-weight", bp_root_weight, "weight for fixed mode");
  bp->add_option("--budget", bp_budget, "particle budget per tree");
  bp->add_option("--out", bp_out, "output CSV")->required();

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Edge-ball statistics and tangle report");
  std::string diag_in, diag_out;
  int diag_radius = 2, diag_ell = 2;
  diag->add_option("--in", diag_in, "input graph file")->required();
  diag->add_option("--radius", diag_radius, "radius cap for the per-edge CSV");
  diag->add_option("--ell", diag_ell, "tangle-scan radius");
  diag->add_option("--out", diag_out, "per-edge CSV path (omit to skip)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run an experiment sweep from a config file");
  std::string sw_config, sw_out;
  sw->add_option("--config", sw_config, "config file (key = value lines)")->required();
  sw->add_option("--out", sw_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_weights, gen_n, gen_a, gen_b, gen_seed, gen_balance, gen_out,
                          gen_json);
    if (spec->parsed())
      return cmd_spectrum(spec_in, spec_dense, spec_dense_limit, spec_dump, spec_iters, spec_tol,
                          spec_seed);
    if (det->parsed())
      return cmd_detect(det_in, det_tau, det_median, det_out, det_iters, det_tol, det_seed);
    if (bp->parsed())
      return cmd_branching(bp_mode, bp_a, bp_b, bp_weights, bp_depth, bp_ell, bp_replicates,
                           bp_seed, bp_root_spin, bp_root_mode, bp_root_weight, bp_budget, bp_out);
    if (diag->parsed()) return cmd_diagnose(diag_in, diag_radius, diag_ell, diag_out);
    if (sw->parsed()) return cmd_sweep(sw_config, sw_out);
  } catch (const CLI::ValidationError& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}
