#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nbspec/detection.hpp"
#include "nbspec/diagnostics.hpp"
#include "nbspec/graph.hpp"
#include "nbspec/io_util.hpp"
#include "nbspec/model.hpp"
#include "nbspec/spectral.hpp"

namespace nbspec {

// Experiment grid across the phase transition. Cells are either an explicit
// (a-list x b-list) cross product or a fixed-sum scan (a_plus_b with a list
// of a_minus_b values).
struct SweepSpec {
  std::vector<std::int64_t> n_list;
  std::vector<std::pair<double, double>> ab_cells;
  WeightLaw law = WeightLaw::unit();
  BalanceMode balance = BalanceMode::ExactHalves;
  int seeds_per_cell = 1;
  std::uint64_t master_seed = 0;
  double tau = 0.0;
  double ell_c = 0.4;
  IterOptions solver;

  void validate() const {
    if (n_list.empty()) throw std::invalid_argument("sweep: no n values");
    if (ab_cells.empty()) throw std::invalid_argument("sweep: no (a,b) cells");
    if (seeds_per_cell < 1) throw std::invalid_argument("sweep: seeds must be >= 1");
    for (const auto& [a, b] : ab_cells) {
      ModelParams p;
      p.n = n_list.front();
      p.a = a;
      p.b = b;
      p.law = law;
      p.validate();
    }
  }

  std::string echo() const {
    std::ostringstream os;
    os << "master_seed=" << master_seed << " seeds=" << seeds_per_cell
       << " weights=" << law.to_string() << " tau=" << fmt_double(tau)
       << " ell_c=" << fmt_double(ell_c)
       << " balance=" << (balance == BalanceMode::ExactHalves ? "exact" : "iid") << " n=";
    for (std::size_t i = 0; i < n_list.size(); ++i) os << (i ? "," : "") << n_list[i];
    os << " cells=";
    for (std::size_t i = 0; i < ab_cells.size(); ++i)
      os << (i ? ";" : "") << fmt_double(ab_cells[i].first) << ":" << fmt_double(ab_cells[i].second);
    return os.str();
  }

  // Plain-text config: `key = value` lines, '#' comments. Keys: n, a, b,
  // a_plus_b, a_minus_b, weights, seeds, master_seed, tau, ell_c, max_iters,
  // tol, balance.
  static SweepSpec parse_config(std::istream& in) {
    SweepSpec spec;
    std::vector<double> a_list, b_list, a_minus_b;
    double a_plus_b = 0.0;
    bool have_sum = false;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos)
        throw std::invalid_argument("sweep config line " + std::to_string(lineno) +
                                    ": expected key = value");
      const std::string key{trim(text.substr(0, eq))};
      const std::string value{trim(text.substr(eq + 1))};
      auto parse_doubles = [&](const std::string& v) {
        std::vector<double> out;
        for (const auto& tok : split(v, ',')) out.push_back(std::stod(std::string(trim(tok))));
        return out;
      };
      try {
        if (key == "n") {
          for (const auto& tok : split(value, ','))
            spec.n_list.push_back(std::stoll(std::string(trim(tok))));
        } else if (key == "a") {
          a_list = parse_doubles(value);
        } else if (key == "b") {
          b_list = parse_doubles(value);
        } else if (key == "a_plus_b") {
          a_plus_b = std::stod(value);
          have_sum = true;
        } else if (key == "a_minus_b") {
          a_minus_b = parse_doubles(value);
        } else if (key == "weights") {
          spec.law = WeightLaw::parse(value);
        } else if (key == "seeds") {
          spec.seeds_per_cell = std::stoi(value);
        } else if (key == "master_seed") {
          spec.master_seed = std::stoull(value);
        } else if (key == "tau") {
          spec.tau = std::stod(value);
        } else if (key == "ell_c") {
          spec.ell_c = std::stod(value);
        } else if (key == "max_iters") {
          spec.solver.max_iters = std::stoi(value);
        } else if (key == "tol") {
          spec.solver.tol = std::stod(value);
        } else if (key == "balance") {
          if (value == "exact")
            spec.balance = BalanceMode::ExactHalves;
          else if (value == "iid")
            spec.balance = BalanceMode::IidUniform;
          else
            throw std::invalid_argument("balance must be 'exact' or 'iid'");
        } else {
          throw std::invalid_argument("unknown key '" + key + "'");
        }
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception& ex) {
        throw std::invalid_argument("sweep config line " + std::to_string(lineno) + ": " +
                                    ex.what());
      }
    }
    if (have_sum) {
      if (a_minus_b.empty())
        throw std::invalid_argument("sweep config: a_plus_b given without a_minus_b");
      for (const double d : a_minus_b)
        spec.ab_cells.emplace_back(0.5 * (a_plus_b + d), 0.5 * (a_plus_b - d));
    } else {
      for (const double a : a_list)
        for (const double b : b_list) spec.ab_cells.emplace_back(a, b);
    }
    spec.validate();
    return spec;
  }
};

// One (cell, seed) measurement; derived fields are recomputable from params.
struct RunRecord {
  std::int64_t n = 0;
  double a = 0.0, b = 0.0;
  double phi2 = 0.0, rho = 0.0, mu2 = 0.0, threshold_ratio = 0.0;
  std::uint64_t seed = 0;  // derived per-run stream seed
  double lambda1 = 0.0, lambda2_mod = 0.0, bulk_radius = 0.0, overlap = 0.0;
  bool tangle_free = false;
  int ell = 0;
  std::int64_t wall_ms = 0;
  bool ok = true;
  std::string error;
};

inline constexpr const char* kSweepCsvHeader =
    "n,a,b,phi2,rho,mu2,threshold_ratio,seed,lambda1,lambda2_mod,bulk_radius,overlap,"
    "tangle_free,ell,wall_ms";

inline RunRecord run_one_cell(const SweepSpec& spec, std::int64_t n, double a, double b,
                              std::uint64_t run_seed) {
  RunRecord rec;
  rec.n = n;
  rec.a = a;
  rec.b = b;
  rec.seed = run_seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ModelParams params;
    params.n = n;
    params.a = a;
    params.b = b;
    params.law = spec.law;
    params.balance = spec.balance;
    params.seed = run_seed;
    const TheoryScalars th = theory(params);
    rec.phi2 = th.phi2;
    rec.rho = th.rho;
    rec.mu2 = th.mu2;
    rec.threshold_ratio = th.threshold_ratio();
    auto [g, report] = sample_graph(params);
    const PracticalEll pe = practical_ell(g, spec.ell_c);
    rec.ell = pe.value;
    const NbOperator op = NbOperator::build(g);
    IterOptions solver = spec.solver;
    solver.seed = derive_seed(run_seed, 1);
    const SpectrumReport sr = top_two_iterative(op, solver);
    rec.lambda1 = sr.lambda1;
    rec.lambda2_mod = sr.lambda2_mod();
    rec.bulk_radius = sr.bulk_radius;
    std::vector<double> scores = vertex_scores(op, sr.xi2);
    scores.resize(g.n, 0.0);
    const Assignment asg = assign(std::move(scores), spec.tau, g.n);
    rec.overlap = overlap(asg.labels, g.spins).value;
    rec.tangle_free = tangle_scan(g, pe.value).is_tangle_free;
  } catch (const std::exception& ex) {
    rec.ok = false;
    rec.error = ex.what();
    rec.lambda1 = rec.lambda2_mod = rec.bulk_radius = rec.overlap =
        std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

inline int sweep_thread_count() {
  if (const char* env = std::getenv("NBSPEC_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs every (n, cell, seed) combination in a worker pool; records are
// gathered in deterministic spec order regardless of completion order, and
// each run's randomness depends only on (master_seed, run index).
inline std::vector<RunRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Job {
    std::int64_t n;
    double a, b;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::uint64_t run_index = 0;
  for (const std::int64_t n : spec.n_list)
    for (const auto& [a, b] : spec.ab_cells)
      for (int s = 0; s < spec.seeds_per_cell; ++s)
        jobs.push_back({n, a, b, derive_seed(spec.master_seed, run_index++)});
  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::min<int>(sweep_thread_count(), static_cast<int>(jobs.size()));
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      records[i] = run_one_cell(spec, jobs[i].n, jobs[i].a, jobs[i].b, jobs[i].seed);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return records;
}

inline void write_sweep_csv(const SweepSpec& spec, const std::vector<RunRecord>& records,
                            std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.n << ',' << fmt_double(r.a) << ',' << fmt_double(r.b) << ',' << fmt_metric(r.phi2)
        << ',' << fmt_metric(r.rho) << ',' << fmt_metric(r.mu2) << ','
        << fmt_metric(r.threshold_ratio) << ',' << r.seed << ',' << fmt_metric(r.lambda1) << ','
        << fmt_metric(r.lambda2_mod) << ',' << fmt_metric(r.bulk_radius) << ','
        << fmt_metric(r.overlap) << ',' << (r.tangle_free ? 1 : 0) << ',' << r.ell << ','
        << r.wall_ms << '\n';
  }
  out << "# " << spec.echo() << '\n';
}

}  // namespace nbspec
