// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
// Usage: ttnmf_acceptance [--expect-red N[,N...]] [--report FILE]
// Exits non-zero when a criterion fails that is not listed as expected red,
// or when a listed one unexpectedly passes. Listed criteria still print FAIL.

#include "test_support.hpp"
#include "ttnmf/csv_io.hpp"
#include "ttnmf/estimator.hpp"
#include "ttnmf/factor_core.hpp"
#include "ttnmf/metrics.hpp"
#include "ttnmf/net_model.hpp"
#include "ttnmf/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#ifndef TTNMF_CLI_PATH
#define TTNMF_CLI_PATH ""
#endif

namespace fs = std::filesystem;
using namespace ttnmf;
using ttnmf::testing::random_binary;
using ttnmf::testing::random_nonneg;

namespace {

// Frozen from the reference run of the planted scenario below: measured
// mean test TRE 0.0771, rounded up. Tighter than the 0.25 ceiling.
constexpr double kPlantedTreBound = 0.08;

constexpr std::uint64_t kPlantedSeed = 2024;
constexpr int kPlantedTrain = 300;
constexpr int kPlantedTest = 100;

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Verdict::pass : Verdict::fail, std::move(detail)};
}

TrainConfig planted_config(double beta) {
  TrainConfig c;
  c.rank = 4;
  c.lags = LagSet({1, 2});
  c.beta_h = beta;
  c.beta_a = beta;
  c.q_max = 50;
  return c;
}

SyntheticScenario planted_scenario(std::uint64_t seed, double missing = 0.0) {
  SynthOptions opt;
  opt.missing_fraction = missing;
  return generate_synthetic(6, 4, kPlantedTrain + kPlantedTest, LagSet({1, 2}), 0.0, seed, opt);
}

struct HoldoutResult {
  double mean_tre = 0.0;
  double mean_sre = 0.0;
  std::size_t outer_iterations = 0;
};

HoldoutResult train_and_test(const SyntheticScenario& s, const TrainConfig& config) {
  const auto [train_part, test_part] = split_train_test(s.traffic, kPlantedTrain);
  const auto [model, report] = train(train_part, s.routing, config);
  const LinkFlowMatrix y = compute_link_flows(s.routing, TrafficMatrix(test_part.entries()));
  const Matrix x_hat = estimate_window(y, model, s.routing, EstimatorConfig{});
  HoldoutResult r;
  r.mean_tre = summary_stats(tre(test_part.entries(), x_hat)).mean;
  r.mean_sre = summary_stats(sre(test_part.entries(), x_hat)).mean;
  r.outer_iterations = report.objective_trace.size() - 1;
  return r;
}

// 1 -------------------------------------------------------------------------
Outcome regularizer_forms() {
  Timer timer;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> k_dist(1, 3), t_dist(8, 30), count_dist(1, 3), lag_dist(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = k_dist(rng);
    const int t = t_dist(rng);
    std::vector<int> raw;
    const int count = count_dist(rng);
    while (static_cast<int>(raw.size()) < count) {
      const int l = lag_dist(rng);
      if (std::find(raw.begin(), raw.end(), l) == raw.end()) raw.push_back(l);
    }
    const LagSet lags(raw);
    const Matrix h = random_nonneg(k, t, rng);
    const Matrix omega = random_nonneg(k, count, rng, 0.6);
    worst = std::max(worst, ttnmf::testing::relative_gap(
                                temporal_penalty_value(h, omega, lags, PenaltyForm::residual),
                                temporal_penalty_value(h, omega, lags, PenaltyForm::laplacian)));
  }
  const double secs = timer.seconds();
  return verdict(worst <= 1e-8 && secs < 5.0,
                 fmt::format("max relative gap {:.3e} (<= 1e-8), {:.2f} s (< 5 s)", worst, secs));
}

// 2 -------------------------------------------------------------------------
Outcome gradient_check() {
  Timer timer;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const RoutingMatrix a(random_binary(7, 8, rng));
    const LagSet lags({1, 3});
    const Matrix x = random_nonneg(8, 12, rng, 3.0);
    const FactorModel base(Matrix(random_nonneg(8, 3, rng).array() + 0.1),
                           Matrix(random_nonneg(3, 12, rng).array() + 0.1),
                           Matrix(random_nonneg(3, 2, rng, 0.5).array() + 0.1), lags, a);
    const RegularizationWeights rw{0.8, 0.05, 0, 0};
    for (Block b : {Block::w, Block::h, Block::omega}) {
      const Matrix& v0 = b == Block::w ? base.w() : b == Block::h ? base.h() : base.omega();
      auto f = [&](const Matrix& v) {
        FactorModel m = base;
        if (b == Block::w) m.set_w(v, a);
        if (b == Block::h) m.set_h(v);
        if (b == Block::omega) m.set_omega(v);
        return objective_value(x, m, rw, a);
      };
      Matrix numeric(v0.rows(), v0.cols());
      for (Eigen::Index c = 0; c < v0.cols(); ++c)
        for (Eigen::Index r = 0; r < v0.rows(); ++r) {
          Matrix p = v0, m = v0;
          p(r, c) += 1e-6;
          m(r, c) -= 1e-6;
          numeric(r, c) = (f(p) - f(m)) / 2e-6;
        }
      const Matrix analytic = block_gradient(b, x, base, rw, a);
      worst = std::max(worst, (analytic - numeric).norm() / numeric.norm());
    }
  }
  const double secs = timer.seconds();
  return verdict(worst <= 1e-5 && secs < 10.0,
                 fmt::format("max relative error {:.3e} (<= 1e-5), {:.2f} s (< 10 s)", worst, secs));
}

// 3 -------------------------------------------------------------------------
Outcome monotonicity() {
  Timer timer;
  const SyntheticScenario s = generate_synthetic(6, 4, 300, LagSet({1, 2}), 0.05, 3);
  TrainConfig c = planted_config(0.2);
  const auto [model, report] = train(s.traffic, s.routing, c);
  auto largest_rise = [](const std::vector<double>& trace) {
    double rise = 0.0;
    for (std::size_t q = 1; q < trace.size(); ++q) rise = std::max(rise, trace[q] - trace[q - 1]);
    return rise;
  };
  const double fit_rise = largest_rise(report.objective_trace);
  const double objective_rise = largest_rise(report.full_objective_trace);
  const double secs = timer.seconds();
  return verdict(fit_rise <= 1e-12 && secs < 30.0,
                 fmt::format("{} outer iterations, largest rise of e(q) {:.3e} (<= 1e-12); "
                             "full objective largest rise {:.3e}; {:.2f} s (< 30 s)",
                             report.objective_trace.size() - 1, fit_rise, objective_rise, secs));
}

// 4 -------------------------------------------------------------------------
Outcome planted_recovery(double& full_tre) {
  Timer timer;
  const HoldoutResult r = train_and_test(planted_scenario(kPlantedSeed), planted_config(0.2));
  full_tre = r.mean_tre;
  const double secs = timer.seconds();
  return verdict(r.mean_tre <= kPlantedTreBound && secs < 60.0,
                 fmt::format("mean test TRE {:.4f} (<= {:.4f}), {:.2f} s (< 60 s)", r.mean_tre,
                             kPlantedTreBound, secs));
}

// 5 -------------------------------------------------------------------------
Outcome em_fixed_point() {
  std::mt19937_64 rng(5);
  EstimatorConfig one;
  one.r_max_em = 1;
  double worst_change = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const RoutingMatrix a(random_binary(6, 9, rng));
    const Vector x0 = Vector(random_nonneg(9, 1, rng)).array() + 0.05;
    const Vector x1 = refine_em(x0, a.entries() * x0, a, one);
    worst_change = std::max(worst_change, (x1 - x0).norm() / x0.norm());
  }
  double most_negative = 0.0;
  const RoutingMatrix a(random_binary(8, 12, rng));
  const FactorModel m(random_nonneg(12, 3, rng), Matrix::Zero(3, 4), Matrix::Zero(3, 1),
                      LagSet({1}), a);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = estimate_od_flow(random_nonneg(8, 1, rng, 10.0), m, a, EstimatorConfig{});
    most_negative = std::min(most_negative, x.minCoeff());
  }
  return verdict(worst_change < 1e-12 && most_negative >= 0.0,
                 fmt::format("max relative change {:.3e} (< 1e-12), min estimate {:.3e} (>= 0)",
                             worst_change, most_negative));
}

// 6 -------------------------------------------------------------------------
Outcome missing_entries(double full_tre) {
  const SyntheticScenario s = planted_scenario(kPlantedSeed, 0.2);
  std::string detail;
  bool ok = true;
  for (MissingMode mode : {MissingMode::em_mask, MissingMode::weighted_fill}) {
    TrainConfig c = planted_config(0.2);
    c.missing_mode = mode;
    const HoldoutResult r = train_and_test(s, c);
    const double degradation = full_tre > 0.0 ? (r.mean_tre - full_tre) / full_tre : 0.0;
    ok = ok && degradation <= 0.5;
    detail += fmt::format("{} TRE {:.4f} ({:+.1f}%), ", to_string(mode), r.mean_tre, 100.0 * degradation);
  }
  return verdict(ok, detail + fmt::format("full-data TRE {:.4f}, limit +50%", full_tre));
}

// 7 -------------------------------------------------------------------------
Outcome ablation() {
  double with = 0.0, without = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticScenario s = planted_scenario(700 + seed);
    with += train_and_test(s, planted_config(0.5)).mean_sre / 5.0;
    without += train_and_test(s, planted_config(0.0)).mean_sre / 5.0;
  }
  return verdict(with <= without, fmt::format("mean SRE beta=0.5: {:.4f}, beta=0: {:.4f}", with, without));
}

// 8 -------------------------------------------------------------------------
Outcome dataset_reproduction() {
  const char* dir = std::getenv("TTNMF_INTERNET2_DIR");
  if (dir == nullptr || !fs::exists(fs::path(dir) / "routing.csv") ||
      !fs::exists(fs::path(dir) / "traffic.csv"))
    return {Verdict::skip, "set TTNMF_INTERNET2_DIR to a directory with routing.csv and traffic.csv"};
  const RoutingMatrix a(load_matrix_csv(fs::path(dir) / "routing.csv", MatrixKind::routing));
  const TrafficMatrix x(load_matrix_csv(fs::path(dir) / "traffic.csv", MatrixKind::traffic));
  const auto [train_part, test_part] = split_train_test(x, 2016);
  TrainConfig c;
  c.lags = internet2_lags();
  const auto [model, report] = train(train_part, a, c);
  const Matrix x_hat =
      estimate_window(compute_link_flows(a, TrafficMatrix(test_part.entries())), model, a, EstimatorConfig{});
  const double mtre = summary_stats(tre(test_part.entries(), x_hat)).mean;
  const double msre = summary_stats(sre(test_part.entries(), x_hat)).mean;
  return verdict(std::abs(mtre - 0.18) <= 0.05 && std::abs(msre - 0.39) <= 0.10,
                 fmt::format("mean TRE {:.4f} (0.18 +- 0.05), mean SRE {:.4f} (0.39 +- 0.10)", mtre, msre));
}

// 9 -------------------------------------------------------------------------
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// trace.csv without its wall-clock column.
std::string trace_without_time(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

int run(const std::string& cli, const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} > /dev/null 2>&1", cli, args);
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

Outcome cli_round_trip() {
  const std::string cli = TTNMF_CLI_PATH;
  if (cli.empty() || !fs::exists(cli)) return {Verdict::fail, "CLI binary not built"};
  const fs::path root = fs::absolute("acceptance_cli");
  fs::remove_all(root);

  const std::vector<std::string> reports = {"traffic.csv", "routing.csv", "linkflows.csv",
                                            "model.ttnmf", "estimate.csv", "sre.csv",
                                            "tre.csv", "stats.csv", "cdf_sre.csv", "cdf_tre.csv"};
  auto pipeline = [&](const fs::path& d) -> std::string {
    const std::string q = "\"" + d.string() + "\"";
    const std::string dd = d.string();
    if (int rc = run(cli, fmt::format("synth --seed 42 --routers 6 --rank 4 --timestamps 400 "
                                      "--lags 1,2 --noise 0.02 --train-t 300 --out {}", q)))
      return fmt::format("synth exit {}", rc);
    if (int rc = run(cli, fmt::format("train --routing {0}/routing.csv --traffic {0}/traffic_train.csv "
                                      "--rank 4 --lags 1,2 --q-max 20 --out {0}", q)))
      return fmt::format("train exit {}", rc);
    if (int rc = run(cli, fmt::format("estimate --model {0}/model.ttnmf --linkflows "
                                      "{0}/linkflows_test.csv --out {0}", q)))
      return fmt::format("estimate exit {}", rc);
    if (int rc = run(cli, fmt::format("evaluate --truth {0}/traffic_test.csv --estimate "
                                      "{0}/estimate.csv --out {0}", q)))
      return fmt::format("evaluate exit {}", rc);
    if (int rc = run(cli, fmt::format("evaluate --truth {0}/traffic_test.csv --estimate "
                                      "{0}/traffic_test.csv --out {0}/self", q)))
      return fmt::format("self-evaluate exit {}", rc);
    for (const auto& f : reports)
      if (!fs::exists(fs::path(dd) / f)) return "missing " + f;
    if (!fs::exists(fs::path(dd) / "trace.csv")) return "missing trace.csv";
    return {};
  };

  if (std::string err = pipeline(root / "run1"); !err.empty()) return {Verdict::fail, err};
  if (std::string err = pipeline(root / "run2"); !err.empty()) return {Verdict::fail, "rerun: " + err};

  // Self-evaluation must give all-zero error vectors.
  for (const char* f : {"sre.csv", "tre.csv"}) {
    std::istringstream in(read_file(root / "run1" / "self" / f));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const double v = std::stod(line.substr(line.find(',') + 1));
      if (v != 0.0) return {Verdict::fail, fmt::format("self-evaluation {} has nonzero entry {}", f, v)};
    }
  }

  for (const auto& f : reports)
    if (read_file(root / "run1" / f) != read_file(root / "run2" / f))
      return {Verdict::fail, f + " differs between reruns"};
  if (trace_without_time(root / "run1" / "trace.csv") != trace_without_time(root / "run2" / "trace.csv"))
    return {Verdict::fail, "trace.csv objective values differ between reruns"};

  // Mismatched link count must exit with the data-validation code.
  write_matrix_csv(root / "bad_links.csv", Matrix::Ones(3, 2));
  const int rc = run(cli, fmt::format("estimate --model \"{0}/run1/model.ttnmf\" --linkflows "
                                      "\"{0}/bad_links.csv\" --out \"{0}/bad\"",
                                      root.string()));
  if (rc != 2) return {Verdict::fail, fmt::format("mismatched estimate exited {} instead of 2", rc)};
  return {Verdict::pass, "all stages exit 0, reports present, self-evaluation zero, reruns identical"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> expected_red;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-red" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) expected_red.push_back(std::stoi(item));
    } else if (arg == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else {
      fmt::print(stderr, "usage: ttnmf_acceptance [--expect-red N[,N...]] [--report FILE]\n");
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  double full_tre = 0.0;
  const std::vector<Criterion> criteria = {
      {1, "regularizer-form equivalence", regularizer_forms},
      {2, "gradient correctness", gradient_check},
      {3, "training monotonicity", monotonicity},
      {4, "planted recovery", [&] { return planted_recovery(full_tre); }},
      {5, "EM fixed point and nonnegativity", em_fixed_point},
      {6, "missing-entry robustness", [&] { return missing_entries(full_tre); }},
      {7, "ablation direction", ablation},
      {8, "Internet2 reproduction", dataset_reproduction},
      {9, "CLI round trip", cli_round_trip},
  };

  int failures = 0;
  int unexpected = 0;
  std::string report;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    const bool listed = std::find(expected_red.begin(), expected_red.end(), c.id) != expected_red.end();
    if (o.verdict == Verdict::fail) ++failures;
    if ((o.verdict == Verdict::fail) != listed && o.verdict != Verdict::skip) ++unexpected;
    const std::string line = fmt::format("{} [{}] {}: {}{}\n", tag, c.id, c.name, o.detail,
                                         listed ? " (expected red)" : "");
    fmt::print("{}", line);
    std::fflush(stdout);
    report += line;
  }
  const std::string summary =
      fmt::format("{} criteria, {} failed, {} unexpected\n", criteria.size(), failures, unexpected);
  fmt::print("{}", summary);
  if (!report_path.empty()) std::ofstream(report_path) << report << summary;
  return unexpected == 0 ? 0 : 1;
}
