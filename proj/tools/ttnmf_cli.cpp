// ttnmf: synth -> train -> estimate -> evaluate workflow for OD-flow
// estimation from link loads.
//
// Exit codes: 0 success, 1 usage/config error, 2 data validation error,
// 3 numerical failure.

#include "ttnmf/archive.hpp"
#include "ttnmf/csv_io.hpp"
#include "ttnmf/errors.hpp"
#include "ttnmf/estimator.hpp"
#include "ttnmf/log.hpp"
#include "ttnmf/metrics.hpp"
#include "ttnmf/net_model.hpp"
#include "ttnmf/run_config.hpp"
#include "ttnmf/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

constexpr const char* kOrientation =
    "Matrices are header-less row-major CSV: routing.csv is links x OD pairs of {0,1}, "
    "traffic.csv is OD pairs x timestamps (>= 0), mask.csv matches traffic with 1 = observed, "
    "linkflows.csv is links x timestamps (>= 0). '#' starts a comment line.";

struct SynthArgs {
  int routers = 6;
  int rank = 4;
  int timestamps = 400;
  std::vector<int> lags = {1, 2};
  double noise = 0.0;
  std::uint64_t seed = 42;
  double missing = 0.0;
  long train_t = 0;
  std::string out = ".";
};

struct TrainArgs {
  std::string routing;
  std::string traffic;
  std::string mask;
  std::string profile = "none";
  int rank = 20;
  std::vector<int> lags;
  double beta_h = 0.2;
  double beta_a = 0.2;
  std::string missing_mode = "none";
  std::string restart_test = "objective";
  int q_max = 50;
  long train_t = 0;
  std::string out = ".";
};

struct EstimateArgs {
  std::string model;
  std::string linkflows;
  int gd_max = 200;
  int em_max = 200;
  double delta_gd = 1e-3;
  double delta_em = 1e-9;
  std::string out = ".";
};

struct EvaluateArgs {
  std::string truth;
  std::string estimate;
  std::string out = ".";
};

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ttnmf::ConfigError(fmt::format("cannot create output directory '{}'", dir));
  return p;
}

void run_synth(const SynthArgs& a) {
  using namespace ttnmf;
  SynthOptions options;
  options.missing_fraction = a.missing;
  const SyntheticScenario s = generate_synthetic(a.routers, a.rank, a.timestamps,
                                                 LagSet(a.lags), a.noise, a.seed, options);
  const fs::path out = ensure_dir(a.out);
  write_matrix_csv(out / "routing.csv", s.routing.entries());
  write_matrix_csv(out / "traffic.csv", s.traffic.entries());
  const LinkFlowMatrix y = compute_link_flows(s.routing, s.traffic);
  write_matrix_csv(out / "linkflows.csv", y.entries());
  if (s.traffic.mask()) write_matrix_csv(out / "mask.csv", *s.traffic.mask());
  if (a.train_t > 0) {
    const auto [train, test] = split_train_test(s.traffic, a.train_t);
    write_matrix_csv(out / "traffic_train.csv", train.entries());
    write_matrix_csv(out / "traffic_test.csv", test.entries());
    write_matrix_csv(out / "linkflows_test.csv",
                     compute_link_flows(s.routing, TrafficMatrix(test.entries())).entries());
    if (train.mask()) write_matrix_csv(out / "mask_train.csv", *train.mask());
  }
}

void run_train(const TrainArgs& a, const CLI::App& cmd) {
  using namespace ttnmf;
  RunConfig rc;
  rc.routing = a.routing;
  rc.traffic = a.traffic;
  if (!a.mask.empty()) rc.mask = fs::path(a.mask);
  rc.output_dir = a.out;

  // Profile first, then anything given explicitly on the command line or in
  // the config file.
  apply_profile(parse_profile(a.profile), rc.train, rc.train_t);
  auto given = [&cmd](const char* name) { return cmd.get_option(name)->count() > 0; };
  if (given("--rank") || a.profile == "none") rc.train.rank = a.rank;
  if (given("--lags")) rc.train.lags = LagSet(a.lags);
  if (given("--beta-h") || a.profile == "none") rc.train.beta_h = a.beta_h;
  if (given("--beta-a") || a.profile == "none") rc.train.beta_a = a.beta_a;
  if (given("--train-t")) rc.train_t = a.train_t;
  rc.train.q_max = a.q_max;
  rc.train.missing_mode = parse_missing_mode(a.missing_mode);
  rc.train.restart_test = parse_restart_test(a.restart_test);
  rc.require_inputs(true, true);

  const RoutingMatrix routing(load_matrix_csv(rc.routing, MatrixKind::routing));
  Matrix x = load_matrix_csv(rc.traffic, MatrixKind::any);
  std::optional<Matrix> mask;
  if (rc.mask) mask = load_matrix_csv(*rc.mask, MatrixKind::mask);
  if (rc.train_t > 0) {
    if (rc.train_t > x.cols())
      throw ConfigError(fmt::format("training length {} exceeds the {} available columns",
                                    rc.train_t, x.cols()));
    x = x.leftCols(rc.train_t).eval();
    if (mask) mask = mask->leftCols(rc.train_t).eval();
  }
  const TrafficMatrix traffic(x, mask);
  if (routing.od_pairs() != traffic.od_pairs())
    throw ShapeError(fmt::format("routing has {} OD pairs but traffic has {} rows",
                                 routing.od_pairs(), traffic.od_pairs()));

  auto [model, report] = train(traffic, routing, rc.train);

  ModelArchive archive;
  archive.model = model;
  archive.routing = routing;
  archive.weights = report.weights;
  archive.config_hash = config_hash(rc.train);
  archive.traffic_checksum = matrix_checksum(traffic.entries());
  archive.routing_checksum = matrix_checksum(routing.entries());

  const fs::path out = ensure_dir(a.out);
  save_archive(out / "model.ttnmf", archive);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t q = 0; q < report.objective_trace.size(); ++q)
    rows.push_back({std::to_string(q), format_double(report.objective_trace[q]),
                    fmt::format("{:.3f}", report.wall_ms[q])});
  write_table_csv(out / "trace.csv", {"q", "e_q", "wall_ms"}, rows);
}

void run_estimate(const EstimateArgs& a) {
  using namespace ttnmf;
  if (!fs::exists(a.model)) throw ConfigError(fmt::format("model '{}' does not exist", a.model));
  if (!fs::exists(a.linkflows))
    throw ConfigError(fmt::format("link-flow file '{}' does not exist", a.linkflows));
  const ModelArchive archive = load_archive(a.model);
  const LinkFlowMatrix y(load_matrix_csv(a.linkflows, MatrixKind::link));
  if (y.links() != archive.routing.links())
    throw ShapeError(fmt::format("link-flow file has {} links but the model was trained with {}",
                                 y.links(), archive.routing.links()));
  EstimatorConfig cfg;
  cfg.q_max_gd = a.gd_max;
  cfg.r_max_em = a.em_max;
  cfg.delta_gd = a.delta_gd;
  cfg.delta_em = a.delta_em;
  cfg.validate();
  const Matrix x_hat = estimate_window(y, archive.model, archive.routing, cfg);
  const fs::path out = ensure_dir(a.out);
  write_matrix_csv(out / "estimate.csv", x_hat);
}

void write_errors(const fs::path& path, const char* index_name, const char* value_name,
                  const ttnmf::ErrorVector& e) {
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    rows.push_back({std::to_string(i + 1), ttnmf::format_double(e.values(i))});
  ttnmf::write_table_csv(path, {index_name, value_name}, rows);
}

void write_cdf(const fs::path& path, const ttnmf::ErrorVector& e) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [value, fraction] : ttnmf::cdf_points(e))
    rows.push_back({ttnmf::format_double(value), ttnmf::format_double(fraction)});
  ttnmf::write_table_csv(path, {"value", "fraction"}, rows);
}

void run_evaluate(const EvaluateArgs& a) {
  using namespace ttnmf;
  const Matrix truth = load_matrix_csv(a.truth, MatrixKind::traffic);
  const Matrix est = load_matrix_csv(a.estimate, MatrixKind::traffic);
  const ErrorVector s = sre(truth, est);
  const ErrorVector t = tre(truth, est);
  const SummaryStats ss = summary_stats(s);
  const SummaryStats ts = summary_stats(t);
  if (ss.excluded > 0) logger().warn("{} all-zero OD flow(s) excluded from SRE statistics", ss.excluded);
  if (ts.excluded > 0) logger().warn("{} all-zero timestamp(s) excluded from TRE statistics", ts.excluded);

  const fs::path out = ensure_dir(a.out);
  write_errors(out / "sre.csv", "od_pair", "sre", s);
  write_errors(out / "tre.csv", "timestamp", "tre", t);
  write_table_csv(out / "stats.csv", {"statistic", "sre", "tre"},
                  {{"min", format_double(ss.min), format_double(ts.min)},
                   {"max", format_double(ss.max), format_double(ts.max)},
                   {"mean", format_double(ss.mean), format_double(ts.mean)},
                   {"median", format_double(ss.median), format_double(ts.median)},
                   {"std", format_double(ss.std), format_double(ts.std)}});
  write_cdf(out / "cdf_sre.csv", s);
  write_cdf(out / "cdf_tre.csv", t);
}

// Flat key=value config files: keys without a section belong to the
// subcommand being run.
class FlatConfig : public CLI::ConfigINI {
 public:
  explicit FlatConfig(std::string section) : section_(std::move(section)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(input);
    if (!section_.empty())
      for (auto& item : items)
        if (item.parents.empty()) item.parents = {section_};
    return items;
  }

 private:
  std::string section_;
};

std::string find_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "synth" || arg == "train" || arg == "estimate" || arg == "evaluate") return arg;
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic-matrix estimation with spatiotemporal nonnegative matrix factorization"};
  app.footer(kOrientation);
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<FlatConfig>(find_subcommand(argc, argv)));
  app.set_config("--config", "", "Flat key=value file; keys are option names without dashes");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded planted scenario");
  synth_cmd->add_option("--routers", synth.routers, "Router count")->capture_default_str();
  synth_cmd->add_option("--rank", synth.rank, "Planted rank")->capture_default_str();
  synth_cmd->add_option("--timestamps", synth.timestamps, "Number of timestamps")->capture_default_str();
  synth_cmd->add_option("--lags", synth.lags, "Planted lag set, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Relative multiplicative noise level")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--missing", synth.missing, "Fraction of unobserved entries (writes mask.csv)")
      ->capture_default_str();
  synth_cmd->add_option("--train-t", synth.train_t, "Also write a train/test split at this column");
  synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write model.ttnmf + trace.csv");
  train_cmd->add_option("--routing", tr.routing, "routing.csv (links x OD pairs)");
  train_cmd->add_option("--traffic", tr.traffic, "traffic.csv (OD pairs x timestamps)");
  train_cmd->add_option("--mask", tr.mask, "mask.csv (1 = observed)");
  train_cmd->add_option("--profile", tr.profile, "Defaults: internet2, geant or none")
      ->check(CLI::IsMember({"none", "internet2", "geant"}))
      ->capture_default_str();
  train_cmd->add_option("--rank", tr.rank, "Factorization rank k")->capture_default_str();
  train_cmd->add_option("--lags", tr.lags, "Lag set, comma separated")->delimiter(',');
  train_cmd->add_option("--beta-h", tr.beta_h, "Temporal penalty balance")->capture_default_str();
  train_cmd->add_option("--beta-a", tr.beta_a, "Orthogonality penalty balance")->capture_default_str();
  train_cmd->add_option("--missing-mode", tr.missing_mode, "none, weighted_fill or em_mask")
      ->check(CLI::IsMember({"none", "weighted_fill", "em_mask"}))
      ->capture_default_str();
  train_cmd->add_option("--restart-test", tr.restart_test,
                        "Step acceptance: objective (block objective) or fit (||X - WH||^2 only)")
      ->check(CLI::IsMember({"objective", "fit"}))
      ->capture_default_str();
  train_cmd->add_option("--q-max", tr.q_max, "Outer iterations")->capture_default_str();
  train_cmd->add_option("--train-t", tr.train_t, "Use only the first N columns");
  train_cmd->add_option("--seed", synth.seed, "Accepted for config compatibility; training is deterministic");
  train_cmd->add_option("--out", tr.out, "Output directory")->capture_default_str();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate OD flows from link flows");
  est_cmd->add_option("--model", est.model, "model.ttnmf archive")->required();
  est_cmd->add_option("--linkflows", est.linkflows, "linkflows.csv (links x timestamps)")->required();
  est_cmd->add_option("--gd-max", est.gd_max, "Fast-gradient iterations")->capture_default_str();
  est_cmd->add_option("--em-max", est.em_max, "EM iterations")->capture_default_str();
  est_cmd->add_option("--delta-gd", est.delta_gd, "Fast-gradient stop threshold")->capture_default_str();
  est_cmd->add_option("--delta-em", est.delta_em, "EM stop threshold")->capture_default_str();
  est_cmd->add_option("--out", est.out, "Output directory")->capture_default_str();

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute SRE/TRE reports");
  eval_cmd->add_option("--truth", ev.truth, "True OD flows (n x T)")->required();
  eval_cmd->add_option("--estimate", ev.estimate, "Estimated OD flows (n x T)")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*train_cmd) run_train(tr, *train_cmd);
    if (*est_cmd) run_estimate(est);
    if (*eval_cmd) run_evaluate(ev);
  } catch (const ttnmf::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ttnmf::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ttnmf::ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const ttnmf::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const ttnmf::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
