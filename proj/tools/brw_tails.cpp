// brw-tails: command-line front end for the branching random walk lab.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "brw/csv.hpp"
#include "brw/engine.hpp"
#include "brw/errors.hpp"
#include "brw/harness.hpp"
#include "brw/models.hpp"
#include "brw/parallel.hpp"
#include "brw/spine.hpp"
#include "brw/tailstats.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw brw::ConfigInvalid("bad level '" + item + "'");
    }
  }
  return out;
}

void ensure_parent(const std::filesystem::path& out) {
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
}

unsigned resolve_threads(unsigned t) { return t == 0 ? brw::default_thread_count() : t; }

struct SimulateArgs {
  std::string config;
  std::string model = "iid-cluster-b3";
  int depth = 12;
  int horizon = 6;
  std::size_t reps = 100000;
  std::optional<std::uint64_t> seed;
  std::string out = "trajectories.csv";
  unsigned threads = 0;
};

int run_simulate(const SimulateArgs& a) {
  std::string model_name = a.model;
  int depth = a.depth;
  int horizon = a.horizon;
  std::size_t reps = a.reps;
  std::uint64_t seed = a.seed.value_or(1);
  unsigned threads = a.threads;
  brw::SimCaps caps;
  if (!a.config.empty()) {
    const auto cfg = brw::load_config(a.config);
    model_name = cfg.model;
    depth = cfg.depth;
    horizon = cfg.proxy_horizon;
    reps = cfg.reps;
    if (!a.seed) seed = cfg.seed;
    threads = cfg.threads;
    caps.weight_floor = cfg.weight_floor;
    caps.population_cap = cfg.population_cap;
  }
  caps.max_depth = depth;
  caps.m_proxy_horizon = horizon;
  caps.validate();
  const brw::Model model = brw::build_model(brw::preset(model_name));
  brw::BatchOptions options;
  options.sup_orders = {1};
  options.threads = resolve_threads(threads);
  const auto batch = brw::simulate_batch(model, caps, reps, seed, options);

  ensure_parent(a.out);
  brw::CsvWriter csv(a.out, brw::trajectory_csv_header());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    csv.field(static_cast<std::int64_t>(i))
        .field(batch.w_n[i])
        .field(batch.w_star[i])
        .field(batch.s[i])
        .field(batch.delta[i])
        .field(batch.m_proxy[i])
        .field(batch.sup_from[0][i])
        .field(static_cast<std::int64_t>(batch.failed[i]))
        .field(batch.pruned_mass[i]);
    csv.end_row();
  }
  csv.close();
  std::cerr << "simulate: " << batch.size() << " replicates, " << batch.failed_count
            << " failed, " << batch.pathwise_violations << " pathwise violations -> " << a.out
            << '\n';
  return batch.pathwise_violations == 0 ? kExitPass : kExitFail;
}

struct SpineArgs {
  std::string config;
  std::string model = "iid-cluster-b3";
  std::size_t paths = 100000;
  double eps = 1e-6;
  std::optional<std::uint64_t> seed;
  std::string out = "paths.csv";
  unsigned threads = 0;
};

int run_spine(const SpineArgs& a) {
  std::string model_name = a.model;
  std::size_t paths = a.paths;
  double eps = a.eps;
  std::uint64_t seed = a.seed.value_or(1);
  unsigned threads = a.threads;
  if (!a.config.empty()) {
    const auto cfg = brw::load_config(a.config);
    model_name = cfg.model;
    paths = cfg.reps;
    eps = cfg.eps_trunc;
    if (!a.seed) seed = cfg.seed;
    threads = cfg.threads;
  }
  const brw::Model model = brw::build_model(brw::preset(model_name));
  std::vector<brw::PerpetuitySummary> out(paths);
  brw::parallel_for(paths, resolve_threads(threads), [&](std::size_t i) {
    brw::RandomStream rng = brw::stream_rng(seed, i);
    out[i] = brw::perpetuity_summary(model, eps, rng);
  });
  ensure_parent(a.out);
  brw::CsvWriter csv(a.out, brw::perpetuity_csv_header());
  for (std::size_t i = 0; i < paths; ++i) {
    csv.field(static_cast<std::int64_t>(i))
        .field(out[i].r_value)
        .field(static_cast<std::int64_t>(out[i].truncation_k))
        .field(out[i].residual_bound);
    csv.end_row();
  }
  csv.close();
  return kExitPass;
}

struct TailsArgs {
  std::string in;
  std::string col;
  std::string ref;
  std::string ref_col;
  std::string levels = "1e-2,1e-3,1e-4";
  std::string out = "tails.json";
};

int run_tails(const TailsArgs& a) {
  const auto num = brw::read_csv_columns(a.in, {a.col}).front();
  std::vector<double> finite;
  finite.reserve(num.size());
  for (double x : num) {
    if (std::isfinite(x)) finite.push_back(x);
  }
  if (finite.empty()) throw brw::EmptySample("column '" + a.col + "' has no finite values");

  brw::TailReport report;
  nlohmann::json notes = nlohmann::json::array();
  std::vector<double> positive;
  for (double x : finite) {
    if (x > 0.0) positive.push_back(x);
  }
  if (positive.size() >= 200) report.hill = brw::hill_estimate(positive, positive.size() / 100);
  if (!a.ref.empty()) {
    const std::string ref_col = a.ref_col.empty() ? a.col : a.ref_col;
    const auto ref_raw = brw::read_csv_columns(a.ref, {ref_col}).front();
    std::vector<double> ref;
    for (double x : ref_raw) {
      if (std::isfinite(x)) ref.push_back(x);
    }
    for (double level : parse_levels(a.levels)) {
      try {
        const std::vector<double> one{level};
        report.ratio_curve.push_back(brw::tail_ratio(finite, ref, one).front());
      } catch (const brw::LevelTooDeep& e) {
        notes.push_back(e.what());
      }
    }
  }
  try {
    report.diagnostic = brw::rv_diagnostic(positive);
  } catch (const brw::InsufficientSample& e) {
    notes.push_back(e.what());
  }
  auto j = brw::tail_report_json(report);
  j["notes"] = notes;
  j["samples"] = finite.size();
  ensure_parent(a.out);
  std::ofstream f(a.out, std::ios::trunc);
  if (!f) throw brw::OutputUnwritable("cannot open " + a.out);
  f << j.dump(2) << '\n';
  return kExitPass;
}

struct VerifyArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  auto cfg = brw::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  const auto report = brw::run_experiment(cfg);
  for (const auto& row : report.rows) {
    const char* tag = row.verdict == brw::RowVerdict::Pass   ? "PASS"
                      : row.verdict == brw::RowVerdict::Fail ? "FAIL"
                                                             : "info";
    std::cout << tag << "  " << row.name << "  empirical=" << row.empirical
              << " theoretical=" << row.theoretical << " se=" << row.se << '\n';
  }
  std::cout << (report.all_pass() ? "all criteria pass" : "some criteria fail") << " ("
            << (cfg.out_dir / "report.json").string() << ")\n";
  return report.all_pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for branching random walk tails"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate martingale trajectories");
  simulate->add_option("--config", sim.config, "JSON config (model, depth, reps, seed)");
  simulate->add_option("--model", sim.model, "model preset");
  simulate->add_option("--depth", sim.depth, "generations N");
  simulate->add_option("--horizon", sim.horizon, "M-proxy horizon N0");
  simulate->add_option("--reps", sim.reps, "replicates");
  simulate->add_option("--seed", sim.seed, "global seed");
  simulate->add_option("--out", sim.out, "output CSV");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores)");

  SpineArgs sp;
  auto* spine = app.add_subcommand("spine", "simulate perpetuity paths along the spine");
  spine->add_option("--config", sp.config, "JSON config (model, reps, eps_trunc, seed)");
  spine->add_option("--model", sp.model, "model preset");
  spine->add_option("--paths", sp.paths, "number of paths");
  spine->add_option("--eps", sp.eps, "truncation threshold for the running product");
  spine->add_option("--seed", sp.seed, "global seed");
  spine->add_option("--out", sp.out, "output CSV");
  spine->add_option("--threads", sp.threads, "worker threads (0 = all cores)");

  TailsArgs tl;
  auto* tails = app.add_subcommand("tails", "tail statistics for a CSV column");
  tails->add_option("--in", tl.in, "input CSV")->required();
  tails->add_option("--col", tl.col, "column name")->required();
  tails->add_option("--ref", tl.ref, "reference CSV for tail ratios");
  tails->add_option("--ref-col", tl.ref_col, "reference column (defaults to --col)");
  tails->add_option("--levels", tl.levels, "comma-separated reference tail levels");
  tails->add_option("--out", tl.out, "output JSON");

  VerifyArgs vf;
  auto* verify = app.add_subcommand("verify", "run a configured experiment and judge it");
  verify->add_option("--config", vf.config, "JSON config")->required();
  verify->add_option("--seed", vf.seed, "override the config seed");
  verify->add_option("--out", vf.out, "override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*spine) return run_spine(sp);
    if (*tails) return run_tails(tl);
    if (*verify) return run_verify(vf);
  } catch (const brw::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const brw::OutputUnwritable& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const brw::InvalidSpec& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const brw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitConfig;
}
