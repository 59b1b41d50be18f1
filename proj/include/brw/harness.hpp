#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "brw/models.hpp"
#include "brw/tailstats.hpp"

namespace brw {

enum class ExperimentKind { Theorem1, SupFromN, Spine, ExampleGallery, Identities };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Theorem1;
  std::string model = "iid-cluster-b3";
  int depth = 12;                 // N
  int proxy_horizon = 6;          // N0
  std::size_t reps = 10000000;    // replicates (trajectories, paths or draws)
  std::uint64_t seed = 1;
  std::vector<double> levels{1e-2, 1e-3, 1e-4};
  double gate_max_level = 1e-3;   // shallower levels are reported, not gated
  double eps_trunc = 1e-6;
  std::filesystem::path out_dir = "out";
  unsigned threads = 0;           // 0 = hardware concurrency
  double weight_floor = 0.0;
  std::size_t population_cap = 1000000;

  double ratio_tolerance = 0.20;       // relative, limit-theorem ratios
  double grey_tolerance = 0.25;        // relative, perpetuity plateau
  double conversion_tolerance = 0.25;  // relative, Q -> P conversion
  double se_multiple = 4.0;            // identity checks
  double max_failed_fraction = 1e-3;

  /// Throws ConfigInvalid.
  void validate() const;
};

/// Strict: unknown keys and mistyped values are ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

enum class RowVerdict { Pass, Fail, Info };

/// How `tolerance` is applied to |empirical - theoretical|.
enum class ToleranceKind {
  Relative,     // |e / t - 1| <= tol
  SeMultiple,   // |e - t| <= tol * se
  Absolute,     // |e - t| <= tol
  UpperBound,   // e <= t
};

struct CriterionRow {
  std::string name;
  double empirical = 0.0;
  double theoretical = 0.0;
  double se = 0.0;
  double tolerance = 0.0;
  ToleranceKind kind = ToleranceKind::Relative;
  RowVerdict verdict = RowVerdict::Info;
  std::string note;
};

/// Applies the tolerance rule and stores the verdict (gated rows only).
CriterionRow judge(CriterionRow row);

struct ExperimentReport {
  ExperimentConfig config;
  nlohmann::json model;      // echo of the built model's closed forms
  nlohmann::json constants;  // theoretical constants used by the rows
  nlohmann::json tails;      // per-functional TailReport
  std::vector<CriterionRow> rows;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  std::vector<std::filesystem::path> raw_files;
  double wall_seconds = 0.0;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

/// Runs the configured experiment on a worker pool (replicate i uses stream
/// i), persists raw samples as CSV, then writes report.json. Identical
/// configs give byte-identical raw files and reports outside "metadata".
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Theorem1 experiment for a heavy-tail preset; throws NotHeavyTail otherwise.
ExperimentReport verify_theorem1(const ExperimentConfig& config);

/// Checks that every criterion row carries the required fields.
bool validate_report_schema(const nlohmann::json& report, std::string* why = nullptr);

nlohmann::json tail_report_json(const TailReport& report);

/// Column order of the per-replicate trajectory CSV written by `simulate`.
const std::vector<std::string>& trajectory_csv_header();
/// Column order of the raw samples written by Theorem1/SupFromN runs.
const std::vector<std::string>& theorem1_csv_header();
/// Column order of the perpetuity CSV written by `spine`.
const std::vector<std::string>& perpetuity_csv_header();

}  // namespace brw
