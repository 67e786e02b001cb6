#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "idm/manifolds.hpp"
#include "idm/metrics.hpp"
#include "idm/sampler.hpp"

namespace idm {

enum class ExperimentKind { Rate, Dimension, CircleDemo, ScoreField };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct CircleDemoSettings {
  long long n = 70;
  Eigen::Index draws = 200;
  double t = 0.05;  ///< early-stopping time, also h^2 of the update
  int ambient_dim = 2;
};

struct ScoreFieldSettings {
  long long n = 70;
  double t = 0.05;
  int grid_w = 41;
  int grid_h = 41;
  double extent = 1.5;  ///< grid covers [-extent, extent]^2
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Rate;
  ManifoldKind manifold = ManifoldKind::SpecialOrthogonal;
  int m_or_d = 4;
  std::vector<int> d_list{50};
  std::vector<long long> n_list{256, 512, 1024, 2048, 4096};
  double c0 = 0.8;
  Eigen::Index m_proxy = 20000;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  SinkhornConfig sinkhorn;
  PathMode path_mode = PathMode::ShortCircuit;
  InitMode init_mode = InitMode::EmpiricalPT;
  int ode_steps = 200;
  std::filesystem::path output_dir = "bench_out";
  int workers = 0;  ///< threads inside each cell; <= 0 means all cores
  /// When false wall_time_ms is written as 0, making results.csv a pure
  /// function of the config.
  bool record_wall_time = true;
  CircleDemoSettings circle_demo;
  ScoreFieldSettings score_field;

  /// Defaults of one experiment: rate and dim follow the desk-scale protocol,
  /// circle-demo and score-field use the circle in R^2.
  static ExperimentConfig defaults(ExperimentKind kind);

  /// Throws ConfigurationError on a bad config.
  void validate() const;
  ManifoldSpec manifold_spec(int ambient_dim, std::uint64_t seed) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
/// Missing keys keep their current values, so a partial file overrides defaults.
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

struct ExperimentRecord {
  std::string experiment;
  SampleMethod method = SampleMethod::IDM;
  long long n = 0;
  int ambient_dim = 0;
  std::uint64_t seed = 0;
  double w1_estimate = 0.0;
  double sigma_prime = 0.0;
  long long wall_time_ms = 0;
};

struct CellFailure {
  long long n = 0;
  int ambient_dim = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;  ///< canonical order
  std::vector<CellFailure> failures;
  int cells = 0;
  int clamped = 0;  ///< divergences that came out negative and were clamped
  nlohmann::json summary;
};

ExperimentResult run_rate_experiment(const ExperimentConfig& cfg);
ExperimentResult run_dimension_experiment(const ExperimentConfig& cfg);

/// Records of the single (n, D, seed) cell of a rate or dim config; rethrows a
/// cell failure as Error.
std::vector<ExperimentRecord> run_experiment_cell(const ExperimentConfig& cfg, long long n, int ambient_dim,
                                                  std::uint64_t seed);

struct CircleDemoOutput {
  DataSet training;
  PointMatrix early_stopped;
  PointMatrix updated;
};

CircleDemoOutput run_circle_demo(const ExperimentConfig& cfg, std::uint64_t seed);

/// Rows (x, y, score_x, score_y) over the grid, row-major in y then x.
Matrix run_score_field(const ExperimentConfig& cfg, std::uint64_t seed);

/// Sorts by method, n, D, seed.
void sort_records(std::vector<ExperimentRecord>& records);
void write_results_csv(const std::filesystem::path& path, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_results_csv(const std::filesystem::path& path);

/// Writes results.csv and summary.json into cfg.output_dir.
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);
void write_circle_demo(const std::filesystem::path& dir, const CircleDemoOutput& out);
void write_score_field(const std::filesystem::path& path, const Matrix& rows);

/// 0 when every cell ran, 3 when at most 20% failed, 4 otherwise.
int exit_code_for(const ExperimentResult& result);

/// (max - min) / median.
double flatness_statistic(std::span<const double> values);
/// Spearman rank correlation, ties get average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace idm
