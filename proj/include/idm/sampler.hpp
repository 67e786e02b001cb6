#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "idm/manifolds.hpp"
#include "idm/score.hpp"
#include "idm/types.hpp"

namespace idm {

enum class InitMode { EmpiricalPT, StandardGaussian };
enum class PathMode { FullODE, ShortCircuit };
enum class SampleMethod { IDM, Memorized, EarlyStopped };

std::string to_string(InitMode mode);
std::string to_string(PathMode mode);
std::string to_string(SampleMethod method);
InitMode init_mode_from_string(const std::string& name);
PathMode path_mode_from_string(const std::string& name);

struct SamplerConfig {
  BandwidthPlan plan;
  double horizon = 0.0;  ///< T
  InitMode init_mode = InitMode::EmpiricalPT;
  int ode_steps = 200;
  PathMode path_mode = PathMode::ShortCircuit;

  /// Throws ConfigurationError unless T > h^2 > 0 and ode_steps >= 1.
  void validate() const;
};

/// T = k_T (log n + log D + log diam M), with k_T = 2.
double default_horizon(long long n, int ambient_dim, double diameter, double k_t = 2.0);

/// Config with the bandwidth plan for (C0, d, n) and the default horizon.
SamplerConfig make_sampler_config(double c0, int intrinsic_dim, long long n, int ambient_dim, double diameter,
                                  PathMode path_mode = PathMode::ShortCircuit);

void to_json(nlohmann::json& j, const SamplerConfig& cfg);

struct SampleBatch {
  PointMatrix samples;
  SamplerConfig config;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::IDM;
  double wall_time_ms = 0.0;
};

/// CSV of the samples plus a sidecar {method, config, seed, wall_time_ms}.
void save_batch(const SampleBatch& batch, const std::filesystem::path& csv_path);

// Every sampler below draws sample j from RandomStream(seed, j) only, so a
// batch is identical whatever `workers` is and sample j does not depend on
// how many samples were requested. `workers` <= 0 means hardware concurrency.

/// alpha_t X_U + sigma_t xi with U uniform on the rows and xi ~ N(0, I_D).
SampleBatch forward_noise(const DataSet& data, double t, Eigen::Index count, std::uint64_t seed, int workers = 1);

/// RK4 integration of dZ/ds = Z + ∇log p̂_{T-s}(Z) from diffusion time t_start
/// down to t_end on the geometric grid t_j = t_start (t_end/t_start)^{j/steps}.
Vector reverse_ode(const VectorRef& z0, double t_start, double t_end, const DataSet& data, int steps);

/// alpha_{h^2}^{-1} (z + sigma_{h^2}^2 ∇log p̂_{h^2}(z)), evaluated as the
/// Nadaraya–Watson estimate at z / alpha with bandwidth sigma / alpha.
Vector inertia_update(const VectorRef& z, double h, const DataSet& data);

/// Same map evaluated literally through the empirical score.
Vector inertia_update_raw_score(const VectorRef& z, double h, const DataSet& data);

SampleBatch idm_sample(const DataSet& data, const SamplerConfig& config, Eigen::Index count, std::uint64_t seed,
                       int workers = 1);

/// I.i.d. draws with replacement from the training rows.
SampleBatch memorized_sample(const DataSet& data, Eigen::Index count, std::uint64_t seed, int workers = 1);

}  // namespace idm
