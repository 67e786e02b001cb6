#include "idm/sampler.hpp"

#include <chrono>
#include <cmath>

#include "idm/errors.hpp"
#include "idm/io.hpp"
#include "idm/parallel.hpp"
#include "idm/rng.hpp"

namespace idm {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void fill_normal(Vector& v, RandomStream& rng) {
  for (auto& x : v) x = rng.normal();
}

/// alpha X_U + sigma xi from the given stream.
Vector draw_noised_point(const DataSet& data, const SchedulePoint& s, RandomStream& rng) {
  const auto u = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(data.size())));
  Vector xi(data.dim());
  fill_normal(xi, rng);
  return s.alpha * data.points.row(u).transpose() + s.sigma * xi;
}

/// dZ/dt in diffusion time (t decreasing along the reverse flow).
Vector reverse_drift(const Vector& z, double t, const DataSet& data) {
  return -(z + empirical_score(z, t, data.points));
}

void require_data(const DataSet& data) {
  if (data.size() < 1) throw ConfigurationError("empty data set");
}

}  // namespace

std::string to_string(InitMode mode) {
  return mode == InitMode::EmpiricalPT ? "empirical_pt" : "standard_gaussian";
}

std::string to_string(PathMode mode) { return mode == PathMode::FullODE ? "full_ode" : "short_circuit"; }

std::string to_string(SampleMethod method) {
  switch (method) {
    case SampleMethod::IDM: return "IDM";
    case SampleMethod::Memorized: return "Memorized";
    case SampleMethod::EarlyStopped: return "EarlyStopped";
  }
  return "unknown";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "empirical_pt") return InitMode::EmpiricalPT;
  if (name == "standard_gaussian") return InitMode::StandardGaussian;
  throw ConfigurationError("unknown init mode '" + name + "'");
}

PathMode path_mode_from_string(const std::string& name) {
  if (name == "full_ode") return PathMode::FullODE;
  if (name == "short_circuit") return PathMode::ShortCircuit;
  throw ConfigurationError("unknown path mode '" + name + "'");
}

void SamplerConfig::validate() const {
  if (!(plan.h2 > 0.0)) throw ConfigurationError("bandwidth h must be positive");
  if (!(horizon > plan.h2)) throw ConfigurationError("horizon T must exceed h^2");
  if (ode_steps < 1) throw ConfigurationError("ode_steps must be at least 1");
}

double default_horizon(long long n, int ambient_dim, double diameter, double k_t) {
  return k_t * (std::log(static_cast<double>(n)) + std::log(static_cast<double>(ambient_dim)) + std::log(diameter));
}

SamplerConfig make_sampler_config(double c0, int intrinsic_dim, long long n, int ambient_dim, double diameter,
                                  PathMode path_mode) {
  SamplerConfig cfg;
  cfg.plan = bandwidth_plan(c0, intrinsic_dim, n);
  cfg.horizon = default_horizon(n, ambient_dim, diameter);
  cfg.path_mode = path_mode;
  cfg.validate();
  return cfg;
}

void to_json(nlohmann::json& j, const SamplerConfig& cfg) {
  j = nlohmann::json{{"C0", cfg.plan.c0},
                     {"d", cfg.plan.intrinsic_dim},
                     {"n", cfg.plan.n},
                     {"sigma_prime", cfg.plan.sigma_prime},
                     {"h", cfg.plan.h},
                     {"T", cfg.horizon},
                     {"init_mode", to_string(cfg.init_mode)},
                     {"ode_steps", cfg.ode_steps},
                     {"path_mode", to_string(cfg.path_mode)}};
}

void save_batch(const SampleBatch& batch, const std::filesystem::path& csv_path) {
  write_points_csv(csv_path, batch.samples);
  write_json(sidecar_path(csv_path), nlohmann::json{{"method", to_string(batch.method)},
                                                    {"config", batch.config},
                                                    {"seed", batch.seed},
                                                    {"wall_time_ms", std::llround(batch.wall_time_ms)}});
}

SampleBatch forward_noise(const DataSet& data, double t, Eigen::Index count, std::uint64_t seed, int workers) {
  require_data(data);
  if (!(t > 0.0)) throw DomainError("forward noising needs t > 0");
  const auto start = Clock::now();
  const SchedulePoint s = schedule_at(t);
  SampleBatch batch;
  batch.method = SampleMethod::EarlyStopped;
  batch.seed = seed;
  batch.samples.resize(count, data.dim());
  parallel_for(count, workers, [&](std::int64_t j) {
    RandomStream rng(seed, static_cast<std::uint64_t>(j));
    batch.samples.row(j) = draw_noised_point(data, s, rng).transpose();
  });
  batch.wall_time_ms = elapsed_ms(start);
  return batch;
}

Vector reverse_ode(const VectorRef& z0, double t_start, double t_end, const DataSet& data, int steps) {
  require_data(data);
  if (!(t_end > 0.0) || !(t_start > t_end)) throw DomainError("reverse ODE needs t_start > t_end > 0");
  if (steps < 1) throw ConfigurationError("reverse ODE needs at least one step");
  const double log_ratio = std::log(t_end / t_start);
  Vector z = z0;
  double t = t_start;
  for (int j = 1; j <= steps; ++j) {
    const double t_next = j == steps ? t_end : t_start * std::exp(log_ratio * j / steps);
    const double dt = t_next - t;  // negative
    const Vector k1 = reverse_drift(z, t, data);
    const Vector k2 = reverse_drift(z + 0.5 * dt * k1, t + 0.5 * dt, data);
    const Vector k3 = reverse_drift(z + 0.5 * dt * k2, t + 0.5 * dt, data);
    const Vector k4 = reverse_drift(z + dt * k3, t_next, data);
    z += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    if (!z.allFinite()) throw DivergenceError("non-finite state in reverse ODE", static_cast<std::size_t>(j));
    t = t_next;
  }
  return z;
}

Vector inertia_update(const VectorRef& z, double h, const DataSet& data) {
  require_data(data);
  if (!(h > 0.0)) throw DomainError("inertia update needs h > 0");
  const SchedulePoint s = schedule_at(h * h);
  return nw_estimate(z / s.alpha, s.sigma / s.alpha, data.points);
}

Vector inertia_update_raw_score(const VectorRef& z, double h, const DataSet& data) {
  require_data(data);
  if (!(h > 0.0)) throw DomainError("inertia update needs h > 0");
  const SchedulePoint s = schedule_at(h * h);
  return (z + s.sigma2 * empirical_score(z, s.t, data.points)) / s.alpha;
}

SampleBatch idm_sample(const DataSet& data, const SamplerConfig& config, Eigen::Index count, std::uint64_t seed,
                       int workers) {
  require_data(data);
  config.validate();
  const auto start = Clock::now();
  const double h = config.plan.h;
  const SchedulePoint at_h2 = schedule_at(config.plan.h2);
  const SchedulePoint at_t = schedule_at(config.horizon);

  SampleBatch batch;
  batch.method = SampleMethod::IDM;
  batch.config = config;
  batch.seed = seed;
  batch.samples.resize(count, data.dim());
  parallel_for(count, workers, [&](std::int64_t j) {
    RandomStream rng(seed, static_cast<std::uint64_t>(j));
    Vector z;
    if (config.path_mode == PathMode::ShortCircuit) {
      z = draw_noised_point(data, at_h2, rng);
    } else {
      if (config.init_mode == InitMode::EmpiricalPT) {
        z = draw_noised_point(data, at_t, rng);
      } else {
        z.resize(data.dim());
        fill_normal(z, rng);
      }
      try {
        z = reverse_ode(z, config.horizon, config.plan.h2, data, config.ode_steps);
      } catch (const DivergenceError& e) {
        throw DivergenceError("sample " + std::to_string(j) + ": " + e.what(), e.step());
      }
    }
    batch.samples.row(j) = inertia_update(z, h, data).transpose();
  }, 4);
  batch.wall_time_ms = elapsed_ms(start);
  return batch;
}

SampleBatch memorized_sample(const DataSet& data, Eigen::Index count, std::uint64_t seed, int workers) {
  require_data(data);
  const auto start = Clock::now();
  SampleBatch batch;
  batch.method = SampleMethod::Memorized;
  batch.seed = seed;
  batch.samples.resize(count, data.dim());
  parallel_for(count, workers, [&](std::int64_t j) {
    RandomStream rng(seed, static_cast<std::uint64_t>(j));
    batch.samples.row(j) = data.points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(data.size()))));
  }, 256);
  batch.wall_time_ms = elapsed_ms(start);
  return batch;
}

}  // namespace idm
