// Acceptance checks, one PASS/FAIL line per criterion. `--only N` runs one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idm/bench.hpp"
#include "idm/errors.hpp"
#include "idm/manifolds.hpp"
#include "idm/metrics.hpp"
#include "idm/rng.hpp"
#include "idm/sampler.hpp"
#include "idm/score.hpp"

using namespace idm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Vector normal_vector(Eigen::Index dim, RandomStream& rng) {
  Vector v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Seed-averaged W1 per method and key (n or D).
std::map<SampleMethod, std::map<long long, double>> means_by(const std::vector<ExperimentRecord>& recs, bool by_d) {
  std::map<SampleMethod, std::map<long long, std::pair<double, int>>> acc;
  for (const auto& r : recs) {
    auto& s = acc[r.method][by_d ? r.ambient_dim : r.n];
    s.first += r.w1_estimate;
    ++s.second;
  }
  std::map<SampleMethod, std::map<long long, double>> out;
  for (const auto& [m, per] : acc)
    for (const auto& [k, s] : per) out[m][k] = s.first / s.second;
  return out;
}

Outcome rate() {
  const auto cfg = ExperimentConfig::defaults(ExperimentKind::Rate);
  const auto result = run_rate_experiment(cfg);
  if (!result.failures.empty()) return {false, fmt("%zu cells failed", result.failures.size())};
  const auto means = means_by(result.records, false);
  auto slope = [&](SampleMethod m) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [n, w] : means.at(m)) pairs.emplace_back(static_cast<double>(n), w);
    return fit_loglog_slope(pairs).slope;
  };
  const double s_idm = slope(SampleMethod::IDM);
  const double s_mem = slope(SampleMethod::Memorized);
  bool separated = true;
  std::string table;
  for (const auto& [n, w] : means.at(SampleMethod::IDM)) {
    const double wm = means.at(SampleMethod::Memorized).at(n);
    table += fmt(" n=%lld:%.4f/%.4f", n, w, wm);
    if (n >= 1024 && !(w < wm)) separated = false;
  }
  const bool pass = s_idm >= -0.28 && s_idm <= -0.12 && s_mem >= -0.24 && s_mem <= -0.10 && separated;
  return {pass, fmt("IDM slope %.4f in [-0.28,-0.12], Memorized slope %.4f in [-0.24,-0.10], IDM<Mem for n>=1024: %s;",
                    s_idm, s_mem, separated ? "yes" : "no") + table};
}

Outcome dimension() {
  const auto cfg = ExperimentConfig::defaults(ExperimentKind::Dimension);
  const auto result = run_dimension_experiment(cfg);
  if (!result.failures.empty()) return {false, fmt("%zu cells failed", result.failures.size())};
  const auto means = means_by(result.records, true);
  std::vector<double> dims, idm, mem;
  std::string table;
  for (const auto& [d, w] : means.at(SampleMethod::IDM)) {
    dims.push_back(static_cast<double>(d));
    idm.push_back(w);
    mem.push_back(means.at(SampleMethod::Memorized).at(d));
    table += fmt(" D=%lld:%.4f/%.4f", d, w, mem.back());
  }
  const double flat = flatness_statistic(idm);
  const double rho = spearman_rho(dims, idm);
  const bool pass = flat <= 0.25 && std::abs(rho) <= 0.7;
  return {pass, fmt("IDM flatness %.4f <= 0.25, |Spearman| %.3f <= 0.7 (Memorized flatness %.4f);", flat,
                    std::abs(rho), flatness_statistic(mem)) + table};
}

struct CircleSetting {
  static constexpr long long n = 4096;
  static constexpr int ambient = 20;
  ManifoldSpec spec = ManifoldSpec::circle(ambient, derive_seed(3, "embedding"));
  DataSet data = sample_manifold(spec, n, derive_seed(3, "data"));
  BandwidthPlan plan = bandwidth_plan(0.8, 1, n);
};

Outcome projection() {
  const CircleSetting s;
  const double sp = s.plan.sigma_prime;
  const SchedulePoint at = schedule_at(s.plan.h2);
  const DataSet probes = sample_manifold(s.spec, 1000, derive_seed(3, "probes"));
  std::vector<double> before, after;
  for (Eigen::Index k = 0; k < probes.size(); ++k) {
    RandomStream rng(derive_seed(3, "noise"), static_cast<std::uint64_t>(k));
    const Vector z = probes.points.row(k).transpose() + sp * normal_vector(s.ambient, rng);
    before.push_back(distance_to_manifold(z, s.spec));
    // At time h^2 the point is alpha z; the update then smooths z at bandwidth sigma'.
    after.push_back(distance_to_manifold(inertia_update(at.alpha * z, s.plan.h, s.data), s.spec));
  }
  const double p99 = quantile(after, 0.99);
  const double bound = 10.0 * std::pow(std::log(double(s.n)), 2) * sp * sp;
  const double med = quantile(before, 0.5);
  const double floor = 0.5 * sp * std::sqrt(double(s.ambient - 1));
  return {p99 <= bound && med >= floor,
          fmt("p99 updated distance %.3e <= %.3e, median raw distance %.4f >= %.4f", p99, bound, med, floor)};
}

Outcome non_memorization() {
  const CircleSetting s;
  const SamplerConfig cfg = make_sampler_config(0.8, 1, s.n, s.ambient, s.spec.diameter());
  const auto batch = idm_sample(s.data, cfg, 1000, derive_seed(4, "idm"), 0);
  int close = 0;
  for (Eigen::Index j = 0; j < batch.samples.rows(); ++j) {
    const double d2 = (s.data.points.rowwise() - batch.samples.row(j)).rowwise().squaredNorm().minCoeff();
    if (std::sqrt(d2) <= 1e-6) ++close;
  }
  return {close <= 10, fmt("%d of 1000 outputs within 1e-6 of a training point (limit 10)", close)};
}

Outcome score() {
  constexpr int dim = 7, n = 20;
  double worst_fd = 0.0, worst_nw = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    RandomStream rng(derive_seed(5, "probe"), k);
    PointMatrix data(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < dim; ++c) data(i, c) = rng.normal();
    const double t = std::exp(std::log(1e-3) + rng.uniform() * (std::log(3.0) - std::log(1e-3)));
    const SchedulePoint sp = schedule_at(t);
    const auto u = static_cast<Eigen::Index>(rng.index(n));
    const Vector x = sp.alpha * data.row(u).transpose() + sp.sigma * normal_vector(dim, rng);
    const Vector s = empirical_score(x, t, data);
    const double step = 1e-4 * sp.sigma;
    Vector fd(dim);
    for (int c = 0; c < dim; ++c) {
      Vector hi = x, lo = x;
      hi(c) += step;
      lo(c) -= step;
      fd(c) = (log_density_hat(hi, t, data) - log_density_hat(lo, t, data)) / (2.0 * step);
    }
    worst_fd = std::max(worst_fd, (fd - s).norm() / s.norm());

    DataSet ds;
    ds.points = data;
    const double h = std::sqrt(std::exp(std::log(1e-3) + rng.uniform() * (std::log(1.0) - std::log(1e-3))));
    const Vector z = schedule_at(h * h).alpha * data.row(u).transpose() + 0.3 * normal_vector(dim, rng);
    const Vector a = inertia_update_raw_score(z, h, ds);
    const Vector b = inertia_update(z, h, ds);
    worst_nw = std::max(worst_nw, (a - b).norm() / std::max(1.0, b.norm()));
  }
  return {worst_fd <= 1e-5 && worst_nw <= 1e-10,
          fmt("worst FD relative error %.2e <= 1e-5, worst raw-score vs NW gap %.2e <= 1e-10", worst_fd, worst_nw)};
}

Outcome sinkhorn() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    RandomStream rng(derive_seed(6, "instance"), k);
    const auto size = static_cast<Eigen::Index>(32 + rng.index(225));
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(20));
    const double scale = 0.5 + rng.uniform();
    const Vector shift = normal_vector(dim, rng) * (rng.uniform() / std::sqrt(double(dim)));
    PointMatrix a(size, dim), b(size, dim);
    for (Eigen::Index i = 0; i < size; ++i) {
      a.row(i) = normal_vector(dim, rng).transpose();
      b.row(i) = (scale * normal_vector(dim, rng) + shift).transpose();
    }
    const double exact = exact_w1_small(a, b);
    worst = std::max(worst, std::abs(sinkhorn_divergence(a, b) - exact) / exact);
  }
  double self = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    RandomStream rng(derive_seed(6, "self"), k);
    const auto size = static_cast<Eigen::Index>(32 + rng.index(225));
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(20));
    PointMatrix a(size, dim);
    for (Eigen::Index i = 0; i < size; ++i) a.row(i) = normal_vector(dim, rng).transpose();
    self = std::max(self, sinkhorn_divergence(a, a));
  }
  return {worst <= 0.05 && self <= 1e-8,
          fmt("worst relative gap to exact W1 %.4f <= 0.05, worst A=B value %.2e <= 1e-8", worst, self)};
}

Outcome kde_rate() {
  const std::vector<long long> ns{10000, 40000, 160000};
  int monotone = 0;
  double last_sup = 0.0;
  std::string table;
  for (std::uint64_t family = 0; family < 5; ++family) {
    const ManifoldSpec spec = ManifoldSpec::circle(2, derive_seed(family, "kde-embedding"));
    // Prefix-stable sampling: the three sizes are nested.
    const DataSet all = sample_manifold(spec, ns.back(), derive_seed(family, "kde-data"));
    std::vector<double> sups;
    for (long long n : ns) {
      KdeSpec k;
      k.sigma = 0.8 * std::pow(double(n), -0.2);
      const PointMatrix pts = all.points.topRows(n);
      double sup = 0.0;
      for (int g = 0; g < 1000; ++g) {
        const double th = 2.0 * std::numbers::pi * g / 1000.0;
        const Vector x = spec.embed(Eigen::Vector2d(std::cos(th), std::sin(th)));
        sup = std::max(sup, std::abs(kde_density(x, pts, k) - 0.5 / std::numbers::pi));
      }
      sups.push_back(sup);
    }
    if (sups[0] > sups[1] && sups[1] > sups[2]) ++monotone;
    last_sup = std::max(last_sup, sups[2]);
    table += fmt(" [%.4f %.4f %.4f]", sups[0], sups[1], sups[2]);
  }
  return {monotone >= 4 && last_sup <= 0.05,
          fmt("strictly decreasing in %d of 5 families (need 4), worst sup at n=1.6e5 %.4f <= 0.05;", monotone,
              last_sup) + table};
}

Outcome kde_equivalence() {
  const ManifoldSpec spec = ManifoldSpec::circle(2, derive_seed(8, "embedding"));
  const DataSet data = sample_manifold(spec, 1000, derive_seed(8, "data"));
  KdeSpec k;
  k.sigma = 0.1;
  const auto r = kde_vs_exp_sampler_check(data, k, [](const Vector& x) { return x(0); }, 100000, derive_seed(8, "mc"));
  const double gap = std::abs(r.kde_integral - r.sampler_mean);
  const double bound = 10.0 * 0.01 * std::pow(std::log(10.0), 1.5) + 3.0 * r.sampler_std_error;
  return {gap <= bound, fmt("|KDE integral - sampler mean| = %.3e <= %.3e", gap, bound)};
}

Outcome ode_consistency() {
  const ManifoldSpec spec = ManifoldSpec::special_orthogonal(4, 50, derive_seed(9, "embedding"));
  const DataSet data = sample_manifold(spec, 512, derive_seed(9, "data"));
  SamplerConfig sc = make_sampler_config(0.8, spec.intrinsic_dim, 512, 50, spec.diameter(), PathMode::ShortCircuit);
  SamplerConfig ode = sc;
  ode.path_mode = PathMode::FullODE;
  ode.init_mode = InitMode::EmpiricalPT;
  ode.ode_steps = 200;
  const Eigen::Index m = 2000;
  const auto a = idm_sample(data, ode, m, derive_seed(9, "ode"), 0);
  const auto b = idm_sample(data, sc, m, derive_seed(9, "sc-1"), 0);
  const auto c = idm_sample(data, sc, m, derive_seed(9, "sc-2"), 0);
  SinkhornConfig sk;
  sk.workers = 0;
  const double cross = sinkhorn_divergence(a.samples, b.samples, sk);
  const double base = sinkhorn_divergence(b.samples, c.samples, sk);

  // Endpoints of the reverse ODE at h^2 with 200 and 400 steps.
  const auto starts = forward_noise(data, ode.horizon, 200, derive_seed(9, "starts"), 0);
  double drift = 0.0;
  for (Eigen::Index j = 0; j < starts.samples.rows(); ++j) {
    const Vector z0 = starts.samples.row(j).transpose();
    const Vector e1 = reverse_ode(z0, ode.horizon, ode.plan.h2, data, 200);
    const Vector e2 = reverse_ode(z0, ode.horizon, ode.plan.h2, data, 400);
    drift = std::max(drift, (e1 - e2).norm() / e2.norm());
  }
  return {cross <= 2.0 * base && drift <= 1e-4,
          fmt("S(FullODE, ShortCircuit) %.4f <= 2 x %.4f, worst endpoint change on step doubling %.2e <= 1e-4", cross,
              base, drift)};
}

std::string csv_bytes(const std::vector<ExperimentRecord>& recs, const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / name;
  write_results_csv(path, recs);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(path);
  return ss.str();
}

Outcome determinism() {
  auto cfg = ExperimentConfig::defaults(ExperimentKind::Rate);
  cfg.record_wall_time = false;
  cfg.workers = 1;
  const auto one = csv_bytes(run_experiment_cell(cfg, 256, 50, 0), "idm_accept_w1.csv");
  cfg.workers = 8;
  const auto eight = csv_bytes(run_experiment_cell(cfg, 256, 50, 0), "idm_accept_w8.csv");
  return {one == eight, fmt("results.csv rows with 1 and 8 workers are %s (%zu bytes)",
                            one == eight ? "byte-identical" : "different", one.size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"rate reproduction", rate},
      {"dimension independence", dimension},
      {"projection property", projection},
      {"non-memorization", non_memorization},
      {"score correctness", score},
      {"sinkhorn validity", sinkhorn},
      {"KDE rate", kde_rate},
      {"KDE and exp-map sampler", kde_equivalence},
      {"ODE pipeline consistency", ode_consistency},
      {"determinism", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu (%s): %s  %s  [%.1f s]\n", i + 1, criteria[i].first, out.pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
