#include "idm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>

#include "idm/errors.hpp"
#include "idm/io.hpp"
#include "idm/rng.hpp"
#include "idm/score.hpp"

namespace idm {
namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kResultsHeader = "experiment,method,n,D,seed,w1_estimate,sigma_prime,wall_time_ms";

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

SampleMethod method_from_string(const std::string& name) {
  if (name == "IDM") return SampleMethod::IDM;
  if (name == "Memorized") return SampleMethod::Memorized;
  throw ConfigurationError("unknown method '" + name + "' in results file");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Seeds of the pieces of one cell. The embedding and the training data depend
// on the seed only, so the n-sweep uses nested training sets; truth and
// method samples are fresh per cell.
struct CellSeeds {
  std::uint64_t embedding;
  std::uint64_t data;
  std::uint64_t truth;
  std::uint64_t idm;
  std::uint64_t memorized;
};

CellSeeds cell_seeds(std::uint64_t seed, long long n, int ambient_dim) {
  const auto cell = static_cast<std::uint64_t>(n) * 4096u + static_cast<std::uint64_t>(ambient_dim);
  return {derive_seed(seed, "embedding"), derive_seed(seed, "data"), derive_seed(seed, "truth", cell),
          derive_seed(seed, "idm", cell), derive_seed(seed, "memorized", cell)};
}

struct Cell {
  long long n;
  int ambient_dim;
  std::uint64_t seed;
};

struct MethodOutcome {
  double w1 = 0.0;
  long long wall_ms = 0;
  bool clamped = false;
};

struct CellOutcome {
  MethodOutcome idm;
  MethodOutcome memorized;
};

CellOutcome run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  const CellSeeds seeds = cell_seeds(cell.seed, cell.n, cell.ambient_dim);
  const ManifoldSpec spec = cfg.manifold_spec(cell.ambient_dim, seeds.embedding);
  const DataSet data = sample_manifold(spec, cell.n, seeds.data);
  const DataSet truth = sample_manifold(spec, cfg.m_proxy, seeds.truth);

  SinkhornConfig sk = cfg.sinkhorn;
  sk.workers = cfg.workers;
  const double ot_truth = entropic_self_cost(truth.points, sk);

  CellOutcome out;
  auto measure = [&](MethodOutcome& slot, auto&& draw) {
    const auto start = Clock::now();
    const SampleBatch batch = draw();
    const SinkhornReport report = sinkhorn_divergence_report(batch.samples, truth.points, sk, ot_truth);
    slot.w1 = report.divergence;
    slot.clamped = report.clamped;
    slot.wall_ms = elapsed_ms(start);
  };

  SamplerConfig sampler = make_sampler_config(cfg.c0, spec.intrinsic_dim, cell.n, cell.ambient_dim,
                                              spec.diameter(), cfg.path_mode);
  sampler.init_mode = cfg.init_mode;
  sampler.ode_steps = cfg.ode_steps;
  measure(out.idm, [&] { return idm_sample(data, sampler, cfg.m_proxy, seeds.idm, cfg.workers); });
  measure(out.memorized, [&] { return memorized_sample(data, cfg.m_proxy, seeds.memorized, cfg.workers); });
  return out;
}

ExperimentResult run_cells(const ExperimentConfig& cfg, const std::string& label) {
  cfg.validate();
  std::vector<Cell> cells;
  for (int d : cfg.d_list)
    for (long long n : cfg.n_list)
      for (std::uint64_t seed : cfg.seeds) cells.push_back({n, d, seed});

  ExperimentResult result;
  result.cells = static_cast<int>(cells.size());
  const int d = cfg.manifold_spec(cfg.d_list.front(), 0).intrinsic_dim;
  // Cells run one after another with all threads inside each; a single
  // M x M cost matrix is already large.
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell& cell = cells[k];
    std::cerr << label << ": cell " << k + 1 << '/' << cells.size() << " n=" << cell.n << " D=" << cell.ambient_dim
              << " seed=" << cell.seed << std::endl;
    CellOutcome outcome;
    try {
      outcome = run_cell(cfg, cell);
    } catch (const Error& e) {
      result.failures.push_back({cell.n, cell.ambient_dim, cell.seed, e.what()});
      std::cerr << "warning: cell n=" << cell.n << " D=" << cell.ambient_dim << " seed=" << cell.seed
                << " failed: " << e.what() << '\n';
      continue;
    }
    const double sigma_prime = bandwidth_plan(cfg.c0, d, cell.n).sigma_prime;
    for (auto [method, m] : {std::pair{SampleMethod::IDM, outcome.idm}, std::pair{SampleMethod::Memorized, outcome.memorized}}) {
      ExperimentRecord rec;
      rec.experiment = label;
      rec.method = method;
      rec.n = cell.n;
      rec.ambient_dim = cell.ambient_dim;
      rec.seed = cell.seed;
      rec.w1_estimate = m.w1;
      rec.sigma_prime = sigma_prime;
      rec.wall_time_ms = cfg.record_wall_time ? m.wall_ms : 0;
      result.records.push_back(rec);
      if (m.clamped) ++result.clamped;
    }
  }
  if (result.clamped > 0) std::cerr << "warning: " << result.clamped << " negative divergences clamped to 0\n";
  sort_records(result.records);
  return result;
}

/// Seed-averaged W1 per (method, key), keys in ascending order.
std::map<SampleMethod, std::map<long long, double>> seed_means(const std::vector<ExperimentRecord>& records,
                                                               bool by_dimension) {
  std::map<SampleMethod, std::map<long long, std::pair<double, int>>> acc;
  for (const auto& r : records) {
    auto& slot = acc[r.method][by_dimension ? r.ambient_dim : r.n];
    slot.first += r.w1_estimate;
    ++slot.second;
  }
  std::map<SampleMethod, std::map<long long, double>> out;
  for (const auto& [method, per_key] : acc)
    for (const auto& [key, sum] : per_key) out[method][key] = sum.first / sum.second;
  return out;
}

nlohmann::json base_summary(const ExperimentConfig& cfg, const ExperimentResult& result) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"n", f.n}, {"D", f.ambient_dim}, {"seed", f.seed}, {"error", f.message}});
  return {{"experiment", to_string(cfg.experiment)},
          {"config", cfg},
          {"cells", result.cells},
          {"failed_cells", failures},
          {"clamped_divergences", result.clamped}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Rate: return "rate";
    case ExperimentKind::Dimension: return "dim";
    case ExperimentKind::CircleDemo: return "circle-demo";
    case ExperimentKind::ScoreField: return "score-field";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "rate") return ExperimentKind::Rate;
  if (name == "dim" || name == "dimension") return ExperimentKind::Dimension;
  if (name == "circle-demo") return ExperimentKind::CircleDemo;
  if (name == "score-field") return ExperimentKind::ScoreField;
  throw ConfigurationError("unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::Rate:
      break;
    case ExperimentKind::Dimension:
      cfg.n_list = {2048};
      cfg.d_list = {16, 32, 64, 128, 256};
      break;
    case ExperimentKind::CircleDemo:
    case ExperimentKind::ScoreField:
      cfg.manifold = ManifoldKind::Circle;
      cfg.m_or_d = 1;
      cfg.d_list = {2};
      cfg.seeds = {0};
      break;
  }
  return cfg;
}

ManifoldSpec ExperimentConfig::manifold_spec(int ambient_dim, std::uint64_t seed) const {
  return ManifoldSpec::make(manifold, m_or_d, ambient_dim, seed);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigurationError("at least one seed is required");
  if (d_list.empty()) throw ConfigurationError("D-list is empty");
  for (int d : d_list) manifold_spec(d, 0).validate();
  sinkhorn.validate();
  switch (experiment) {
    case ExperimentKind::Rate:
    case ExperimentKind::Dimension: {
      if (n_list.empty()) throw ConfigurationError("n-list is empty");
      for (long long n : n_list)
        if (n < 2) throw ConfigurationError("n-list entries must be at least 2");
      if (m_proxy < 100) throw ConfigurationError("M must be at least 100");
      if (!(c0 > 0.0)) throw ConfigurationError("C0 must be positive");
      if (ode_steps < 1) throw ConfigurationError("ode_steps must be positive");
      if (experiment == ExperimentKind::Rate) {
        std::vector<long long> distinct = n_list;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 3) throw ConfigurationError("rate experiment needs at least three distinct n for a slope");
      } else if (n_list.size() != 1) {
        throw ConfigurationError("dimension experiment takes a single n");
      }
      break;
    }
    case ExperimentKind::CircleDemo:
      if (manifold != ManifoldKind::Circle) throw ConfigurationError("circle demo runs on the circle");
      if (circle_demo.n < 1 || circle_demo.draws < 1) throw ConfigurationError("circle demo needs points and draws");
      if (!(circle_demo.t > 0.0)) throw ConfigurationError("circle demo time must be positive");
      break;
    case ExperimentKind::ScoreField:
      if (manifold != ManifoldKind::Circle || d_list.front() != 2)
        throw UnsupportedError("score field is only defined for the circle in D=2");
      if (score_field.n < 1) throw ConfigurationError("score field needs data");
      if (!(score_field.t > 0.0)) throw ConfigurationError("score field time must be positive");
      if (score_field.grid_w < 1 || score_field.grid_h < 1 || !(score_field.extent > 0.0))
        throw ConfigurationError("bad score field grid");
      break;
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
  j = nlohmann::json{{"experiment", to_string(cfg.experiment)},
                     {"manifold", {{"kind", to_string(cfg.manifold)}, {"param", cfg.m_or_d}}},
                     {"d_list", cfg.d_list},
                     {"n_list", cfg.n_list},
                     {"c0", cfg.c0},
                     {"m_proxy", cfg.m_proxy},
                     {"seeds", cfg.seeds},
                     {"sinkhorn",
                      {{"epsilon", cfg.sinkhorn.epsilon},
                       {"scaling", cfg.sinkhorn.scaling},
                       {"max_iters", cfg.sinkhorn.max_iters},
                       {"tol", cfg.sinkhorn.tol}}},
                     {"path_mode", to_string(cfg.path_mode)},
                     {"init_mode", to_string(cfg.init_mode)},
                     {"ode_steps", cfg.ode_steps},
                     {"output_dir", cfg.output_dir.string()},
                     {"record_wall_time", cfg.record_wall_time},
                     {"circle_demo",
                      {{"n", cfg.circle_demo.n},
                       {"draws", cfg.circle_demo.draws},
                       {"t", cfg.circle_demo.t},
                       {"ambient_dim", cfg.circle_demo.ambient_dim}}},
                     {"score_field",
                      {{"n", cfg.score_field.n},
                       {"t", cfg.score_field.t},
                       {"grid_w", cfg.score_field.grid_w},
                       {"grid_h", cfg.score_field.grid_h},
                       {"extent", cfg.score_field.extent}}}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
  try {
    if (j.contains("experiment")) cfg.experiment = experiment_kind_from_string(j.at("experiment").get<std::string>());
    if (j.contains("manifold")) {
      const auto& m = j.at("manifold");
      if (m.contains("kind")) cfg.manifold = manifold_kind_from_string(m.at("kind").get<std::string>());
      if (m.contains("param")) cfg.m_or_d = m.at("param").get<int>();
    }
    if (j.contains("d_list")) cfg.d_list = j.at("d_list").get<std::vector<int>>();
    if (j.contains("n_list")) cfg.n_list = j.at("n_list").get<std::vector<long long>>();
    if (j.contains("c0")) cfg.c0 = j.at("c0").get<double>();
    if (j.contains("m_proxy")) cfg.m_proxy = j.at("m_proxy").get<Eigen::Index>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sinkhorn")) {
      const auto& s = j.at("sinkhorn");
      cfg.sinkhorn.epsilon = s.value("epsilon", cfg.sinkhorn.epsilon);
      cfg.sinkhorn.scaling = s.value("scaling", cfg.sinkhorn.scaling);
      cfg.sinkhorn.max_iters = s.value("max_iters", cfg.sinkhorn.max_iters);
      cfg.sinkhorn.tol = s.value("tol", cfg.sinkhorn.tol);
    }
    if (j.contains("path_mode")) cfg.path_mode = path_mode_from_string(j.at("path_mode").get<std::string>());
    if (j.contains("init_mode")) cfg.init_mode = init_mode_from_string(j.at("init_mode").get<std::string>());
    cfg.ode_steps = j.value("ode_steps", cfg.ode_steps);
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.workers = j.value("workers", cfg.workers);
    cfg.record_wall_time = j.value("record_wall_time", cfg.record_wall_time);
    if (j.contains("circle_demo")) {
      const auto& c = j.at("circle_demo");
      cfg.circle_demo.n = c.value("n", cfg.circle_demo.n);
      cfg.circle_demo.draws = c.value("draws", cfg.circle_demo.draws);
      cfg.circle_demo.t = c.value("t", cfg.circle_demo.t);
      cfg.circle_demo.ambient_dim = c.value("ambient_dim", cfg.circle_demo.ambient_dim);
    }
    if (j.contains("score_field")) {
      const auto& s = j.at("score_field");
      cfg.score_field.n = s.value("n", cfg.score_field.n);
      cfg.score_field.t = s.value("t", cfg.score_field.t);
      cfg.score_field.grid_w = s.value("grid_w", cfg.score_field.grid_w);
      cfg.score_field.grid_h = s.value("grid_h", cfg.score_field.grid_h);
      cfg.score_field.extent = s.value("extent", cfg.score_field.extent);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentResult run_rate_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Rate) throw ConfigurationError("not a rate experiment config");
  ExperimentResult result = run_cells(cfg, "rate");
  result.summary = base_summary(cfg, result);

  nlohmann::json fits = nlohmann::json::object();
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [method, per_n] : seed_means(result.records, false)) {
    std::vector<std::pair<double, double>> pairs;
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [n, w1] : per_n) {
      pairs.emplace_back(static_cast<double>(n), w1);
      row[std::to_string(n)] = w1;
    }
    means[to_string(method)] = row;
    try {
      const LogLogFit fit = fit_loglog_slope(pairs);
      fits[to_string(method)] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    } catch (const Error& e) {
      fits[to_string(method)] = {{"error", e.what()}};
    }
  }
  result.summary["fits"] = fits;
  result.summary["mean_w1"] = means;
  return result;
}

ExperimentResult run_dimension_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Dimension) throw ConfigurationError("not a dimension experiment config");
  ExperimentResult result = run_cells(cfg, "dim");
  result.summary = base_summary(cfg, result);

  nlohmann::json stats = nlohmann::json::object();
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [method, per_d] : seed_means(result.records, true)) {
    std::vector<double> dims;
    std::vector<double> values;
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [d, w1] : per_d) {
      dims.push_back(static_cast<double>(d));
      values.push_back(w1);
      row[std::to_string(d)] = w1;
    }
    means[to_string(method)] = row;
    if (values.size() < 2) {
      std::cerr << "warning: single dimension, flatness reported as 0\n";
      stats[to_string(method)] = {{"flatness", 0.0}, {"spearman", 0.0}};
      continue;
    }
    stats[to_string(method)] = {{"flatness", flatness_statistic(values)}, {"spearman", spearman_rho(dims, values)}};
  }
  result.summary["flatness"] = stats;
  result.summary["mean_w1"] = means;
  return result;
}

std::vector<ExperimentRecord> run_experiment_cell(const ExperimentConfig& cfg, long long n, int ambient_dim,
                                                  std::uint64_t seed) {
  if (cfg.experiment != ExperimentKind::Rate && cfg.experiment != ExperimentKind::Dimension)
    throw ConfigurationError("cells exist only for rate and dim experiments");
  // A dim config accepts a single n, so the one-cell sweep passes validation.
  ExperimentConfig one = cfg;
  one.experiment = ExperimentKind::Dimension;
  one.n_list = {n};
  one.d_list = {ambient_dim};
  one.seeds = {seed};
  ExperimentResult result = run_cells(one, to_string(cfg.experiment));
  if (!result.failures.empty()) throw Error(result.failures.front().message);
  return std::move(result.records);
}

CircleDemoOutput run_circle_demo(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto& demo = cfg.circle_demo;
  const ManifoldSpec spec = ManifoldSpec::circle(demo.ambient_dim, derive_seed(seed, "embedding"));
  CircleDemoOutput out;
  out.training = sample_manifold(spec, demo.n, derive_seed(seed, "data"));
  out.early_stopped = forward_noise(out.training, demo.t, demo.draws, derive_seed(seed, "early"), cfg.workers).samples;
  const double h = std::sqrt(demo.t);
  out.updated.resize(out.early_stopped.rows(), out.early_stopped.cols());
  for (Eigen::Index i = 0; i < out.early_stopped.rows(); ++i)
    out.updated.row(i) = inertia_update(out.early_stopped.row(i).transpose(), h, out.training).transpose();
  return out;
}

Matrix run_score_field(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto& sf = cfg.score_field;
  const ManifoldSpec spec = ManifoldSpec::circle(2, derive_seed(seed, "embedding"));
  const DataSet data = sample_manifold(spec, sf.n, derive_seed(seed, "data"));
  Matrix rows(static_cast<Eigen::Index>(sf.grid_w) * sf.grid_h, 4);
  auto coord = [&](int k, int count) {
    return count == 1 ? 0.0 : -sf.extent + 2.0 * sf.extent * k / (count - 1);
  };
  for (int iy = 0; iy < sf.grid_h; ++iy) {
    for (int ix = 0; ix < sf.grid_w; ++ix) {
      const Eigen::Vector2d x(coord(ix, sf.grid_w), coord(iy, sf.grid_h));
      const Vector s = empirical_score(x, sf.t, data.points);
      rows.row(static_cast<Eigen::Index>(iy) * sf.grid_w + ix) << x(0), x(1), s(0), s(1);
    }
  }
  return rows;
}

void sort_records(std::vector<ExperimentRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
    return std::make_tuple(to_string(a.method), a.n, a.ambient_dim, a.seed) <
           std::make_tuple(to_string(b.method), b.n, b.ambient_dim, b.seed);
  });
}

void write_results_csv(const std::filesystem::path& path, std::span<const ExperimentRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << to_string(r.method) << ',' << r.n << ',' << r.ambient_dim << ',' << r.seed << ','
        << format_double(r.w1_estimate) << ',' << format_double(r.sigma_prime) << ',' << r.wall_time_ms << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ExperimentRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw ConfigurationError("unexpected results header");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ConfigurationError("malformed results row: " + line);
    ExperimentRecord r;
    r.experiment = f[0];
    r.method = method_from_string(f[1]);
    r.n = std::stoll(f[2]);
    r.ambient_dim = std::stoi(f[3]);
    r.seed = std::stoull(f[4]);
    r.w1_estimate = std::stod(f[5]);
    r.sigma_prime = std::stod(f[6]);
    r.wall_time_ms = std::stoll(f[7]);
    out.push_back(r);
  }
  return out;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::filesystem::create_directories(cfg.output_dir);
  write_results_csv(cfg.output_dir / "results.csv", result.records);
  write_json(cfg.output_dir / "summary.json", result.summary);
}

void write_circle_demo(const std::filesystem::path& dir, const CircleDemoOutput& out) {
  std::filesystem::create_directories(dir);
  save_dataset(out.training, dir / "training.csv");  // with its spec sidecar
  write_points_csv(dir / "early_stopped.csv", out.early_stopped);
  write_points_csv(dir / "updated.csv", out.updated);
}

void write_score_field(const std::filesystem::path& path, const Matrix& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "x,y,score_x,score_y\n";
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out << format_double(rows(i, 0)) << ',' << format_double(rows(i, 1)) << ',' << format_double(rows(i, 2)) << ','
        << format_double(rows(i, 3)) << '\n';
}

int exit_code_for(const ExperimentResult& result) {
  if (result.failures.empty()) return 0;
  if (result.cells == 0 || 5 * static_cast<long long>(result.failures.size()) > result.cells) return 4;
  return 3;
}

double flatness_statistic(std::span<const double> values) {
  if (values.empty()) throw ConfigurationError("flatness of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  const double median = k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
  if (!(median > 0.0)) throw DomainError("flatness needs a positive median");
  return (v.back() - v.front()) / median;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigurationError("Spearman needs two equal lists of length >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const auto n = static_cast<double>(rx.size());
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace idm
