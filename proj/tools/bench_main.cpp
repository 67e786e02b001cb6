#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idm/bench.hpp"
#include "idm/errors.hpp"
#include "idm/io.hpp"
#include "idm/sampler.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRunFailure = 4;

struct Overrides {
  std::string config_path;
  std::vector<long long> n_list;
  std::vector<int> d_list;
  std::optional<double> c0;
  std::optional<long long> m_proxy;
  std::vector<std::uint64_t> seeds;
  std::string path_mode;
  std::string out;
  std::optional<int> workers;
  bool no_wall_time = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--n-list", o.n_list, "training sizes")->delimiter(',');
  cmd->add_option("--d-list", o.d_list, "ambient dimensions")->delimiter(',');
  cmd->add_option("--c0", o.c0, "bandwidth constant");
  cmd->add_option("--m-proxy", o.m_proxy, "samples per method and truth proxy");
  cmd->add_option("--seeds", o.seeds, "seed list")->delimiter(',');
  cmd->add_option("--path-mode", o.path_mode, "short_circuit or full_ode");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "threads (0 = all cores)");
  cmd->add_flag("--no-wall-time", o.no_wall_time, "write wall_time_ms as 0");
}

idm::ExperimentConfig build_config(idm::ExperimentKind kind, const Overrides& o) {
  idm::ExperimentConfig cfg = idm::ExperimentConfig::defaults(kind);
  if (!o.config_path.empty()) {
    from_json(idm::read_json(o.config_path), cfg);
    if (cfg.experiment != kind)
      throw idm::ConfigurationError("config is for '" + idm::to_string(cfg.experiment) + "', not '" +
                                    idm::to_string(kind) + "'");
  }
  if (!o.n_list.empty()) cfg.n_list = o.n_list;
  if (!o.d_list.empty()) cfg.d_list = o.d_list;
  if (o.c0) cfg.c0 = *o.c0;
  if (o.m_proxy) cfg.m_proxy = *o.m_proxy;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.path_mode.empty()) cfg.path_mode = idm::path_mode_from_string(o.path_mode);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.no_wall_time) cfg.record_wall_time = false;
  cfg.validate();
  return cfg;
}

int run_experiment(idm::ExperimentKind kind, const Overrides& o) {
  const idm::ExperimentConfig cfg = build_config(kind, o);
  const idm::ExperimentResult result =
      kind == idm::ExperimentKind::Rate ? idm::run_rate_experiment(cfg) : idm::run_dimension_experiment(cfg);
  idm::write_experiment_outputs(cfg, result);
  std::cout << result.summary.dump(2) << '\n';
  return idm::exit_code_for(result);
}

struct SampleArgs {
  std::string data;
  std::string out = "samples.csv";
  long long count = 1000;
  std::uint64_t seed = 0;
  double c0 = 0.8;
  int intrinsic_dim = 0;
  std::string path_mode = "short_circuit";
  std::string init_mode = "empirical_pt";
  int ode_steps = 200;
  int workers = 0;
};

int run_sample(const SampleArgs& a) {
  const idm::DataSet data = idm::load_dataset(a.data);
  int d = a.intrinsic_dim;
  double diameter = 0.0;
  if (data.spec) {
    if (d == 0) d = data.spec->intrinsic_dim;
    diameter = data.spec->diameter();
  } else {
    if (d == 0) throw idm::ConfigurationError("data has no sidecar; pass --intrinsic-dim");
    const idm::PointMatrix& x = data.points;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      diameter = std::max(diameter, (x.rowwise() - x.row(i)).rowwise().norm().maxCoeff());
  }
  idm::SamplerConfig cfg = idm::make_sampler_config(a.c0, d, data.size(), static_cast<int>(data.dim()), diameter,
                                                    idm::path_mode_from_string(a.path_mode));
  cfg.init_mode = idm::init_mode_from_string(a.init_mode);
  cfg.ode_steps = a.ode_steps;
  if (cfg.plan.large_bandwidth) std::cerr << "warning: sigma' >= 1 for this n and C0\n";
  const idm::SampleBatch batch = idm::idm_sample(data, cfg, a.count, a.seed, a.workers);
  idm::save_batch(batch, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inertial diffusion model experiments"};
  app.require_subcommand(1);

  Overrides rate_o, dim_o, demo_o, field_o;
  CLI::App* rate = app.add_subcommand("rate", "W1 against n for IDM and the memorized baseline");
  add_common(rate, rate_o);
  CLI::App* dim = app.add_subcommand("dim", "W1 against the ambient dimension at fixed n");
  add_common(dim, dim_o);

  CLI::App* demo = app.add_subcommand("circle-demo", "training, early-stopped and updated points on the circle");
  demo->add_option("--config", demo_o.config_path)->check(CLI::ExistingFile);
  demo->add_option("--seeds", demo_o.seeds)->delimiter(',');
  demo->add_option("--out", demo_o.out);

  CLI::App* field = app.add_subcommand("score-field", "empirical score on a grid around the circle in R^2");
  field->add_option("--config", field_o.config_path)->check(CLI::ExistingFile);
  field->add_option("--seeds", field_o.seeds)->delimiter(',');
  field->add_option("--out", field_o.out);

  SampleArgs sa;
  CLI::App* sample = app.add_subcommand("sample", "IDM batch from a data CSV");
  sample->add_option("--data", sa.data, "points CSV (sidecar optional)")->required()->check(CLI::ExistingFile);
  sample->add_option("--out", sa.out);
  sample->add_option("--count", sa.count)->check(CLI::PositiveNumber);
  sample->add_option("--seed", sa.seed);
  sample->add_option("--c0", sa.c0);
  sample->add_option("--intrinsic-dim", sa.intrinsic_dim);
  sample->add_option("--path-mode", sa.path_mode);
  sample->add_option("--init-mode", sa.init_mode);
  sample->add_option("--ode-steps", sa.ode_steps);
  sample->add_option("--workers", sa.workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*rate) return run_experiment(idm::ExperimentKind::Rate, rate_o);
    if (*dim) return run_experiment(idm::ExperimentKind::Dimension, dim_o);
    if (*demo) {
      const auto cfg = build_config(idm::ExperimentKind::CircleDemo, demo_o);
      idm::write_circle_demo(cfg.output_dir, idm::run_circle_demo(cfg, cfg.seeds.front()));
      return 0;
    }
    if (*field) {
      const auto cfg = build_config(idm::ExperimentKind::ScoreField, field_o);
      idm::write_score_field(cfg.output_dir / "score_field.csv", idm::run_score_field(cfg, cfg.seeds.front()));
      return 0;
    }
    if (*sample) return run_sample(sa);
  } catch (const idm::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const idm::UnsupportedError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return 0;
}
