// cascade: decompose directed-graph Laplacians into cascade block
// lower-triangular form, certify semi-passivity of node models, and verify
// network boundedness by simulation.
//
// Exit codes, uniform across subcommands:
//   0  success / property verified
//   1  usage, I/O, or input validation error
//   2  graph precondition failed (no directed spanning tree)
//   3  property violated (divergence detected, certification failed)

#include "cascade/io.hpp"
#include "cascade/scc.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <thread>

namespace {

using namespace cascade;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitViolation = 3;

int exit_code_for(const Error& e) {
  return e.code() == errc::no_spanning_tree ? kExitPrecondition : kExitUsage;
}

/// Relative output paths may be redirected by CASCADE_OUT_DIR.
std::string resolve_out(const std::string& path) {
  const char* dir = std::getenv("CASCADE_OUT_DIR");
  if (dir == nullptr || *dir == '\0' || std::filesystem::path(path).is_absolute()) {
    return path;
  }
  return (std::filesystem::path(dir) / path).string();
}

/// Uniform in [-box, box]; bit-reproducible across library implementations.
double uniform_box(std::mt19937_64& rng, double box) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
  return box * (2.0 * u - 1.0);
}

int cmd_decompose(const std::string& graph_path, const std::string& out_path) {
  const std::string bytes = io::read_file(graph_path);
  const io::Digraph graph = io::parse_graph(bytes);
  const auto dec = block_triangularize(graph);
  const auto report = verify_decomposition(graph, dec);

  std::vector<std::optional<SpectralCertificate<double>>> certs;
  for (Index i = 0; i < dec.block_count(); ++i) {
    try {
      certs.emplace_back(left_null_vector(dec.laplacian_parts[static_cast<std::size_t>(i)]));
    } catch (const Error&) {
      certs.emplace_back(std::nullopt);
    }
  }

  io::RunManifest manifest;
  manifest.subcommand = "decompose";
  manifest.input_paths = {graph_path};
  manifest.config_hash = io::hex64(io::fnv1a(bytes));
  if (!out_path.empty()) manifest.output_paths = {resolve_out(out_path)};

  const std::string json = io::decomposition_json(dec, report, certs, manifest);
  if (out_path.empty()) {
    std::cout << json;
  } else {
    io::write_file(resolve_out(out_path), json);
  }
  return report.all_pass() ? kExitOk : kExitViolation;
}

int cmd_certify(const std::string& model_name, const std::string& config_path, double box,
                long samples, bool samples_given, const std::string& out_path) {
  NodeModel model;
  std::string input_path;
  std::string hash_bytes;
  if (!config_path.empty()) {
    hash_bytes = io::read_file(config_path);
    input_path = config_path;
    const io::CertifyConfig config = io::load_certify_config(config_path);
    model = config.model;
    if (box <= 0.0) box = config.box;
    if (!samples_given) samples = config.samples;
  } else {
    model = builtin_model(model_name);
    hash_bytes = model_name;
  }
  if (box <= 0.0) box = 5.0 * model.rho;

  const Certificate cert = certify_semipassivity(model, box, samples);

  io::RunManifest manifest;
  manifest.subcommand = "certify";
  if (!input_path.empty()) manifest.input_paths = {input_path};
  manifest.config_hash = io::hex64(io::fnv1a(hash_bytes));
  if (!out_path.empty()) manifest.output_paths = {resolve_out(out_path)};

  const std::string json = io::certificate_json(model.name, cert, manifest);
  std::cout << json;
  if (!out_path.empty()) io::write_file(resolve_out(out_path), json);
  return cert.pass ? kExitOk : kExitViolation;
}

struct SimulateOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt, t_end, threshold;
};

int run_one_simulation(const io::SimulationConfig& config, const std::string& config_path,
                       const std::string& config_bytes, std::uint64_t seed,
                       const std::string& out_prefix) {
  NetworkSystem sys(config.graph, config.models, config.inputs);

  Eigen::VectorXd x0;
  if (config.x0) {
    x0 = *config.x0;
  } else {
    std::mt19937_64 rng(seed);
    x0.resize(sys.total_dim());
    for (Index i = 0; i < x0.size(); ++i) x0[i] = uniform_box(rng, config.x0_box);
  }

  Trajectory traj = simulate(sys, x0, config.t_end, config.dt, config.threshold);
  const BoundednessVerdict verdict = boundedness_verdict(traj, config.threshold);

  std::optional<MonitorReport> monitor;
  if (config.monitor) {
    const auto cert = left_null_vector(MatrixX<double>(sys.laplacian_matrix()));
    monitor = lyapunov_monitor(traj, sys, cert.mu);
    traj.v_sigma = monitor->v_sigma;
  }

  io::RunManifest manifest;
  manifest.subcommand = "simulate";
  manifest.input_paths = {config_path, config.graph_path};
  manifest.config_hash = io::hex64(io::fnv1a(config_bytes));
  manifest.seed = seed;
  const std::string csv_path = resolve_out(out_prefix + ".csv");
  const std::string json_path = resolve_out(out_prefix + ".json");
  manifest.output_paths = {csv_path, json_path};

  io::write_file(csv_path, io::trajectory_csv(traj, manifest));
  io::write_file(json_path, io::verdict_json(verdict, traj, monitor, manifest));
  return verdict.bounded ? kExitOk : kExitViolation;
}

int cmd_simulate(const std::string& config_path, const SimulateOverrides& overrides,
                 const std::string& out_prefix, int batch) {
  const std::string config_bytes = io::read_file(config_path);
  io::SimulationConfig config = io::load_config(config_path);
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.dt) config.dt = *overrides.dt;
  if (overrides.t_end) config.t_end = *overrides.t_end;
  if (overrides.threshold) config.threshold = *overrides.threshold;

  if (config.monitor) {
    // The Lyapunov monitor needs the positive left null vector, which only
    // exists for strongly connected coupling; reject early with a clear
    // message instead of failing mid-run.
    if (strongly_connected_components(config.graph).components.size() != 1) {
      throw Error(errc::not_strongly_connected,
                  "monitor=true needs a strongly connected graph");
    }
  }

  if (batch <= 1) {
    return run_one_simulation(config, config_path, config_bytes, config.seed, out_prefix);
  }

  // Independent seeds; shared inputs are immutable, every run owns its
  // buffers and output files.
  std::vector<int> results(static_cast<std::size_t>(batch), kExitUsage);
  std::atomic<int> next{0};
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(batch));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int k = next.fetch_add(1); k < batch; k = next.fetch_add(1)) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(k);
        const std::string prefix = out_prefix + "_seed" + std::to_string(seed);
        try {
          results[static_cast<std::size_t>(k)] =
              run_one_simulation(config, config_path, config_bytes, seed, prefix);
        } catch (...) {
          results[static_cast<std::size_t>(k)] = kExitUsage;
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  int worst = kExitOk;
  for (int r : results) worst = std::max(worst, r);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascade decomposition and boundedness verification for directed networks"};
  app.set_version_flag("--version", std::string(cascade::io::kToolVersion));
  app.require_subcommand(1);

  std::string graph_path, config_path, out_path, model_name;
  SimulateOverrides overrides;
  double box = 0.0;
  long samples = 10000;
  int batch = 1;

  auto* decompose = app.add_subcommand(
      "decompose", "block lower-triangular cascade form of the graph Laplacian");
  decompose->add_option("--graph", graph_path, "edge-list or JSON graph file")->required();
  decompose->add_option("--out", out_path, "output JSON path (default: stdout)");

  auto* certify = app.add_subcommand("certify", "semi-passivity certificate for a node model");
  certify->add_option("model", model_name, "catalog model name");
  certify->add_option("--config", config_path, "config file with a custom model");
  certify->add_option("--box", box, "sampling box radius (default 5*rho)");
  auto* samples_opt = certify->add_option("--samples", samples, "sample count (default 10000)");
  certify->add_option("--out", out_path, "also write the certificate JSON here");

  auto* simulate_cmd = app.add_subcommand("simulate", "integrate a network and judge boundedness");
  simulate_cmd->add_option("--config", config_path, "simulation config JSON")->required();
  simulate_cmd->add_option("--out", out_path, "output prefix (default 'cascade_run')");
  std::uint64_t seed_flag = 0;
  double dt_flag = 0.0, t_end_flag = 0.0, threshold_flag = 0.0;
  auto* seed_opt = simulate_cmd->add_option("--seed", seed_flag, "random seed for x0 sampling");
  auto* dt_opt = simulate_cmd->add_option("--dt", dt_flag, "integration step");
  auto* tend_opt = simulate_cmd->add_option("--t-end", t_end_flag, "horizon");
  auto* thr_opt = simulate_cmd->add_option("--threshold", threshold_flag, "escape threshold");
  simulate_cmd->add_option("--batch", batch, "run K independent seeds in parallel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (decompose->parsed()) {
      return cmd_decompose(graph_path, out_path);
    }
    if (certify->parsed()) {
      if (model_name.empty() && config_path.empty()) {
        std::cerr << "certify: give a catalog model name or --config" << std::endl;
        return kExitUsage;
      }
      return cmd_certify(model_name, config_path, box, samples, samples_opt->count() > 0,
                         out_path);
    }
    if (simulate_cmd->parsed()) {
      if (seed_opt->count() > 0) overrides.seed = seed_flag;
      if (dt_opt->count() > 0) overrides.dt = dt_flag;
      if (tend_opt->count() > 0) overrides.t_end = t_end_flag;
      if (thr_opt->count() > 0) overrides.threshold = threshold_flag;
      if (out_path.empty()) out_path = "cascade_run";
      return cmd_simulate(config_path, overrides, out_path, batch);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  }
  return kExitUsage;
}
