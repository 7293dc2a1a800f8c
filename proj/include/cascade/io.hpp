#pragma once

// File formats and serialization for the CLI pipeline.
//
// Graphs are read either as edge-list text
//
//   # comment
//   nodes N
//   receiver sender weight
//
// or as the JSON equivalent {"nodes": N, "edges": [{"to":i,"from":j,"w":x}]}.
// All emitted JSON uses a fixed key order and prints floating-point values
// with 17 significant digits, so identical inputs produce byte-identical
// outputs.

#include "cascade/decompose.hpp"
#include "cascade/graph.hpp"
#include "cascade/models.hpp"
#include "cascade/simulate.hpp"
#include "cascade/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cascade::io {

using Digraph = DirectedGraph<double>;

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Plain files

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit hash, hex encoded; used to fingerprint input files.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

// ---------------------------------------------------------------------------
// Graph input

Digraph parse_graph_text(const std::string& content);
Digraph parse_graph_json(const std::string& content);
/// Sniffs the format: JSON if the first non-space byte is '{'.
Digraph parse_graph(const std::string& content);
Digraph read_graph(const std::string& path);

// ---------------------------------------------------------------------------
// Simulation config

struct SimulationConfig {
  std::string graph_path;
  Digraph graph{1, {}};
  std::vector<NodeModel> models;
  std::optional<Eigen::VectorXd> x0;  // explicit initial state
  double x0_box = 0.0;                // otherwise uniform in [-box, box]^dim
  double dt = 1e-3;
  double t_end = 10.0;
  double threshold = 1e6;
  bool monitor = false;
  std::uint64_t seed = 0;
  std::vector<ExogenousInput> inputs;
};

/// Parses a config file; the graph path is resolved relative to the config
/// file's directory.
SimulationConfig load_config(const std::string& path);

/// Certification config: {"model": <catalog name or custom object>,
/// "box": radius?, "samples": count?}. box <= 0 means "use the default".
struct CertifyConfig {
  NodeModel model;
  double box = 0.0;
  long samples = 10000;
};
CertifyConfig load_certify_config(const std::string& path);

// ---------------------------------------------------------------------------
// JSON output

/// Streaming JSON writer with caller-controlled key order. Doubles are
/// formatted with "%.17g".
class JsonWriter {
 public:
  void begin_object();
  void end_object();
  void begin_array();
  void end_array();
  void key(std::string_view k);
  void value(double v);
  void value(long long v);
  void value(std::uint64_t v);
  void value(int v) { value(static_cast<long long>(v)); }
  void value(Index v) { value(static_cast<long long>(v)); }
  void value(bool v);
  void value(std::string_view v);
  void null_value();

  template <typename T>
  void kv(std::string_view k, const T& v) {
    key(k);
    value(v);
  }

  void vector_value(const Eigen::VectorXd& v);
  void matrix_value(const Eigen::MatrixXd& m);

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void comma();
  void value_string_raw(std::string_view v);
  std::string out_;
  std::vector<bool> has_item_;
  bool pending_key_ = false;
};

std::string format_double(double v);

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> input_paths;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> output_paths;
  std::string tool_version = kToolVersion;
};

void write_manifest(JsonWriter& w, const RunManifest& manifest);

std::string decomposition_json(const BlockDecomposition<double>& dec,
                               const DecompositionReport& report,
                               const std::vector<std::optional<SpectralCertificate<double>>>& certs,
                               const RunManifest& manifest);

std::string certificate_json(const std::string& model_name, const Certificate& cert,
                             const RunManifest& manifest);

std::string verdict_json(const BoundednessVerdict& verdict, const Trajectory& traj,
                         const std::optional<MonitorReport>& monitor,
                         const RunManifest& manifest);

/// CSV rows t, x_1 .. x_{N*n}; the manifest rides along in a leading `#`
/// comment line.
std::string trajectory_csv(const Trajectory& traj, const RunManifest& manifest);

}  // namespace cascade::io
