#include "cascade/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cascade::io {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(std::size_t line, const std::string& message) {
  throw Error(errc::parse_error, "line " + std::to_string(line) + ": " + message);
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(errc::io_error, "short write to '" + path + "'");
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

// ---------------------------------------------------------------------------
// Graph input

Digraph parse_graph_text(const std::string& content) {
  std::istringstream in(content);
  std::string raw;
  std::size_t line_no = 0;
  Index nodes = -1;
  std::vector<Edge<double>> edges;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;  // blank or comment-only

    if (nodes < 0) {
      if (first != "nodes") parse_fail(line_no, "expected header 'nodes N'");
      if (!(fields >> nodes) || nodes <= 0) parse_fail(line_no, "invalid node count");
      std::string extra;
      if (fields >> extra) parse_fail(line_no, "trailing token '" + extra + "' after node count");
      continue;
    }

    Index to = 0, from = 0;
    double weight = 0.0;
    std::istringstream edge_fields(line);
    if (!(edge_fields >> to >> from >> weight)) {
      parse_fail(line_no, "expected 'receiver sender weight', got '" + first + " ...'");
    }
    std::string extra;
    if (edge_fields >> extra) parse_fail(line_no, "trailing token '" + extra + "'");
    edges.push_back({to, from, weight});
  }
  if (nodes < 0) throw Error(errc::parse_error, "missing 'nodes N' header");
  try {
    return Digraph(nodes, std::move(edges));
  } catch (const Error& e) {
    throw Error(e.code(), std::string("edge list: ") + e.what());
  }
}

Digraph parse_graph_json(const std::string& content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::exception& e) {
    throw Error(errc::parse_error, e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes")) {
    throw Error(errc::parse_error, "graph JSON needs a 'nodes' field");
  }
  const Index nodes = doc.at("nodes").get<Index>();
  std::vector<Edge<double>> edges;
  for (const auto& e : doc.value("edges", json::array())) {
    if (!e.contains("to") || !e.contains("from") || !e.contains("w")) {
      throw Error(errc::parse_error, "each edge needs fields to, from, w");
    }
    edges.push_back({e.at("to").get<Index>(), e.at("from").get<Index>(), e.at("w").get<double>()});
  }
  return Digraph(nodes, std::move(edges));
}

Digraph parse_graph(const std::string& content) {
  for (char c : content) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parse_graph_json(content) : parse_graph_text(content);
  }
  throw Error(errc::parse_error, "empty graph file");
}

Digraph read_graph(const std::string& path) { return parse_graph(read_file(path)); }

// ---------------------------------------------------------------------------
// Simulation config

namespace {

NodeModel model_from_json(const json& value) {
  if (value.is_string()) return builtin_model(value.get<std::string>());
  if (!value.is_object()) {
    throw Error(errc::parse_error, "model must be a catalog name or an object");
  }
  if (!value.contains("f")) {
    // named catalog entry with optional overrides later; for now name only
    if (value.contains("name")) return builtin_model(value.at("name").get<std::string>());
    throw Error(errc::parse_error, "custom model needs 'f' coefficients");
  }
  for (const char* field : {"H", "psi", "rho"}) {
    if (!value.contains(field)) {
      throw Error(errc::parse_error,
                  std::string("custom model needs explicit '") + field + "' data");
    }
  }
  return polynomial_model(value.value("name", std::string("custom")),
                          value.at("f").get<std::vector<double>>(),
                          value.at("H").get<std::vector<double>>(),
                          value.at("psi").get<std::vector<double>>(),
                          value.at("rho").get<double>());
}

Signal signal_from_json(const json& value) {
  const std::string type = value.value("type", std::string("constant"));
  if (type == "constant") {
    const auto v = value.at("value").get<std::vector<double>>();
    return ConstantSignal{Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()))};
  }
  if (type == "sinusoid") {
    const auto a = value.at("amplitude").get<std::vector<double>>();
    SinusoidSignal s;
    s.amplitude = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Index>(a.size()));
    s.omega = value.value("omega", 1.0);
    s.phase = value.value("phase", 0.0);
    return s;
  }
  throw Error(errc::parse_error, "unknown signal type '" + type + "'");
}

}  // namespace

SimulationConfig load_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(errc::parse_error, std::string("config: ") + e.what());
  }

  SimulationConfig config;
  if (!doc.contains("graph")) throw Error(errc::parse_error, "config needs a 'graph' path");
  const auto dir = std::filesystem::path(path).parent_path();
  config.graph_path = (dir / doc.at("graph").get<std::string>()).string();
  config.graph = read_graph(config.graph_path);
  const Index n_nodes = config.graph.node_count();

  const json models = doc.value("models", json("cubic"));
  if (models.is_array()) {
    if (static_cast<Index>(models.size()) != n_nodes) {
      throw Error(errc::parse_error, "models array must list one model per node");
    }
    for (const auto& m : models) config.models.push_back(model_from_json(m));
  } else {
    const NodeModel one = model_from_json(models);
    config.models.assign(static_cast<std::size_t>(n_nodes), one);
  }

  config.dt = doc.value("dt", 1e-3);
  config.t_end = doc.value("t_end", 10.0);
  config.threshold = doc.value("threshold", 1e6);
  config.monitor = doc.value("monitor", false);
  config.seed = doc.value("seed", std::uint64_t{0});

  const Index dim = n_nodes * config.models.front().state_dim;
  if (doc.contains("x0")) {
    const json& x0 = doc.at("x0");
    if (x0.is_array()) {
      const auto values = x0.get<std::vector<double>>();
      if (static_cast<Index>(values.size()) != dim) {
        throw Error(errc::parse_error,
                    "x0 needs " + std::to_string(dim) + " entries, got " +
                        std::to_string(values.size()));
      }
      config.x0 = Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
    } else if (x0.is_object() && x0.contains("box")) {
      config.x0_box = x0.at("box").get<double>();
      if (!(config.x0_box > 0.0)) throw Error(errc::parse_error, "x0 box must be positive");
    } else {
      throw Error(errc::parse_error, "x0 must be an array or {\"box\": radius}");
    }
  } else {
    config.x0_box = 1.0;
  }

  for (const auto& input : doc.value("inputs", json::array())) {
    ExogenousInput in;
    const auto rows = input.at("B").get<std::vector<std::vector<double>>>();
    if (static_cast<Index>(rows.size()) != n_nodes) {
      throw Error(errc::parse_error, "input B needs one row per node");
    }
    const Index cols = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    in.B.resize(n_nodes, cols);
    for (Index r = 0; r < n_nodes; ++r) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(r)].size()) != cols) {
        throw Error(errc::parse_error, "input B rows must have equal length");
      }
      for (Index c = 0; c < cols; ++c) in.B(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    in.signal = signal_from_json(input.at("signal"));
    config.inputs.push_back(std::move(in));
  }
  return config;
}

CertifyConfig load_certify_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(errc::parse_error, std::string("config: ") + e.what());
  }
  if (!doc.contains("model")) throw Error(errc::parse_error, "config needs a 'model' field");
  CertifyConfig config;
  config.model = model_from_json(doc.at("model"));
  config.box = doc.value("box", 0.0);
  config.samples = doc.value("samples", 10000L);
  return config;
}

// ---------------------------------------------------------------------------
// JSON output

std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void JsonWriter::comma() {
  if (!has_item_.empty() && has_item_.back() && !pending_key_) out_ += ',';
  if (!has_item_.empty()) has_item_.back() = true;
  pending_key_ = false;
}

void JsonWriter::value_string_raw(std::string_view v) {
  out_ += '"';
  for (char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      case '\r': out_ += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
}

void JsonWriter::begin_object() {
  comma();
  out_ += '{';
  has_item_.push_back(false);
}

void JsonWriter::end_object() {
  out_ += '}';
  has_item_.pop_back();
}

void JsonWriter::begin_array() {
  comma();
  out_ += '[';
  has_item_.push_back(false);
}

void JsonWriter::end_array() {
  out_ += ']';
  has_item_.pop_back();
}

void JsonWriter::key(std::string_view k) {
  comma();
  value_string_raw(k);
  out_ += ':';
  pending_key_ = true;
}

void JsonWriter::value(double v) {
  comma();
  out_ += format_double(v);
}

void JsonWriter::value(long long v) {
  comma();
  out_ += std::to_string(v);
}

void JsonWriter::value(std::uint64_t v) {
  comma();
  out_ += std::to_string(v);
}

void JsonWriter::value(bool v) {
  comma();
  out_ += v ? "true" : "false";
}

void JsonWriter::value(std::string_view v) {
  comma();
  value_string_raw(v);
}

void JsonWriter::null_value() {
  comma();
  out_ += "null";
}

void JsonWriter::vector_value(const Eigen::VectorXd& v) {
  begin_array();
  for (Index i = 0; i < v.size(); ++i) value(v[i]);
  end_array();
}

void JsonWriter::matrix_value(const Eigen::MatrixXd& m) {
  begin_array();
  for (Index r = 0; r < m.rows(); ++r) {
    begin_array();
    for (Index c = 0; c < m.cols(); ++c) value(m(r, c));
    end_array();
  }
  end_array();
}

void write_manifest(JsonWriter& w, const RunManifest& manifest) {
  w.begin_object();
  w.kv("subcommand", std::string_view(manifest.subcommand));
  w.key("inputs");
  w.begin_array();
  for (const auto& p : manifest.input_paths) w.value(std::string_view(p));
  w.end_array();
  w.kv("config_hash", std::string_view(manifest.config_hash));
  w.kv("seed", manifest.seed);
  w.key("outputs");
  w.begin_array();
  for (const auto& p : manifest.output_paths) w.value(std::string_view(p));
  w.end_array();
  w.kv("tool_version", std::string_view(manifest.tool_version));
  w.end_object();
}

std::string decomposition_json(const BlockDecomposition<double>& dec,
                               const DecompositionReport& report,
                               const std::vector<std::optional<SpectralCertificate<double>>>& certs,
                               const RunManifest& manifest) {
  JsonWriter w;
  w.begin_object();
  w.key("manifest");
  write_manifest(w, manifest);
  w.kv("nodes", dec.node_count());
  w.kv("block_count", dec.block_count());
  w.key("permutation");
  w.begin_array();
  for (Index v : dec.permutation) w.value(v);
  w.end_array();
  w.key("block_sizes");
  w.begin_array();
  for (Index s : dec.block_sizes) w.value(s);
  w.end_array();
  w.key("trace");
  w.begin_array();
  for (BlockOrigin o : dec.trace) w.value(std::string_view(to_string(o)));
  w.end_array();

  w.key("blocks");
  w.begin_array();
  for (Index i = 0; i < dec.block_count(); ++i) {
    w.begin_object();
    w.kv("index", i);
    w.key("nodes");
    w.begin_array();
    for (Index v : dec.block_nodes(i)) w.value(v);
    w.end_array();
    w.key("A");
    w.matrix_value(dec.diagonal_blocks[static_cast<std::size_t>(i)]);
    w.key("L");
    w.matrix_value(dec.laplacian_parts[static_cast<std::size_t>(i)]);
    w.key("D");
    w.vector_value(dec.degree_parts[static_cast<std::size_t>(i)]);
    w.key("coupling");
    w.begin_array();
    for (const auto& A : dec.coupling_blocks[static_cast<std::size_t>(i)]) w.matrix_value(A);
    w.end_array();
    w.key("spectral");
    if (i < static_cast<Index>(certs.size()) && certs[static_cast<std::size_t>(i)]) {
      const auto& cert = *certs[static_cast<std::size_t>(i)];
      w.begin_object();
      w.key("mu");
      w.vector_value(cert.mu);
      w.kv("residual", cert.residual);
      w.kv("min_sym_eig", cert.min_sym_eig);
      w.end_object();
    } else {
      w.null_value();
    }
    w.end_object();
  }
  w.end_array();

  w.key("report");
  w.begin_object();
  w.kv("all_pass", report.all_pass());
  w.key("checks");
  w.begin_array();
  for (const auto& check : report.checks) {
    w.begin_object();
    w.kv("name", std::string_view(check.name));
    w.kv("pass", check.pass);
    w.kv("residual", check.residual);
    w.end_object();
  }
  w.end_array();
  w.end_object();

  w.end_object();
  return w.take() + "\n";
}

std::string certificate_json(const std::string& model_name, const Certificate& cert,
                             const RunManifest& manifest) {
  JsonWriter w;
  w.begin_object();
  w.key("manifest");
  write_manifest(w, manifest);
  w.kv("model", std::string_view(model_name));
  w.kv("pass", cert.pass);
  w.kv("worst_violation", cert.worst_violation);
  w.key("worst_state");
  w.vector_value(cert.worst_state);
  w.key("violated_inequality");
  if (cert.violated.empty()) {
    w.null_value();
  } else {
    w.value(std::string_view(cert.violated));
  }
  w.kv("samples", static_cast<long long>(cert.sample_count));
  w.kv("box_radius", cert.box_radius);
  w.kv("tolerance", cert.tolerance);
  w.end_object();
  return w.take() + "\n";
}

std::string verdict_json(const BoundednessVerdict& verdict, const Trajectory& traj,
                         const std::optional<MonitorReport>& monitor,
                         const RunManifest& manifest) {
  JsonWriter w;
  w.begin_object();
  w.key("manifest");
  write_manifest(w, manifest);
  w.kv("bounded", verdict.bounded);
  w.kv("sup_norm", verdict.sup_norm);
  w.kv("time_of_sup", verdict.time_of_sup);
  w.kv("threshold", verdict.threshold);
  w.key("divergence_time");
  if (traj.divergence_time) {
    w.value(*traj.divergence_time);
  } else {
    w.null_value();
  }
  w.kv("samples", traj.sample_count());
  w.kv("dt", traj.dt);
  w.key("node_sup");
  w.vector_value(traj.node_sup);
  w.key("monitor");
  if (monitor) {
    w.begin_object();
    w.kv("rho_bar", monitor->rho_bar);
    w.kv("tolerance", monitor->tolerance);
    w.kv("violation_count", monitor->violation_count());
    w.key("violation_times");
    w.begin_array();
    for (Index k : monitor->violation_samples) w.value(traj.time_at(k));
    w.end_array();
    w.kv("empirical_radius", monitor->empirical_radius);
    w.key("v_sigma");
    w.vector_value(monitor->v_sigma);
    w.key("v_sigma_dot");
    w.vector_value(monitor->v_sigma_dot);
    w.end_object();
  } else {
    w.null_value();
  }
  w.end_object();
  return w.take() + "\n";
}

std::string trajectory_csv(const Trajectory& traj, const RunManifest& manifest) {
  JsonWriter mw;
  write_manifest(mw, manifest);
  std::string out = "# manifest " + mw.take() + "\n";
  out += "t";
  for (Index c = 0; c < traj.states.cols(); ++c) {
    out += ",x" + std::to_string(c + 1);
  }
  out += "\n";
  char buf[40];
  for (Index k = 0; k < traj.sample_count(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.time_at(k));
    out += buf;
    for (Index c = 0; c < traj.states.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.states(k, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace cascade::io
