#pragma once

// Fixed-step RK4 integration of diffusively coupled networks
//
//   xdot = F(x) - (L (x) I_n) x - (D (x) I_n) x + sum_j (B_j (x) I_n) v_j(t),
//
// plus the per-block cascade integration that replays the block
// lower-triangular form: block i sees the already-integrated upstream
// blocks through its coupling blocks A_ij.
//
// The coupling term is accumulated row by row in ascending column order,
// both here and in the cascade, and the cascade feeds downstream blocks the
// recorded RK4 *stage* states of upstream blocks. The cascade of a permuted
// system is then the same arithmetic as the full integration, merely
// rescheduled, so the two trajectories agree to the last bit.

#include "cascade/decompose.hpp"
#include "cascade/graph.hpp"
#include "cascade/models.hpp"
#include "cascade/types.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cascade {

// ---------------------------------------------------------------------------
// Exogenous signals

struct ConstantSignal {
  Eigen::VectorXd value;
};

/// value[c] * sin(omega * t + phase), per channel.
struct SinusoidSignal {
  Eigen::VectorXd amplitude;
  Real omega = 1.0;
  Real phase = 0.0;
};

/// Time series on a uniform grid, linearly interpolated between samples and
/// clamped at the ends.
struct RecordedSignal {
  Real t0 = 0.0;
  Real dt = 0.0;
  Eigen::MatrixXd samples;  // row k = value at t0 + k*dt

  Eigen::VectorXd at(Real t) const {
    const Index rows = samples.rows();
    if (rows == 1) return samples.row(0).transpose();
    const Real s = (t - t0) / dt;
    if (s <= 0.0) return samples.row(0).transpose();
    if (s >= static_cast<Real>(rows - 1)) return samples.row(rows - 1).transpose();
    const Index k = static_cast<Index>(s);
    const Real w = s - static_cast<Real>(k);
    return (1.0 - w) * samples.row(k).transpose() + w * samples.row(k + 1).transpose();
  }
};

using Signal = std::variant<ConstantSignal, SinusoidSignal, RecordedSignal>;

inline Eigen::VectorXd eval_signal(const Signal& sig, Real t) {
  if (const auto* c = std::get_if<ConstantSignal>(&sig)) return c->value;
  if (const auto* s = std::get_if<SinusoidSignal>(&sig)) {
    return s->amplitude * std::sin(s->omega * t + s->phase);
  }
  return std::get<RecordedSignal>(sig).at(t);
}

inline Index signal_channels(const Signal& sig, Index state_dim) {
  if (const auto* c = std::get_if<ConstantSignal>(&sig)) return c->value.size() / state_dim;
  if (const auto* s = std::get_if<SinusoidSignal>(&sig)) return s->amplitude.size() / state_dim;
  return std::get<RecordedSignal>(sig).samples.cols() / state_dim;
}

// ---------------------------------------------------------------------------
// Network system

struct ExogenousInput {
  Eigen::MatrixXd B;  // N x M, nonnegative entries
  Signal signal;      // produces M * state_dim values
};

/// Coupled network: per-node models (all sharing one state dimension), a
/// Laplacian, and optional bounded inputs. The damping D = diag[d_k] is
/// always derived from the inputs, d_k = sum_j sum_l [B_j]_kl, never taken
/// from the caller.
class NetworkSystem {
 public:
  template <typename Scalar>
  NetworkSystem(const DirectedGraph<Scalar>& g, std::vector<NodeModel> models,
                std::vector<ExogenousInput> inputs = {})
      : NetworkSystem(Eigen::MatrixXd(laplacian(g).template cast<double>()), std::move(models),
                      std::move(inputs)) {}

  NetworkSystem(Eigen::MatrixXd L, std::vector<NodeModel> models,
                std::vector<ExogenousInput> inputs = {})
      : laplacian_(std::move(L)), models_(std::move(models)), inputs_(std::move(inputs)) {
    if (laplacian_.rows() != laplacian_.cols()) {
      throw Error(errc::dimension_mismatch, "Laplacian must be square");
    }
    if (static_cast<Index>(models_.size()) != laplacian_.rows()) {
      throw Error(errc::dimension_mismatch,
                  "need one node model per graph node, got " + std::to_string(models_.size()) +
                      " for " + std::to_string(laplacian_.rows()) + " nodes");
    }
    if (models_.empty()) {
      throw Error(errc::dimension_mismatch, "network needs at least one node");
    }
    state_dim_ = models_.front().state_dim;
    for (const auto& m : models_) {
      if (m.state_dim != state_dim_) {
        throw Error(errc::dimension_mismatch,
                    "all node models in one network must share state_dim");
      }
    }
    std::vector<Eigen::MatrixXd> bs;
    bs.reserve(inputs_.size());
    for (const auto& in : inputs_) {
      if (in.B.rows() != node_count()) {
        throw Error(errc::dimension_mismatch, "input matrix B must have one row per node");
      }
      if (in.B.size() > 0 && in.B.minCoeff() < 0.0) {
        throw Error(errc::negative_weight, "input matrices B_j must be nonnegative");
      }
      if (signal_channels(in.signal, state_dim_) != in.B.cols()) {
        throw Error(errc::dimension_mismatch, "signal width must equal B columns * state_dim");
      }
      bs.push_back(in.B);
    }
    damping_ = detail::degree_from_couplings(bs, node_count());
  }

  Index node_count() const { return laplacian_.rows(); }
  Index state_dim() const { return state_dim_; }
  Index total_dim() const { return node_count() * state_dim_; }
  const Eigen::MatrixXd& laplacian_matrix() const { return laplacian_; }
  const std::vector<NodeModel>& models() const { return models_; }
  const std::vector<ExogenousInput>& inputs() const { return inputs_; }
  const Eigen::VectorXd& damping() const { return damping_; }

  /// Network right-hand side at time t.
  void rhs(Real t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    const Index n = state_dim_;
    for (Index k = 0; k < node_count(); ++k) {
      models_[static_cast<std::size_t>(k)].f(y.segment(k * n, n), dy.segment(k * n, n));
    }
    for (Index k = 0; k < node_count(); ++k) {
      for (Index c = 0; c < n; ++c) {
        Real acc = 0.0;
        for (Index j = 0; j < node_count(); ++j) acc += laplacian_(k, j) * y[j * n + c];
        dy[k * n + c] -= acc;
      }
    }
    if (damping_.size() > 0 && inputs_.size() > 0) {
      for (Index k = 0; k < node_count(); ++k) {
        for (Index c = 0; c < n; ++c) dy[k * n + c] -= damping_[k] * y[k * n + c];
      }
      for (const auto& in : inputs_) {
        const Eigen::VectorXd v = eval_signal(in.signal, t);
        for (Index k = 0; k < node_count(); ++k) {
          for (Index c = 0; c < n; ++c) {
            Real acc = 0.0;
            for (Index l = 0; l < in.B.cols(); ++l) acc += in.B(k, l) * v[l * n + c];
            dy[k * n + c] += acc;
          }
        }
      }
    }
  }

 private:
  Eigen::MatrixXd laplacian_;
  std::vector<NodeModel> models_;
  std::vector<ExogenousInput> inputs_;
  Eigen::VectorXd damping_;
  Index state_dim_ = 1;
};

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
  Real t0 = 0.0;
  Real dt = 0.0;
  Index node_count = 0;
  Index state_dim = 1;
  /// Row k = state at t0 + k*dt; includes the initial condition. Truncated
  /// after the first divergent sample when divergence_time is set.
  Eigen::MatrixXd states;
  Eigen::VectorXd node_sup;  // per node, sup_t |x_i(t)|
  std::optional<Real> divergence_time;
  std::optional<Eigen::VectorXd> v_sigma;  // filled by the Lyapunov monitor

  Index sample_count() const { return states.rows(); }
  Real time_at(Index k) const { return t0 + dt * static_cast<Real>(k); }

  Eigen::VectorXd node_state(Index sample, Index node) const {
    return states.row(sample).segment(node * state_dim, state_dim);
  }
};

struct BoundednessVerdict {
  bool bounded = false;
  Real sup_norm = 0.0;   // sup over time and nodes of |x_i(t)|
  Real time_of_sup = 0.0;
  Real threshold = 0.0;
};

namespace detail {

/// Classical RK4 with fixed step. Rhs is called as rhs(step, stage, t, y, dy)
/// with stage in {0,1,2,3}; stage_hook(step, stage, y_stage) observes every
/// state fed to rhs. Integration stops early when a sample goes nonfinite or
/// beyond escape_threshold in any coordinate.
template <typename Rhs, typename StageHook>
Trajectory rk4_integrate(Index dim, const Eigen::VectorXd& x0, Real t_end, Real dt,
                         Real escape_threshold, Rhs&& rhs, StageHook&& stage_hook) {
  if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t_end) || t_end < dt) {
    throw Error(errc::bad_time_step, "need finite dt > 0 and t_end >= dt");
  }
  if (x0.size() != dim) {
    throw Error(errc::dimension_mismatch,
                "initial state has " + std::to_string(x0.size()) + " entries, expected " +
                    std::to_string(dim));
  }
  const Index steps = static_cast<Index>(std::llround(t_end / dt));
  const Real half_dt = 0.5 * dt;
  const Real sixth_dt = dt / 6.0;

  Trajectory traj;
  traj.dt = dt;
  traj.states.resize(steps + 1, dim);
  traj.states.row(0) = x0;

  Eigen::VectorXd y = x0, k1(dim), k2(dim), k3(dim), k4(dim), stage(dim);
  for (Index step = 0; step < steps; ++step) {
    const Real t = dt * static_cast<Real>(step);
    stage_hook(step, 0, y);
    rhs(step, 0, t, y, k1);
    stage = y + half_dt * k1;
    stage_hook(step, 1, stage);
    rhs(step, 1, t + half_dt, stage, k2);
    stage = y + half_dt * k2;
    stage_hook(step, 2, stage);
    rhs(step, 2, t + half_dt, stage, k3);
    stage = y + dt * k3;
    stage_hook(step, 3, stage);
    rhs(step, 3, t + dt, stage, k4);
    y += sixth_dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    traj.states.row(step + 1) = y;
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() > escape_threshold) {
      traj.divergence_time = dt * static_cast<Real>(step + 1);
      traj.states.conservativeResize(step + 2, Eigen::NoChange);
      break;
    }
  }
  return traj;
}

inline void fill_node_sups(Trajectory& traj) {
  traj.node_sup = Eigen::VectorXd::Zero(traj.node_count);
  for (Index k = 0; k < traj.sample_count(); ++k) {
    for (Index i = 0; i < traj.node_count; ++i) {
      const Real norm = traj.states.row(k).segment(i * traj.state_dim, traj.state_dim).norm();
      if (norm > traj.node_sup[i] || std::isnan(norm)) traj.node_sup[i] = norm;
    }
  }
}

}  // namespace detail

/// Integrates the network with classical fixed-step RK4 on the grid
/// t = 0, dt, ..., round(t_end/dt)*dt.
inline Trajectory simulate(const NetworkSystem& sys, const Eigen::VectorXd& x0, Real t_end,
                           Real dt, Real escape_threshold = 1e6) {
  Trajectory traj = detail::rk4_integrate(
      sys.total_dim(), x0, t_end, dt, escape_threshold,
      [&sys](Index, Index, Real t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        sys.rhs(t, y, dy);
      },
      [](Index, Index, const Eigen::VectorXd&) {});
  traj.node_count = sys.node_count();
  traj.state_dim = sys.state_dim();
  detail::fill_node_sups(traj);
  return traj;
}

namespace detail {

/// Per-step RK4 stage states of one block, recorded so downstream blocks see
/// exactly the values the joint integration would have used.
struct StageRecord {
  // stages[s] row k = stage-s state at step k; one extra row so stage 0 of a
  // virtual step past the end exists (unused).
  std::array<Eigen::MatrixXd, 4> stages;
};

}  // namespace detail

/// Reorders an original-coordinates network state into permuted (cascade)
/// coordinates: z_k = x_{perm[k]}.
inline Eigen::VectorXd permute_state(const BlockDecomposition<double>& dec,
                                     const Eigen::VectorXd& x, Index state_dim) {
  const Index total = dec.node_count();
  if (x.size() != total * state_dim) {
    throw Error(errc::dimension_mismatch, "state size mismatch");
  }
  Eigen::VectorXd z(x.size());
  for (Index k = 0; k < total; ++k) {
    z.segment(k * state_dim, state_dim) =
        x.segment(dec.permutation[static_cast<std::size_t>(k)] * state_dim, state_dim);
  }
  return z;
}

/// Inverse of permute_state.
inline Eigen::VectorXd unpermute_state(const BlockDecomposition<double>& dec,
                                       const Eigen::VectorXd& z, Index state_dim) {
  const Index total = dec.node_count();
  if (z.size() != total * state_dim) {
    throw Error(errc::dimension_mismatch, "state size mismatch");
  }
  Eigen::VectorXd x(z.size());
  for (Index k = 0; k < total; ++k) {
    x.segment(dec.permutation[static_cast<std::size_t>(k)] * state_dim, state_dim) =
        z.segment(k * state_dim, state_dim);
  }
  return x;
}

/// Integrates the network block by block in cascade order. Block i is driven
/// by the recorded RK4 stage states of blocks j < i through the coupling
/// blocks A_ij; its own coupling is the diagonal block A_ii. The system and
/// x0 are in original coordinates; the returned per-block trajectories are
/// in permuted coordinates.
inline std::vector<Trajectory> simulate_cascade(const BlockDecomposition<double>& dec,
                                                const NetworkSystem& sys,
                                                const Eigen::VectorXd& orig_x0, Real t_end,
                                                Real dt, Real escape_threshold = 1e6) {
  const Index m = dec.block_count();
  const Index total = dec.node_count();
  if (total != sys.node_count()) {
    throw Error(errc::dimension_mismatch, "decomposition does not cover the system's graph");
  }
  if (!sys.inputs().empty()) {
    throw Error(errc::dimension_mismatch,
                "cascade integration expects the unperturbed network (no exogenous inputs)");
  }
  {
    const MatrixX<double> expected =
        apply_permutation(MatrixX<double>(sys.laplacian_matrix()), dec);
    if ((reconstruct_permuted(dec).array() != expected.array()).any()) {
      throw Error(errc::dimension_mismatch,
                  "decomposition blocks do not match the system's Laplacian");
    }
  }
  const Index n = sys.state_dim();
  std::vector<NodeModel> permuted_models;
  permuted_models.reserve(static_cast<std::size_t>(total));
  for (Index k = 0; k < total; ++k) {
    permuted_models.push_back(
        sys.models()[static_cast<std::size_t>(dec.permutation[static_cast<std::size_t>(k)])]);
  }
  const Eigen::VectorXd x0 = permute_state(dec, orig_x0, n);

  std::vector<Trajectory> blocks;
  blocks.reserve(static_cast<std::size_t>(m));
  std::vector<detail::StageRecord> records(static_cast<std::size_t>(m));

  for (Index i = 0; i < m; ++i) {
    const Index oi = dec.block_offset(i);
    const Index ni = dec.block_sizes[static_cast<std::size_t>(i)];
    const auto& Aii = dec.diagonal_blocks[static_cast<std::size_t>(i)];
    const auto& couplings = dec.coupling_blocks[static_cast<std::size_t>(i)];

    // A diverged upstream block cuts the horizon of everything below it.
    Real horizon = t_end;
    for (Index j = 0; j < i; ++j) {
      const auto& up = blocks[static_cast<std::size_t>(j)];
      if (up.divergence_time) horizon = std::min(horizon, *up.divergence_time);
    }
    if (!(horizon >= dt)) {
      Trajectory empty;
      empty.dt = dt;
      empty.node_count = ni;
      empty.state_dim = n;
      empty.states = x0.segment(oi * n, ni * n).transpose();
      empty.divergence_time = 0.0;
      detail::fill_node_sups(empty);
      blocks.push_back(std::move(empty));
      records[static_cast<std::size_t>(i)] = {};
      continue;
    }

    auto& record = records[static_cast<std::size_t>(i)];
    const Index steps = static_cast<Index>(std::llround(horizon / dt));
    const bool record_stages = i + 1 < m;  // nothing downstream of the last block
    if (record_stages) {
      for (auto& s : record.stages) s.resize(steps, ni * n);
    }

    auto rhs = [&](Index step, Index stage, Real, const Eigen::VectorXd& z,
                   Eigen::VectorXd& dz) {
      for (Index k = 0; k < ni; ++k) {
        permuted_models[static_cast<std::size_t>(oi + k)].f(z.segment(k * n, n),
                                                            dz.segment(k * n, n));
      }
      // Row accumulation in ascending permuted column order: upstream blocks
      // first (entries -A_ij), then the diagonal block. This mirrors the
      // full-system row scan exactly.
      for (Index k = 0; k < ni; ++k) {
        for (Index c = 0; c < n; ++c) {
          Real acc = 0.0;
          for (Index j = 0; j < i; ++j) {
            const auto& Aij = couplings[static_cast<std::size_t>(j)];
            const auto& upstream = records[static_cast<std::size_t>(j)].stages[stage];
            for (Index l = 0; l < Aij.cols(); ++l) {
              acc += -Aij(k, l) * upstream(step, l * n + c);
            }
          }
          for (Index l = 0; l < ni; ++l) acc += Aii(k, l) * z[l * n + c];
          dz[k * n + c] -= acc;
        }
      }
    };
    auto hook = [&record, steps, record_stages](Index step, Index stage,
                                                const Eigen::VectorXd& z) {
      if (record_stages && step < steps) {
        record.stages[static_cast<std::size_t>(stage)].row(step) = z;
      }
    };

    Trajectory traj = detail::rk4_integrate(ni * n, x0.segment(oi * n, ni * n), horizon, dt,
                                            escape_threshold, rhs, hook);
    traj.node_count = ni;
    traj.state_dim = n;
    detail::fill_node_sups(traj);
    blocks.push_back(std::move(traj));
  }
  return blocks;
}

/// Concatenates per-block cascade trajectories back into full permuted
/// states on the common sample range.
inline Eigen::MatrixXd concatenate_blocks(const std::vector<Trajectory>& blocks) {
  if (blocks.empty()) return {};
  Index rows = std::numeric_limits<Index>::max();
  Index cols = 0;
  for (const auto& b : blocks) {
    rows = std::min(rows, b.sample_count());
    cols += b.states.cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.states.cols()) = b.states.topRows(rows);
    at += b.states.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lyapunov monitor

struct MonitorReport {
  Eigen::VectorXd v_sigma;      // V_Sigma(x(t_k))
  Eigen::VectorXd v_sigma_dot;  // d/dt V_Sigma along the exact RHS
  Real rho_bar = 0.0;           // max_i rho_i
  Real tolerance = 0.0;
  /// Samples where every node satisfies |x_i| >= rho_bar yet
  /// v_sigma_dot > tolerance.
  std::vector<Index> violation_samples;
  /// Largest min_i |x_i| seen on any sample with v_sigma_dot > tolerance;
  /// beyond this radius the derivative was never positive.
  Real empirical_radius = 0.0;

  Index violation_count() const { return static_cast<Index>(violation_samples.size()); }
};

/// Evaluates V_Sigma = sum_i mu_i |x_i|^2 / 2 and its exact derivative
/// sum_i mu_i x_i . xdot_i along a recorded trajectory of the unperturbed
/// system (no damping, no inputs). Flags every sample that sits entirely
/// outside the ball of radius rho_bar but still has positive derivative.
inline MonitorReport lyapunov_monitor(const Trajectory& traj, const NetworkSystem& sys,
                                      const Eigen::VectorXd& mu, Real tolerance = 1e-9) {
  if (mu.size() != sys.node_count() || traj.node_count != sys.node_count() ||
      traj.state_dim != sys.state_dim()) {
    throw Error(errc::dimension_mismatch, "trajectory, system and mu sizes must agree");
  }
  const Index n = sys.state_dim();
  MonitorReport report;
  report.tolerance = tolerance;
  for (const auto& model : sys.models()) report.rho_bar = std::max(report.rho_bar, model.rho);

  const Index samples = traj.sample_count();
  report.v_sigma.resize(samples);
  report.v_sigma_dot.resize(samples);
  Eigen::VectorXd y(sys.total_dim()), dy(sys.total_dim());
  for (Index k = 0; k < samples; ++k) {
    y = traj.states.row(k);
    sys.rhs(traj.time_at(k), y, dy);
    Real v = 0.0, vdot = 0.0, min_radius = std::numeric_limits<Real>::infinity();
    for (Index i = 0; i < sys.node_count(); ++i) {
      const auto xi = y.segment(i * n, n);
      v += mu[i] * 0.5 * xi.squaredNorm();
      vdot += mu[i] * detail::storage_rate(xi, dy.segment(i * n, n));
      min_radius = std::min(min_radius, xi.norm());
    }
    report.v_sigma[k] = v;
    report.v_sigma_dot[k] = vdot;
    if (vdot > tolerance) {
      report.empirical_radius = std::max(report.empirical_radius, min_radius);
      if (min_radius >= report.rho_bar) report.violation_samples.push_back(k);
    }
  }
  return report;
}

/// Horizon-limited surrogate for global boundedness: bounded iff the run
/// never hit the escape threshold and every sample is finite.
inline BoundednessVerdict boundedness_verdict(const Trajectory& traj,
                                              Real escape_threshold = 1e6) {
  BoundednessVerdict verdict;
  verdict.threshold = escape_threshold;
  verdict.sup_norm = 0.0;
  verdict.time_of_sup = traj.t0;
  for (Index k = 0; k < traj.sample_count(); ++k) {
    for (Index i = 0; i < traj.node_count; ++i) {
      const Real norm =
          traj.states.row(k).segment(i * traj.state_dim, traj.state_dim).norm();
      if (norm > verdict.sup_norm || std::isnan(norm)) {
        verdict.sup_norm = std::isnan(norm) ? std::numeric_limits<Real>::infinity() : norm;
        verdict.time_of_sup = traj.time_at(k);
      }
    }
  }
  verdict.bounded = !traj.divergence_time.has_value() && verdict.sup_norm < escape_threshold;
  return verdict;
}

}  // namespace cascade
