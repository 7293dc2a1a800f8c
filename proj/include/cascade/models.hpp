#pragma once

// Node dynamics catalog. Every model uses the quadratic storage
// V(x) = |x|^2 / 2 (models needing a coordinate shift, like the Lorenz
// system, are expressed directly in shifted coordinates), so the storage
// rate along the drift is x . f(x) and semi-passivity reads
//
//   x . f(x) <= -H(x),   with H(x) >= psi(|x|) whenever |x| >= rho.
//
// certify_semipassivity checks both inequalities on a deterministic
// low-discrepancy sample of a box.

#include "cascade/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace cascade {

using Real = double;
using VecRef = Eigen::Ref<Eigen::VectorXd>;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;

struct NodeModel {
  std::string name;
  Index state_dim = 1;
  /// Drift f: out = f(x). out is preallocated with state_dim entries.
  std::function<void(ConstVecRef, VecRef)> f;
  /// Dissipation H with x . f(x) <= -H(x).
  std::function<Real(ConstVecRef)> dissipation;
  /// Lower bound psi on H outside the ball of radius rho; positive on r > 0.
  std::function<Real(Real)> psi;
  Real rho = 1.0;

  Real storage(ConstVecRef x) const { return 0.5 * x.squaredNorm(); }
};

namespace detail {

/// x . f(x) accumulated coordinate by coordinate. Catalog dissipation
/// callbacks that are defined as the exact negative of the storage rate use
/// this same loop, so certification residuals vanish identically.
inline Real storage_rate(ConstVecRef x, ConstVecRef fx) {
  Real acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += x[i] * fx[i];
  return acc;
}

// Lorenz drift in shifted coordinates (x2 stands for z - r - sigma). Shared
// by f and the dissipation callback so both evaluate identically.
inline void lorenz_drift(ConstVecRef x, VecRef out) {
  constexpr Real sigma = 10.0, r = 28.0, b = 8.0 / 3.0;
  out[0] = sigma * (x[1] - x[0]);
  out[1] = -x[1] - x[0] * x[2] - sigma * x[0];
  out[2] = x[0] * x[1] - b * (x[2] + r + sigma);
}

/// Deterministic Halton point in [-radius, radius]^dim.
inline void halton_point(long index, double radius, VecRef out) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  for (Index d = 0; d < out.size(); ++d) {
    const int base = primes[d % 8];
    double value = 0.0, scale = 1.0;
    long i = index;
    while (i > 0) {
      scale /= base;
      value += scale * static_cast<double>(i % base);
      i /= base;
    }
    out[d] = (2.0 * value - 1.0) * radius;
  }
}

}  // namespace detail

/// Scalar polynomial model: f, H given as coefficient lists (c0 + c1 x +
/// c2 x^2 + ...), psi as a coefficient list in r.
inline NodeModel polynomial_model(std::string name, std::vector<Real> f_coeffs,
                                  std::vector<Real> h_coeffs, std::vector<Real> psi_coeffs,
                                  Real rho) {
  auto horner = [](const std::vector<Real>& c, Real x) {
    Real v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
  };
  NodeModel m;
  m.name = std::move(name);
  m.state_dim = 1;
  m.f = [f_coeffs, horner](ConstVecRef x, VecRef out) { out[0] = horner(f_coeffs, x[0]); };
  m.dissipation = [h_coeffs, horner](ConstVecRef x) { return horner(h_coeffs, x[0]); };
  m.psi = [psi_coeffs, horner](Real r) { return horner(psi_coeffs, r); };
  m.rho = rho;
  return m;
}

/// Catalog: "cubic" (x - x^3), "linear_stable" (-x), "lorenz" (n = 3,
/// sigma = 10, r = 28, b = 8/3, in coordinates shifted so the storage is
/// |x|^2 / 2), and "unstable_linear" (+x), the negative control that is not
/// semi-passive and must fail certification.
inline NodeModel builtin_model(const std::string& name) {
  if (name == "cubic") {
    // x.f = x^2 - x^4 = -H exactly; H = x^4 - x^2 >= x^4/2 iff |x| >= sqrt(2).
    return polynomial_model("cubic", {0.0, 1.0, 0.0, -1.0}, {0.0, 0.0, -1.0, 0.0, 1.0},
                            {0.0, 0.0, 0.0, 0.0, 0.5}, std::sqrt(2.0));
  }
  if (name == "linear_stable") {
    return polynomial_model("linear_stable", {0.0, -1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, 1.0);
  }
  if (name == "unstable_linear") {
    // Claims the linear_stable certificate data, but x.f = +x^2 violates the
    // dissipation inequality at every x != 0.
    return polynomial_model("unstable_linear", {0.0, 1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, 1.0);
  }
  if (name == "lorenz") {
    NodeModel m;
    m.name = "lorenz";
    m.state_dim = 3;
    // Coordinates are shifted so the third one is z - (r + sigma). The rx
    // term drops out and the storage rate becomes
    //   x.f = -(sigma x0^2 + x1^2 + b x2^2 + b(r+sigma) x2) =: -H(x).
    m.f = [](ConstVecRef x, VecRef out) { detail::lorenz_drift(x, out); };
    m.dissipation = [](ConstVecRef x) {
      Eigen::VectorXd fx(3);
      detail::lorenz_drift(x, fx);
      return -detail::storage_rate(x, fx);
    };
    // On the sphere |x| = s the minimum of H is s^2 - b^2(r+sigma)^2/(4(b-1))
    // once s >= b(r+sigma)/(2(b-1)), so H >= s^2/2 holds from s ~ 55.6 on.
    m.psi = [](Real r) { return 0.5 * r * r; };
    m.rho = 56.0;
    return m;
  }
  throw Error(errc::unknown_model, "no catalog model named '" + name + "'");
}

struct Certificate {
  bool pass = true;
  Real worst_violation = 0.0;        // max over both inequalities, <= 0 when clean
  Eigen::VectorXd worst_state;       // sample attaining worst_violation
  std::string violated;              // "", "dissipation", or "psi_bound"
  long sample_count = 0;
  Real box_radius = 0.0;
  Real tolerance = 0.0;
};

/// Samples [-box_radius, box_radius]^n with a Halton sequence and checks
///   (1) x . f(x) + H(x) <= tol            (dissipation inequality)
///   (2) psi(|x|) - H(x) <= tol for |x| >= rho
/// reporting the worst signed violation and where it happened.
inline Certificate certify_semipassivity(const NodeModel& model, Real box_radius, long samples,
                                         Real tolerance = 1e-9) {
  if (!(box_radius > model.rho) || !std::isfinite(box_radius)) {
    throw Error(errc::invalid_box,
                "box radius must exceed the model radius rho = " + std::to_string(model.rho));
  }
  if (samples < 1000) {
    throw Error(errc::invalid_box, "need at least 1000 samples");
  }

  Certificate cert;
  cert.sample_count = samples;
  cert.box_radius = box_radius;
  cert.tolerance = tolerance;
  cert.worst_violation = -std::numeric_limits<Real>::infinity();

  Eigen::VectorXd x(model.state_dim), fx(model.state_dim);
  for (long s = 0; s < samples; ++s) {
    detail::halton_point(s + 1, box_radius, x);
    model.f(x, fx);
    const Real rate = detail::storage_rate(x, fx);
    const Real h = model.dissipation(x);

    const Real dissipation_violation = rate + h;
    if (dissipation_violation > cert.worst_violation) {
      cert.worst_violation = dissipation_violation;
      cert.worst_state = x;
      cert.violated = dissipation_violation > tolerance ? "dissipation" : "";
    }
    const Real radius = x.norm();
    if (radius >= model.rho) {
      const Real bound_violation = model.psi(radius) - h;
      if (bound_violation > cert.worst_violation) {
        cert.worst_violation = bound_violation;
        cert.worst_state = x;
        cert.violated = bound_violation > tolerance ? "psi_bound" : "";
      }
    }
  }
  cert.pass = cert.worst_violation <= tolerance;
  if (cert.pass) cert.violated.clear();
  return cert;
}

}  // namespace cascade
