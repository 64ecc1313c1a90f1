#pragma once

#include <pertflow/types.hpp>

#include <cmath>
#include <string>

namespace pertflow {

// Uniform grid t_k = k T / n_steps, k = 0..n_steps.
template <typename Scalar = double>
struct TimeGrid {
  Scalar final_time = Scalar(1);
  Index n_steps = 1;

  TimeGrid() = default;
  TimeGrid(Scalar T, Index n) : final_time(T), n_steps(n) {
    if (!(T > Scalar(0)) || !std::isfinite(static_cast<double>(T)))
      throw ValidationError("final time must be positive and finite");
    if (n < 1) throw ValidationError("n_steps must be at least 1");
  }

  Scalar dt() const { return final_time / Scalar(n_steps); }
  Index nodeCount() const { return n_steps + 1; }
  Scalar node(Index k) const { return final_time * Scalar(k) / Scalar(n_steps); }

  bool operator==(const TimeGrid&) const = default;
};

// Per-node samples of the decomposed systems on one shared grid. Columns are
// nodes; a zero-sized member means "not computed yet".
template <typename Scalar = double>
struct Trajectory {
  TimeGrid<Scalar> grid;
  Matrix<Scalar> theta0;  // p x (n+1)
  Matrix<Scalar> p0;      // p x (n+1)
  Vector<Scalar> u0;      // n+1
  Matrix<Scalar> theta1;  // p x (n+1)

  Trajectory() = default;
  explicit Trajectory(TimeGrid<Scalar> g) : grid(g) {}

  bool hasTheta0() const { return theta0.size() != 0; }
  bool hasP0() const { return p0.size() != 0; }
  bool hasU0() const { return u0.size() != 0; }
  bool hasTheta1() const { return theta1.size() != 0; }
  Index paramCount() const { return theta0.rows(); }
};

enum class AdjointForm { Corrected, PaperLiteral };

inline std::string adjointFormName(AdjointForm f) {
  return f == AdjointForm::Corrected ? "corrected" : "paper_literal";
}

inline AdjointForm adjointFormFromName(const std::string& name) {
  if (name == "corrected") return AdjointForm::Corrected;
  if (name == "paper_literal") return AdjointForm::PaperLiteral;
  throw ValidationError("unknown adjoint form '" + name + "'");
}

namespace detail {

template <typename Scalar>
void requireFinite(const Vector<Scalar>& v, const char* what, Scalar t) {
  if (!v.allFinite())
    throw NumericalError(std::string(what) + " diverged to a non-finite state at t = " +
                         std::to_string(static_cast<double>(t)) +
                         " (step too large for the Hessian's top eigenvalue)");
}

}  // namespace detail

// Classical RK4 on the gradient flow  thetadot = -grad J(theta), theta(0) given.
// The loss along the exact flow is non-increasing; a node-to-node increase
// beyond 1e-12 means the step outruns the stiffest mode and is reported as a
// step-size diagnostic.
//
// Surface contract here and below: value(theta), gradient(theta),
// hessian(theta) and gradientSquared(theta), each Eigen-valued.
template <typename Scalar, typename Surface>
Trajectory<Scalar> integrateGradientFlow(const Surface& train,
                                         const Vector<Scalar>& theta_init,
                                         const TimeGrid<Scalar>& grid) {
  const Index n = grid.n_steps;
  const Scalar dt = grid.dt();
  Trajectory<Scalar> traj(grid);
  traj.theta0.resize(theta_init.size(), n + 1);
  traj.theta0.col(0) = theta_init;

  const auto f = [&train](const Vector<Scalar>& th) -> Vector<Scalar> {
    return -train.gradient(th);
  };

  Vector<Scalar> th = theta_init;
  Scalar j_prev = train.value(th);
  for (Index k = 0; k < n; ++k) {
    const Vector<Scalar> k1 = f(th);
    const Vector<Scalar> k2 = f((th + (dt / Scalar(2)) * k1).eval());
    const Vector<Scalar> k3 = f((th + (dt / Scalar(2)) * k2).eval());
    const Vector<Scalar> k4 = f((th + dt * k3).eval());
    th += (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    detail::requireFinite(th, "gradient flow", grid.node(k + 1));
    const Scalar j = train.value(th);
    if (j > j_prev + Scalar(1e-12))
      throw NumericalError("gradient flow: loss increased from " +
                           std::to_string(static_cast<double>(j_prev)) + " to " +
                           std::to_string(static_cast<double>(j)) + " at t = " +
                           std::to_string(static_cast<double>(grid.node(k + 1))) +
                           "; reduce dt (step-size diagnostic)");
    j_prev = j;
    traj.theta0.col(k + 1) = th;
  }
  return traj;
}

// Adjoint flow, integrated backward from p(T) = -grad Phi(theta0(T)) by
// running the time-reversed system q(s) = p(T - s) forward with RK4.
//
// Corrected form:     pdot = hessJ(theta0(t)) p         (linearized dynamics)
// PaperLiteral form:  pdot = hessJ(theta0(t)) * ones    (the printed equation
//   has no p factor; its matrix-valued right side is read as row sums, which
//   reproduces the printed scalar equation at p = 1).
//
// theta0 at RK4 half-steps is the linear interpolant, i.e. the node average.
template <typename Scalar, typename TrainSurface, typename ValSurface>
void integrateAdjoint(Trajectory<Scalar>& traj, const TrainSurface& train,
                      const ValSurface& validate,
                      AdjointForm form = AdjointForm::Corrected) {
  if (!traj.hasTheta0())
    throw ValidationError("integrateAdjoint: theta0 is not filled");
  const Index n = traj.grid.n_steps;
  const Index p = traj.paramCount();
  const Scalar dt = traj.grid.dt();
  traj.p0.resize(p, n + 1);

  const auto f = [&](const Vector<Scalar>& th, const Vector<Scalar>& q) -> Vector<Scalar> {
    if (form == AdjointForm::Corrected) return -(train.hessian(th) * q);
    return -(train.hessian(th) * Vector<Scalar>::Ones(p));
  };

  Vector<Scalar> q = -validate.gradient(traj.theta0.col(n));
  traj.p0.col(n) = q;
  for (Index j = 0; j < n; ++j) {
    // Reversed step j runs t from t_{n-j} down to t_{n-j-1}.
    const Vector<Scalar> thL = traj.theta0.col(n - j);
    const Vector<Scalar> thR = traj.theta0.col(n - j - 1);
    const Vector<Scalar> thM = ((thL + thR) / Scalar(2)).eval();
    const Vector<Scalar> k1 = f(thL, q);
    const Vector<Scalar> k2 = f(thM, (q + (dt / Scalar(2)) * k1).eval());
    const Vector<Scalar> k3 = f(thM, (q + (dt / Scalar(2)) * k2).eval());
    const Vector<Scalar> k4 = f(thR, (q + dt * k3).eval());
    q += (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    detail::requireFinite(q, "adjoint flow", traj.grid.node(n - j - 1));
    traj.p0.col(n - j - 1) = q;
  }
}

// First-order correction  theta1dot = -hessJ(theta0(t)) theta1 + u(t) B(theta0(t)),
// theta1(0) = 0, forward RK4. The control is held at its left-node value across
// each step (bang-bang controls are discontinuous; interpolation would be
// meaningless); theta0 interpolates linearly as in integrateAdjoint.
template <typename Scalar, typename TrainSurface, typename DitherSurface>
void integrateCorrection(Trajectory<Scalar>& traj, const TrainSurface& train,
                         const DitherSurface& dithered, const Vector<Scalar>& u_nodes) {
  if (!traj.hasTheta0())
    throw ValidationError("integrateCorrection: theta0 is not filled");
  if (u_nodes.size() != traj.grid.nodeCount())
    throw ValidationError("integrateCorrection: control has " +
                          std::to_string(u_nodes.size()) + " samples, grid has " +
                          std::to_string(traj.grid.nodeCount()) + " nodes");
  const Index n = traj.grid.n_steps;
  const Index p = traj.paramCount();
  const Scalar dt = traj.grid.dt();
  traj.theta1.resize(p, n + 1);
  traj.theta1.col(0).setZero();

  Vector<Scalar> v = Vector<Scalar>::Zero(p);
  for (Index k = 0; k < n; ++k) {
    const Scalar u = u_nodes[k];
    const Vector<Scalar> thL = traj.theta0.col(k);
    const Vector<Scalar> thR = traj.theta0.col(k + 1);
    const Vector<Scalar> thM = ((thL + thR) / Scalar(2)).eval();
    const auto f = [&](const Vector<Scalar>& th, const Vector<Scalar>& w) -> Vector<Scalar> {
      return -(train.hessian(th) * w) + u * dithered.gradientSquared(th);
    };
    const Vector<Scalar> k1 = f(thL, v);
    const Vector<Scalar> k2 = f(thM, (v + (dt / Scalar(2)) * k1).eval());
    const Vector<Scalar> k3 = f(thM, (v + (dt / Scalar(2)) * k2).eval());
    const Vector<Scalar> k4 = f(thR, (v + dt * k3).eval());
    v += (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    detail::requireFinite(v, "first-order correction flow", traj.grid.node(k + 1));
    traj.theta1.col(k + 1) = v;
  }
}

template <typename Scalar, typename TrainSurface, typename DitherSurface>
void integrateCorrection(Trajectory<Scalar>& traj, const TrainSurface& train,
                         const DitherSurface& dithered) {
  if (!traj.hasU0())
    throw ValidationError("integrateCorrection: u0 is not filled");
  integrateCorrection(traj, train, dithered, traj.u0);
}

}  // namespace pertflow
