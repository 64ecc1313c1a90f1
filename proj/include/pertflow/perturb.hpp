#pragma once

#include <pertflow/control.hpp>
#include <pertflow/dataset.hpp>
#include <pertflow/flow.hpp>
#include <pertflow/standardizer.hpp>
#include <pertflow/types.hpp>

#include <cstdint>
#include <utility>
#include <vector>

namespace pertflow {

// RK4 on the full weakly-controlled dynamics
//   thetadot = -grad J0(theta) + eps u(t) B(theta),
// with u held at its left-node value across each step. Returns the whole path
// (column k = theta at node k).
template <typename Scalar, typename TrainSurface, typename DitherSurface>
Matrix<Scalar> integrateControlledPath(const TrainSurface& train,
                                       const DitherSurface& dithered,
                                       const Vector<Scalar>& u_nodes, Scalar eps,
                                       const Vector<Scalar>& theta_init,
                                       const TimeGrid<Scalar>& grid) {
  if (u_nodes.size() != grid.nodeCount())
    throw ValidationError("integrateControlled: control has " +
                          std::to_string(u_nodes.size()) + " samples, grid has " +
                          std::to_string(grid.nodeCount()) + " nodes");
  if (eps < Scalar(0)) throw ValidationError("integrateControlled: eps must be non-negative");
  const Index n = grid.n_steps;
  const Scalar dt = grid.dt();
  Matrix<Scalar> path(theta_init.size(), n + 1);
  path.col(0) = theta_init;
  Vector<Scalar> th = theta_init;
  for (Index k = 0; k < n; ++k) {
    const Scalar u = u_nodes[k];
    const auto f = [&](const Vector<Scalar>& x) -> Vector<Scalar> {
      return -train.gradient(x) + (eps * u) * dithered.gradientSquared(x);
    };
    const Vector<Scalar> k1 = f(th);
    const Vector<Scalar> k2 = f((th + (dt / Scalar(2)) * k1).eval());
    const Vector<Scalar> k3 = f((th + (dt / Scalar(2)) * k2).eval());
    const Vector<Scalar> k4 = f((th + dt * k3).eval());
    th += (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    detail::requireFinite(th, "controlled flow", grid.node(k + 1));
    path.col(k + 1) = th;
  }
  return path;
}

// Terminal state theta^eps(T) of the full dynamics.
template <typename Scalar, typename TrainSurface, typename DitherSurface>
Vector<Scalar> integrateControlled(const TrainSurface& train, const DitherSurface& dithered,
                                   const Vector<Scalar>& u_nodes, Scalar eps,
                                   const Vector<Scalar>& theta_init,
                                   const TimeGrid<Scalar>& grid) {
  return integrateControlledPath(train, dithered, u_nodes, eps, theta_init, grid)
      .col(grid.n_steps);
}

// Trapezoidal quadrature of u0(t) <p0(t), B(theta0(t))> over the grid. The
// trapezoid weights keep the quadrature O(dt^2)-consistent with the RK4
// trajectories, so the duality gap against <p0(T), theta1(T)> contracts ~4x
// per step halving; a left Riemann sum would plateau at O(dt).
template <typename Scalar, typename DitherSurface>
Scalar dualityQuadrature(const Trajectory<Scalar>& traj, const DitherSurface& dithered) {
  if (!traj.hasTheta0() || !traj.hasP0() || !traj.hasU0())
    throw ValidationError("dualityQuadrature: theta0, p0 and u0 must be filled");
  const Index n = traj.grid.n_steps;
  Scalar acc = Scalar(0);
  for (Index k = 0; k <= n; ++k) {
    const Scalar s =
        traj.p0.col(k).dot(dithered.gradientSquared(traj.theta0.col(k)).eval());
    const Scalar w = (k == 0 || k == n) ? Scalar(0.5) : Scalar(1);
    acc += w * traj.u0[k] * s;
  }
  return acc * traj.grid.dt();
}

struct AlgorithmOptions {
  double epsilon = 1e-3;
  double epsilon_max = 0.1;
  ControlSet<double> control{};
  double tie_tol = 1e-12;
  AdjointForm adjoint = AdjointForm::Corrected;
  bool standardize = true;
  // Raw-coordinate initial parameters; empty means the zero vector in flow
  // coordinates (the coordinates the ODEs integrate in).
  VectorXd theta_init;
};

// Everything the 4-step algorithm produces. Reported parameters and losses are
// in raw coordinates; expansion diagnostics (first_order_term, phi*, duality)
// are in flow coordinates, where the decomposed ODEs and the aggregation
// theta_star = theta0(T) + eps theta1(T) actually live. Raw and flow losses
// differ by the exact factor std_y^2.
struct PerturbationResult {
  // raw coordinates
  VectorXd theta0_T;
  VectorXd theta1_T;
  VectorXd theta_star;
  double epsilon = 0.0;
  double j_train_0 = 0.0;
  double j_train_star = 0.0;
  double j_val_0 = 0.0;
  double j_val_star = 0.0;
  double delta_train = 0.0;  // Eq-style per-sample loss-difference mean
  double delta_val = 0.0;

  // flow coordinates
  VectorXd theta0_T_flow;
  VectorXd theta1_T_flow;
  VectorXd theta_star_flow;
  double first_order_term = 0.0;  // <p0(T), theta1(T)>
  double phi0_flow = 0.0;         // Phi(theta0(T))
  double phi_star_flow = 0.0;     // Phi(theta_star)
  double j_pred_flow = 0.0;       // phi0 - eps * first_order_term
  double expansion_residual_flow = 0.0;
  double duality_quadrature = 0.0;
  double duality_gap = 0.0;

  // switching diagnostics
  Index positive_count = 0;
  Index negative_count = 0;
  Index tie_count = 0;
  double tie_fraction = 0.0;
  bool tie_warning = false;  // tie rule fired on more than 1% of nodes

  Standardizer standardizer;
  Trajectory<double> trajectory;  // flow coordinates
  std::vector<SwitchRecord<double>> switch_records;
};

// Steps 1-4: zeroth-order flow, adjoint, pointwise argmax control, first-order
// correction, aggregation. Deterministic given inputs. eps = 0 is allowed as a
// degenerate case (theta_star = theta0(T)); eps >= epsilon_max is refused.
PerturbationResult runAlgorithm(const Dataset& train, const Dataset& validate,
                                const Dataset& dithered, int degree,
                                const TimeGrid<double>& grid, const AlgorithmOptions& opt);

// (J_pred, r): first-order prediction of the terminal cost and the expansion
// residual |Phi(theta_star) - J_pred|, in flow coordinates.
std::pair<double, double> costExpansion(const PerturbationResult& result,
                                        const Dataset& validate);

// (delta_train, delta_val): mean per-sample loss differences between theta_star
// and theta0(T), raw coordinates.
std::pair<double, double> improvements(const PerturbationResult& result,
                                       const Dataset& train, const Dataset& validate);

struct SweepPoint {
  double epsilon = 0.0;
  double j_full = 0.0;   // Phi(theta^eps(T)) under the frozen control u0
  double j_pred = 0.0;   // Phi(theta0(T)) - eps <p0(T), theta1(T)>
  double residual = 0.0; // |j_full - j_pred|
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;  // least-squares slope of log r against log eps
  bool at_floor = false;  // every residual below 1e-14; slope undefined
};

// Expansion-residual sweep: the zeroth-order pieces are computed once, then
// the full dynamics run per epsilon (in parallel). eps_list needs >= 4 values
// spanning >= 2 decades, all inside (0, epsilon_max).
SweepResult epsilonSweep(const Dataset& train, const Dataset& validate,
                         const Dataset& dithered, int degree, const TimeGrid<double>& grid,
                         const AlgorithmOptions& opt, const std::vector<double>& eps_list);

}  // namespace pertflow
