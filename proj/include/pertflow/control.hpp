#pragma once

#include <pertflow/flow.hpp>
#include <pertflow/types.hpp>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace pertflow {

// Compact admissible interval U = [u_min, u_max].
template <typename Scalar = double>
struct ControlSet {
  Scalar u_min = Scalar(-1);
  Scalar u_max = Scalar(1);

  void validate() const {
    if (!(u_min <= u_max))
      throw ValidationError("control set requires u_min <= u_max");
    if (!std::isfinite(static_cast<double>(u_min)) ||
        !std::isfinite(static_cast<double>(u_max)))
      throw ValidationError("control bounds must be finite");
  }

  bool contains(Scalar u) const { return u_min <= u && u <= u_max; }
  // Admissible value closest to zero (the tie-rule choice).
  Scalar projectZero() const { return std::clamp(Scalar(0), u_min, u_max); }
};

// Per-node switching diagnostics: s = <p0, B(theta0)> and the chosen control.
template <typename Scalar = double>
struct SwitchRecord {
  Index node;
  Scalar time;
  Scalar s;
  Scalar u;
};

// H^eps(theta, p, u) = <p, -grad J0(theta) + eps u B(theta)>.
template <typename Scalar, typename TrainSurface, typename DitherSurface>
Scalar hamiltonian(const TrainSurface& train, const DitherSurface& dithered,
                   const Vector<Scalar>& theta, const Vector<Scalar>& p, Scalar u,
                   Scalar eps) {
  if (p.size() != theta.size())
    throw ValidationError("hamiltonian: theta and p dimensions disagree");
  if (eps < Scalar(0)) throw ValidationError("hamiltonian: eps must be non-negative");
  return p.dot((-train.gradient(theta) + eps * u * dithered.gradientSquared(theta)).eval());
}

// Maximizer of u * s over [u_min, u_max]. The objective is linear, so the max
// sits at an endpoint; within tie_tol of s = 0 every admissible u is optimal
// and the value closest to zero is chosen (no dithering force on singular arcs).
template <typename Scalar>
Scalar maximizeLinear(Scalar s, const ControlSet<Scalar>& set, Scalar tie_tol) {
  set.validate();
  if (s > tie_tol) return set.u_max;
  if (s < -tie_tol) return set.u_min;
  return set.projectZero();
}

// Pointwise argmax of <p, u B> over the control set; returns (u, s) with
// s = <p, b> the switching value.
template <typename Scalar>
std::pair<Scalar, Scalar> argmaxControl(const Vector<Scalar>& p, const Vector<Scalar>& b,
                                        const ControlSet<Scalar>& set,
                                        Scalar tie_tol = Scalar(1e-12)) {
  if (p.size() != b.size())
    throw ValidationError("argmaxControl: p and b dimensions disagree");
  const Scalar s = p.dot(b);
  return {maximizeLinear(s, set, tie_tol), s};
}

// Evaluates the pointwise argmax at every grid node, fills traj.u0, and
// returns the per-node switch records.
template <typename Scalar, typename DitherSurface>
std::vector<SwitchRecord<Scalar>> computeControl(Trajectory<Scalar>& traj,
                                                 const ControlSet<Scalar>& set,
                                                 const DitherSurface& dithered,
                                                 Scalar tie_tol = Scalar(1e-12)) {
  if (!traj.hasTheta0() || !traj.hasP0())
    throw ValidationError("computeControl: theta0 and p0 must be filled");
  if (tie_tol < Scalar(0)) throw ValidationError("tie_tol must be non-negative");
  set.validate();
  const Index nodes = traj.grid.nodeCount();
  traj.u0.resize(nodes);
  std::vector<SwitchRecord<Scalar>> records;
  records.reserve(static_cast<std::size_t>(nodes));
  for (Index k = 0; k < nodes; ++k) {
    const Vector<Scalar> b = dithered.gradientSquared(traj.theta0.col(k));
    const Scalar s = traj.p0.col(k).dot(b);
    const Scalar u = maximizeLinear(s, set, tie_tol);
    traj.u0[k] = u;
    records.push_back({k, traj.grid.node(k), s, u});
  }
  return records;
}

}  // namespace pertflow
