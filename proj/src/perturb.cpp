#include <pertflow/perturb.hpp>

#include <pertflow/model.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace pertflow {

namespace {

void validateOptions(const AlgorithmOptions& opt, int degree) {
  if (degree < 0) throw ValidationError("degree must be non-negative");
  if (!(opt.epsilon_max > 0)) throw ValidationError("epsilon_max must be positive");
  if (!(opt.epsilon >= 0) || !(opt.epsilon < opt.epsilon_max) || !std::isfinite(opt.epsilon))
    throw ValidationError("epsilon = " + std::to_string(opt.epsilon) +
                          " out of range: must satisfy 0 <= epsilon < epsilon_max = " +
                          std::to_string(opt.epsilon_max));
  if (opt.tie_tol < 0) throw ValidationError("tie_tol must be non-negative");
  opt.control.validate();
  const auto p = static_cast<Index>(degree) + 1;
  if (opt.theta_init.size() != 0 && opt.theta_init.size() != p)
    throw ValidationError("theta_init has dimension " + std::to_string(opt.theta_init.size()) +
                          ", model expects " + std::to_string(p));
}

}  // namespace

PerturbationResult runAlgorithm(const Dataset& train, const Dataset& validate,
                                const Dataset& dithered, int degree,
                                const TimeGrid<double>& grid, const AlgorithmOptions& opt) {
  validateOptions(opt, degree);
  const PolynomialModel<double> model(degree);
  const Index p = model.paramCount();

  PerturbationResult res;
  res.epsilon = opt.epsilon;
  res.standardizer = opt.standardize ? Standardizer::fit(train) : Standardizer::identity();
  const Standardizer& st = res.standardizer;

  const LossSurface<double> train_s(model, st.transform(train));
  const LossSurface<double> val_s(model, st.transform(validate));
  const LossSurface<double> dith_s(model, st.transform(dithered));

  const VectorXd theta_init_flow = opt.theta_init.size() == 0
                                       ? VectorXd::Zero(p).eval()
                                       : st.stdFromRawParams(opt.theta_init);

  // Steps 1-3: zeroth-order flow, adjoint, pointwise argmax, correction.
  res.trajectory = integrateGradientFlow(train_s, theta_init_flow, grid);
  integrateAdjoint(res.trajectory, train_s, val_s, opt.adjoint);
  res.switch_records = computeControl(res.trajectory, opt.control, dith_s, opt.tie_tol);
  integrateCorrection(res.trajectory, train_s, dith_s);

  for (const auto& r : res.switch_records) {
    if (std::abs(r.s) <= opt.tie_tol)
      ++res.tie_count;
    else if (r.s > 0)
      ++res.positive_count;
    else
      ++res.negative_count;
  }
  res.tie_fraction = static_cast<double>(res.tie_count) /
                     static_cast<double>(res.switch_records.size());
  res.tie_warning = res.tie_fraction > 0.01;

  // Step 4: aggregation, in flow coordinates.
  const Index n = grid.n_steps;
  res.theta0_T_flow = res.trajectory.theta0.col(n);
  res.theta1_T_flow = res.trajectory.theta1.col(n);
  res.theta_star_flow = res.theta0_T_flow + opt.epsilon * res.theta1_T_flow;
  if (!res.theta_star_flow.allFinite())
    throw NumericalError("aggregated parameters are not finite");

  res.theta0_T = st.rawFromStdParams(res.theta0_T_flow);
  res.theta1_T = st.rawFromStdTangent(res.theta1_T_flow);
  res.theta_star = st.rawFromStdParams(res.theta_star_flow);

  // Expansion diagnostics, flow coordinates.
  res.first_order_term = res.trajectory.p0.col(n).dot(res.theta1_T_flow);
  res.phi0_flow = val_s.value(res.theta0_T_flow);
  res.phi_star_flow = val_s.value(res.theta_star_flow);
  res.j_pred_flow = res.phi0_flow - opt.epsilon * res.first_order_term;
  res.expansion_residual_flow = std::abs(res.phi_star_flow - res.j_pred_flow);
  res.duality_quadrature = dualityQuadrature(res.trajectory, dith_s);
  res.duality_gap = std::abs(res.first_order_term - res.duality_quadrature);

  // Reported losses, raw coordinates.
  const LossSurface<double> train_raw(model, train);
  const LossSurface<double> val_raw(model, validate);
  res.j_train_0 = train_raw.value(res.theta0_T);
  res.j_train_star = train_raw.value(res.theta_star);
  res.j_val_0 = val_raw.value(res.theta0_T);
  res.j_val_star = val_raw.value(res.theta_star);
  std::tie(res.delta_train, res.delta_val) = improvements(res, train, validate);
  return res;
}

std::pair<double, double> costExpansion(const PerturbationResult& result,
                                        const Dataset& validate) {
  const PolynomialModel<double> model(static_cast<int>(result.theta0_T_flow.size()) - 1);
  const LossSurface<double> val_s(model, result.standardizer.transform(validate));
  const double j_pred =
      val_s.value(result.theta0_T_flow) - result.epsilon * result.first_order_term;
  const double r = std::abs(val_s.value(result.theta_star_flow) - j_pred);
  return {j_pred, r};
}

std::pair<double, double> improvements(const PerturbationResult& result,
                                       const Dataset& train, const Dataset& validate) {
  const PolynomialModel<double> model(static_cast<int>(result.theta_star.size()) - 1);
  const auto meanLossDiff = [&](const Dataset& data) {
    double acc = 0.0;
    for (Index i = 0; i < data.size(); ++i) {
      const double r_star = model.evaluate(result.theta_star, data.x(i)) - data.y(i);
      const double r_0 = model.evaluate(result.theta0_T, data.x(i)) - data.y(i);
      acc += r_star * r_star - r_0 * r_0;
    }
    return acc / static_cast<double>(data.size());
  };
  return {meanLossDiff(train), meanLossDiff(validate)};
}

SweepResult epsilonSweep(const Dataset& train, const Dataset& validate,
                         const Dataset& dithered, int degree, const TimeGrid<double>& grid,
                         const AlgorithmOptions& opt, const std::vector<double>& eps_list) {
  if (eps_list.size() < 4)
    throw ValidationError("epsilon sweep needs at least 4 epsilon values, got " +
                          std::to_string(eps_list.size()));
  const auto [lo_it, hi_it] = std::minmax_element(eps_list.begin(), eps_list.end());
  for (double e : eps_list) {
    if (!(e > 0) || !(e < opt.epsilon_max) || !std::isfinite(e))
      throw ValidationError("sweep epsilon = " + std::to_string(e) +
                            " out of range: must lie in (0, epsilon_max = " +
                            std::to_string(opt.epsilon_max) + ")");
  }
  if (*hi_it < 100.0 * *lo_it)
    throw ValidationError("sweep epsilon values must span at least two decades");

  // Zeroth-order pieces are epsilon-independent; compute once at eps = 0.
  AlgorithmOptions base = opt;
  base.epsilon = 0.0;
  const PerturbationResult z = runAlgorithm(train, validate, dithered, degree, grid, base);

  const PolynomialModel<double> model(degree);
  const Standardizer& st = z.standardizer;
  const LossSurface<double> train_s(model, st.transform(train));
  const LossSurface<double> val_s(model, st.transform(validate));
  const LossSurface<double> dith_s(model, st.transform(dithered));
  const VectorXd theta_init_flow = z.trajectory.theta0.col(0);

  SweepResult out;
  out.points.resize(eps_list.size());
  std::vector<std::future<SweepPoint>> futures;
  futures.reserve(eps_list.size());
  for (double e : eps_list) {
    futures.push_back(std::async(std::launch::async, [&, e]() -> SweepPoint {
      const VectorXd terminal = integrateControlled(train_s, dith_s, z.trajectory.u0, e,
                                                    theta_init_flow, grid);
      SweepPoint pt;
      pt.epsilon = e;
      pt.j_full = val_s.value(terminal);
      pt.j_pred = z.phi0_flow - e * z.first_order_term;
      pt.residual = std::abs(pt.j_full - pt.j_pred);
      return pt;
    }));
  }
  for (std::size_t i = 0; i < futures.size(); ++i) out.points[i] = futures[i].get();

  out.at_floor = std::all_of(out.points.begin(), out.points.end(),
                             [](const SweepPoint& p) { return p.residual < 1e-14; });
  if (out.at_floor) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  // Least squares on (log eps, log r), skipping exact zeros.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& pt : out.points) {
    if (pt.residual <= 0) continue;
    const double lx = std::log(pt.epsilon);
    const double ly = std::log(pt.residual);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++m;
  }
  if (m < 2) throw NumericalError("epsilon sweep: too few nonzero residuals to fit a slope");
  const double denom = m * sxx - sx * sx;
  out.slope = (m * sxy - sx * sy) / denom;
  return out;
}

}  // namespace pertflow
