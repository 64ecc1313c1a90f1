// Acceptance gate for the perturbation pipeline. Nine numbered criteria, each
// reported as a single [PASS]/[FAIL] line with indented sub-check details.
// No arguments runs all criteria; --criterion N runs one. Exit status is
// nonzero iff any executed criterion fails.

#include <pertflow/control.hpp>
#include <pertflow/dataset.hpp>
#include <pertflow/flow.hpp>
#include <pertflow/model.hpp>
#include <pertflow/perturb.hpp>
#include <pertflow/rng.hpp>
#include <pertflow/runconfig.hpp>
#include <pertflow/runner.hpp>
#include <pertflow/standardizer.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pertflow;
using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return std::string(buf);
}

// Sub-check collector: `expect` gates the criterion, `note` only annotates.
struct Report {
  bool pass = true;
  std::vector<std::string> lines;

  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    lines.push_back(std::string(ok ? "[ok] " : "[!!] ") + what);
  }
  void note(const std::string& what) { lines.push_back("     " + what); }
};

struct TmpDir {
  std::filesystem::path path;

  TmpDir() {
    static std::uint64_t counter = 0;
    const auto tick = static_cast<std::uint64_t>(Clock::now().time_since_epoch().count());
    path = std::filesystem::temp_directory_path() /
           fmt("pertflow-acceptance-%016llx",
               static_cast<unsigned long long>(splitmix64(tick + ++counter)));
    std::filesystem::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

std::string readFileBytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double fitSlope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

template <typename F>
VectorXd fdGradient(F&& f, const VectorXd& theta, double h) {
  VectorXd g(theta.size());
  VectorXd t = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + h;
    const double hi = f(t);
    t[i] = theta[i] - h;
    const double lo = f(t);
    t[i] = theta[i];
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

template <typename F>
MatrixXd fdJacobian(F&& f, const VectorXd& theta, double h) {
  const VectorXd f0 = f(theta);
  MatrixXd jac(f0.size(), theta.size());
  VectorXd t = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    t[i] = theta[i] + h;
    const VectorXd hi = f(t);
    t[i] = theta[i] - h;
    const VectorXd lo = f(t);
    t[i] = theta[i];
    jac.col(i) = (hi - lo) / (2.0 * h);
  }
  return jac;
}

PerturbationResult runFromConfig(const RunConfig& cfg, const PreparedRun& prep) {
  return runAlgorithm(prep.train, prep.validate, prep.dithered, cfg.degree, cfg.timeGrid(),
                      cfg.algorithmOptions());
}

// 1. With the noise level at zero and eps = 0 the flow endpoint must agree
// with the closed-form least-squares fit in standardized coordinates, for
// each of the three water properties, in under 5 s per property.
Report criterionOracle() {
  Report rep;
  for (WaterProperty prop : {WaterProperty::Density, WaterProperty::SpecificHeat,
                             WaterProperty::Conductivity}) {
    const auto t0 = Clock::now();
    RunConfig cfg;
    cfg.property = prop;
    cfg.noise_level = 0.0;
    cfg.epsilon = 0.0;
    const PreparedRun prep = prepareRun(cfg);
    const PerturbationResult res = runFromConfig(cfg, prep);
    const PolynomialModel<double> model(cfg.degree);
    const VectorXd ols = leastSquaresFit(model, res.standardizer.transform(prep.train));
    const double rel = (res.theta0_T_flow - ols).norm() / ols.norm();
    const double sec = secondsSince(t0);
    const std::string name = waterPropertyDisplay(prop);
    rep.expect(rel < 1e-5,
               fmt("%s: |theta_flow - theta_ols| / |theta_ols| = %.3g (< 1e-5)",
                   name.c_str(), rel));
    rep.expect(sec < 5.0, fmt("%s: runtime %.2f s (< 5 s)", name.c_str(), sec));
  }
  return rep;
}

// 2. Statistical reproduction of the published tables over 20 seeds: the
// seed-mean predictions at the 22 source temperatures must fall within 1%
// relative of the predictions from the published rows, and every per-seed
// residual std must sit inside a x2 envelope of the published value. The
// published experiment does not pin its seeds, so digits are compared through
// predictions, never directly.
Report criterionTables() {
  Report rep;
  const auto t0 = Clock::now();

  struct RefRow {
    WaterProperty prop;
    double level;
    double theta[3];
    double rstd;
  };
  // Published rows at 1% and 5% dithering: theta_1..theta_3, residual std.
  const RefRow refs[] = {
      {WaterProperty::Density, 0.01, {763.1823, 1.8221, -3.4862e-3}, 0.5693},
      {WaterProperty::SpecificHeat, 0.01, {5.5944, -8.8978e-3, 1.3982e-5}, 0.0038},
      {WaterProperty::Conductivity, 0.01, {-0.4338, 0.0056, -6.9164e-6}, 0.0010},
      {WaterProperty::Density, 0.05, {759.7205, 1.8512, -3.5432e-3}, 0.6221},
      {WaterProperty::SpecificHeat, 0.05, {5.6124, -9.0082e-3, 1.4148e-5}, 0.0038},
      {WaterProperty::Conductivity, 0.05, {-0.4769, 0.0058, -7.3308e-6}, 0.0011},
  };

  TmpDir tmp;
  RunConfig cfg;
  cfg.output_dir = tmp.path.string();
  std::vector<std::uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
  const TableArtifacts art = tablesToFiles(cfg, seeds, {0.01, 0.05});
  const PolynomialModel<double> model(cfg.degree);

  bool conductivity_failed = false;
  for (const RefRow& ref : refs) {
    const std::string tag =
        fmt("%s %g%%", waterPropertyDisplay(ref.prop).c_str(), ref.level * 100.0);
    const VectorXd xs = loadBuiltinWater(ref.prop).xValues();
    VectorXd ref_theta(3);
    ref_theta << ref.theta[0], ref.theta[1], ref.theta[2];
    const VectorXd ref_pred = model.predict(ref_theta, xs);

    VectorXd mean_pred = VectorXd::Zero(xs.size());
    double worst_seed_dev = 0.0;
    double rstd_lo = std::numeric_limits<double>::infinity();
    double rstd_hi = 0.0;
    int count = 0;
    for (const TableCell& cell : art.cells) {
      if (cell.property != ref.prop || cell.level != ref.level) continue;
      const VectorXd pred = model.predict(cell.theta_star, xs);
      mean_pred += pred;
      worst_seed_dev = std::max(
          worst_seed_dev,
          ((pred - ref_pred).cwiseQuotient(ref_pred)).cwiseAbs().maxCoeff());
      rstd_lo = std::min(rstd_lo, cell.residual_std);
      rstd_hi = std::max(rstd_hi, cell.residual_std);
      ++count;
    }
    rep.expect(count == 20, fmt("%s: 20 seed cells present (%d)", tag.c_str(), count));
    if (count == 0) continue;
    mean_pred /= static_cast<double>(count);
    const double dev =
        ((mean_pred - ref_pred).cwiseQuotient(ref_pred)).cwiseAbs().maxCoeff();
    const bool pred_ok = dev <= 0.01;
    if (!pred_ok && ref.prop == WaterProperty::Conductivity) conductivity_failed = true;
    rep.expect(pred_ok,
               fmt("%s: seed-mean prediction deviation over 22 temperatures = %.4g "
                   "(<= 0.01); worst single seed %.4g",
                   tag.c_str(), dev, worst_seed_dev));
    rep.expect(rstd_lo >= ref.rstd / 2.0 && rstd_hi <= ref.rstd * 2.0,
               fmt("%s: per-seed residual std in [%.4g, %.4g], inside x2 envelope "
                   "[%.4g, %.4g] of %.4g",
                   tag.c_str(), rstd_lo, rstd_hi, ref.rstd / 2.0, ref.rstd * 2.0,
                   ref.rstd));
  }
  const double sec = secondsSince(t0);
  rep.expect(sec < 120.0, fmt("runtime %.1f s (< 120 s)", sec));
  if (conductivity_failed) {
    rep.note("analysis: the published k rows print the linear coefficient to 2");
    rep.note("significant digits (0.0056 / 0.0058). Rounding at that precision moves");
    rep.note("the row's own predictions by up to ~2.4% after the cancellation between");
    rep.note("the three terms (|theta_2 T| ~ 2 against predictions ~ 0.6), so a 1%");
    rep.note("prediction gate against those rows is unattainable independent of the");
    rep.note("fit quality. rho and c_p predictions and every residual-std envelope");
    rep.note("pass; the k residual-std envelope is the meaningful k-row signal.");
  }
  return rep;
}

// 3. Log-log slope of the expansion residual r(eps) over a fixed 2-decade
// epsilon ladder must land in [1.8, 2.3] on the density problem in under 60 s.
Report criterionConvergenceRate() {
  Report rep;
  const auto t0 = Clock::now();
  RunConfig cfg;
  const PreparedRun prep = prepareRun(cfg);
  const std::vector<double> ladder{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  const SweepResult sw = epsilonSweep(prep.train, prep.validate, prep.dithered, cfg.degree,
                                      cfg.timeGrid(), cfg.algorithmOptions(), ladder);
  for (const SweepPoint& pt : sw.points)
    rep.note(fmt("eps = %-7g r = %.6g", pt.epsilon, pt.residual));
  rep.expect(!sw.at_floor, "residuals sit above the 1e-14 floor");
  rep.expect(sw.slope >= 1.8 && sw.slope <= 2.3,
             fmt("fitted slope of log r against log eps = %.4f (in [1.8, 2.3])", sw.slope));
  const double sec = secondsSince(t0);
  rep.expect(sec < 60.0, fmt("runtime %.1f s (< 60 s)", sec));
  return rep;
}

// 4. |theta^eps(T) - theta0(T) - eps theta1(T)| must shrink by a factor in
// [3, 5] at each of three epsilon halvings from 4e-3, i.e. like eps^2.
Report criterionExpansion() {
  Report rep;
  RunConfig cfg;
  const PreparedRun prep = prepareRun(cfg);
  const PerturbationResult res = runFromConfig(cfg, prep);
  const PolynomialModel<double> model(cfg.degree);
  const LossSurface<double> train(model, res.standardizer.transform(prep.train));
  const LossSurface<double> dith(model, res.standardizer.transform(prep.dithered));

  const double ladder[] = {4e-3, 2e-3, 1e-3, 5e-4};
  std::vector<double> gaps;
  for (double eps : ladder) {
    const VectorXd full =
        integrateControlled(train, dith, res.trajectory.u0, eps,
                            VectorXd::Zero(model.paramCount()).eval(), cfg.timeGrid());
    gaps.push_back((full - res.theta0_T_flow - eps * res.theta1_T_flow).norm());
    rep.note(fmt("eps = %-6g gap = %.6g", eps, gaps.back()));
  }
  for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
    const double ratio = gaps[i] / gaps[i + 1];
    rep.expect(ratio >= 3.0 && ratio <= 5.0,
               fmt("gap(%g) / gap(%g) = %.3f (in [3, 5])", ladder[i], ladder[i + 1], ratio));
  }
  return rep;
}

// 5. At every grid node the chosen control must beat 100 random admissible
// controls in the Hamiltonian, up to 1e-12.
Report criterionMaximality() {
  Report rep;
  RunConfig cfg;
  const PreparedRun prep = prepareRun(cfg);
  const PerturbationResult res = runFromConfig(cfg, prep);
  const PolynomialModel<double> model(cfg.degree);
  const LossSurface<double> train(model, res.standardizer.transform(prep.train));
  const LossSurface<double> dith(model, res.standardizer.transform(prep.dithered));
  const Trajectory<double>& traj = res.trajectory;

  Rng rng(7);
  double worst = std::numeric_limits<double>::infinity();
  const Index nodes = traj.grid.nodeCount();
  for (Index k = 0; k < nodes; ++k) {
    const VectorXd theta = traj.theta0.col(k);
    const VectorXd p = traj.p0.col(k);
    const double h_opt = hamiltonian(train, dith, theta, p, traj.u0[k], cfg.epsilon);
    for (int j = 0; j < 100; ++j) {
      const double u = rng.nextUniform(-1.0, 1.0);
      const double h_u = hamiltonian(train, dith, theta, p, u, cfg.epsilon);
      worst = std::min(worst, h_opt - h_u);
    }
  }
  rep.expect(worst >= -1e-12,
             fmt("min over %lld nodes x 100 random u of H(u0) - H(u) = %.3g (>= -1e-12)",
                 static_cast<long long>(nodes), worst));
  return rep;
}

// 6. The duality gap |<p0(T), theta1(T)> - quadrature| must contract at least
// 3.5x per step halving under the corrected adjoint, and the first-order term
// must be non-negative up to 1e-10.
Report criterionDuality() {
  Report rep;
  const Index ladder[] = {500, 1000, 2000};
  std::vector<double> gaps;
  for (Index n : ladder) {
    RunConfig cfg;
    cfg.n_steps = n;
    const PreparedRun prep = prepareRun(cfg);
    const PerturbationResult res = runFromConfig(cfg, prep);
    gaps.push_back(res.duality_gap);
    rep.note(fmt("n = %-5lld gap = %.6g first_order_term = %.6g",
                 static_cast<long long>(n), res.duality_gap, res.first_order_term));
    rep.expect(res.first_order_term >= -1e-10,
               fmt("n = %lld: first_order_term >= -1e-10", static_cast<long long>(n)));
  }
  for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
    const bool ok = gaps[i + 1] == 0.0 || gaps[i] / gaps[i + 1] >= 3.5;
    const double ratio = gaps[i + 1] == 0.0 ? std::numeric_limits<double>::infinity()
                                            : gaps[i] / gaps[i + 1];
    rep.expect(ok, fmt("gap(n=%lld) / gap(n=%lld) = %.3f (>= 3.5)",
                       static_cast<long long>(ladder[i]),
                       static_cast<long long>(ladder[i + 1]), ratio));
  }
  return rep;
}

// 7. Analytic gradient, Hessian, B-Jacobian and terminal-cost gradient must
// match central finite differences to 1e-4 relative at 20 random points.
Report criterionDerivatives() {
  Report rep;
  RunConfig cfg;
  const PreparedRun prep = prepareRun(cfg);
  const Standardizer st = Standardizer::fit(prep.train);
  const PolynomialModel<double> model(cfg.degree);
  const LossSurface<double> train(model, st.transform(prep.train));
  const LossSurface<double> validate(model, st.transform(prep.validate));
  const LossSurface<double> dith(model, st.transform(prep.dithered));

  Rng rng(11);
  const double h = 1e-6;
  double worst_grad = 0.0, worst_hess = 0.0, worst_bjac = 0.0, worst_phi = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd theta(model.paramCount());
    for (Index i = 0; i < theta.size(); ++i) theta[i] = rng.nextGaussian();

    const VectorXd g_fd =
        fdGradient([&](const VectorXd& t) { return train.value(t); }, theta, h);
    worst_grad = std::max(worst_grad,
                          (g_fd - train.gradient(theta)).norm() / train.gradient(theta).norm());

    const MatrixXd h_fd =
        fdJacobian([&](const VectorXd& t) { return train.gradient(t); }, theta, h);
    worst_hess =
        std::max(worst_hess, (h_fd - train.hessian(theta)).norm() / train.hessian(theta).norm());

    const MatrixXd b_fd =
        fdJacobian([&](const VectorXd& t) { return dith.gradientSquared(t); }, theta, h);
    worst_bjac = std::max(worst_bjac,
                          (b_fd - dith.gradientSquaredJacobian(theta)).norm() /
                              dith.gradientSquaredJacobian(theta).norm());

    const VectorXd phi_fd =
        fdGradient([&](const VectorXd& t) { return validate.value(t); }, theta, h);
    worst_phi = std::max(worst_phi, (phi_fd - validate.gradient(theta)).norm() /
                                        validate.gradient(theta).norm());
  }
  rep.expect(worst_grad < 1e-4, fmt("grad: worst relative FD mismatch %.3g (< 1e-4)", worst_grad));
  rep.expect(worst_hess < 1e-4, fmt("hessian: worst relative FD mismatch %.3g (< 1e-4)", worst_hess));
  rep.expect(worst_bjac < 1e-4, fmt("b_jacobian: worst relative FD mismatch %.3g (< 1e-4)", worst_bjac));
  rep.expect(worst_phi < 1e-4, fmt("phi_grad: worst relative FD mismatch %.3g (< 1e-4)", worst_phi));
  return rep;
}

// 8. RK4 on the single-parameter exponential-decay problem (one sample (0, 0),
// degree 0, so J = theta^2 and theta(T) = e^{-2T} theta(0)) must show a fitted
// order in [3.5, 4.5] under step refinement.
Report criterionIntegratorOrder() {
  Report rep;
  const Dataset data(std::vector<SamplePair>{{0.0, 0.0}}, DatasetLabel::Train);
  const PolynomialModel<double> model(0);
  const LossSurface<double> surf(model, data);
  VectorXd theta0(1);
  theta0 << 1.0;
  const double exact = std::exp(-2.0);

  std::vector<double> log_dt, log_err;
  for (Index n : {4, 8, 16, 32}) {
    const TimeGrid<double> grid(1.0, n);
    const auto traj = integrateGradientFlow(surf, theta0, grid);
    const double err = std::abs(traj.theta0(0, n) - exact);
    log_dt.push_back(std::log(grid.dt()));
    log_err.push_back(std::log(err));
    rep.note(fmt("n = %-3lld |theta(T) - e^-2| = %.3e", static_cast<long long>(n), err));
  }
  const double order = fitSlope(log_dt, log_err);
  rep.expect(order >= 3.5 && order <= 4.5, fmt("fitted order %.3f (in [3.5, 4.5])", order));
  return rep;
}

// 9. Re-running a manifest into a fresh directory must reproduce manifest,
// result and trajectory files bitwise. Checked on the default config and on a
// config with every seed-bearing knob moved.
Report criterionDeterminism() {
  Report rep;
  std::vector<RunConfig> cfgs(2);
  cfgs[1].property = WaterProperty::Conductivity;
  cfgs[1].epsilon = 3e-3;
  cfgs[1].n_steps = 777;
  cfgs[1].noise_level = 0.05;
  cfgs[1].split_seed = 9;
  cfgs[1].noise_seed = 17;

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    TmpDir first_dir, second_dir;
    cfgs[i].output_dir = first_dir.path.string();
    const RunArtifacts first = runToFiles(cfgs[i]);
    RunConfig reloaded = loadConfigFile(first.manifest_path);
    reloaded.output_dir = second_dir.path.string();
    const RunArtifacts second = runToFiles(reloaded);

    const std::string tag = fmt("config %zu (%s)", i + 1,
                                waterPropertyDisplay(cfgs[i].property).c_str());
    rep.expect(readFileBytes(first.manifest_path) == readFileBytes(second.manifest_path),
               tag + ": manifest.json reproduced bitwise");
    rep.expect(readFileBytes(first.result_path) == readFileBytes(second.result_path),
               tag + ": result.csv reproduced bitwise");
    rep.expect(readFileBytes(first.trajectory_path) == readFileBytes(second.trajectory_path),
               tag + ": trajectory.csv reproduced bitwise");
  }
  return rep;
}

struct Criterion {
  int id;
  const char* name;
  Report (*run)();
};

const Criterion kCriteria[] = {
    {1, "oracle equivalence", criterionOracle},
    {2, "table reproduction (statistical)", criterionTables},
    {3, "convergence rate", criterionConvergenceRate},
    {4, "expansion consistency", criterionExpansion},
    {5, "pointwise maximality", criterionMaximality},
    {6, "adjoint duality", criterionDuality},
    {7, "derivative correctness", criterionDerivatives},
    {8, "integrator order", criterionIntegratorOrder},
    {9, "determinism", criterionDeterminism},
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected = std::atoi(argv[++i]);
    } else if (arg.rfind("--criterion=", 0) == 0) {
      selected = std::atoi(arg.c_str() + 12);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]  (N in 1..9)\n", argv[0]);
      return 2;
    }
  }
  if (selected < 0 || selected > 9) {
    std::fprintf(stderr, "criterion %d out of range 1..9\n", selected);
    return 2;
  }

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (selected != 0 && c.id != selected) continue;
    const auto t0 = Clock::now();
    Report rep;
    try {
      rep = c.run();
    } catch (const std::exception& e) {
      rep.pass = false;
      rep.lines.push_back(std::string("[!!] unexpected exception: ") + e.what());
    }
    std::printf("[%s] criterion %d: %s (%.2f s)\n", rep.pass ? "PASS" : "FAIL", c.id,
                c.name, secondsSince(t0));
    for (const std::string& line : rep.lines) std::printf("    %s\n", line.c_str());
    if (!rep.pass) ++failures;
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
