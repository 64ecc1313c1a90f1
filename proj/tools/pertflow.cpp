// pertflow CLI: run the perturbative weakly-controlled gradient-flow pipeline,
// reproduce the property tables, emit plot-ready loss curves, and sweep the
// expansion residual over epsilon.
//
// Exit codes: 0 success; 1 unexpected error; 2 config or data validation;
// 3 numerical divergence; 4 sweep slope outside [1.8, 2.3]; 5 sweep residuals
// at the numerical floor.

#include <pertflow/runner.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>

namespace pf = pertflow;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string source, property, csv_path, x_column, y_column;
  int degree = 2;
  long long m1 = 18, m2 = 6, n_steps = 2000;
  std::string split_mode, noise_scale, adjoint;
  unsigned long long split_seed = 1, noise_seed = 2;
  double noise_level = 0.01, epsilon = 1e-3, epsilon_max = 0.1, final_time = 50.0;
  double u_min = -1.0, u_max = 1.0, tie_tol = 1e-12;
  std::vector<double> theta_init;
  bool standardize = true;
  bool paper_literal = false;
  std::string out_dir;

  std::map<std::string, CLI::Option*> opt;
};

std::shared_ptr<ConfigFlags> addConfigFlags(CLI::App* cmd, bool with_out = true) {
  auto f = std::make_shared<ConfigFlags>();
  auto& o = f->opt;
  o["config"] = cmd->add_option("--config", f->config_path,
                                "JSON config file (bare config or a manifest.json)");
  o["source"] = cmd->add_option("--source", f->source, "builtin_water or csv");
  o["property"] = cmd->add_option("--property", f->property,
                                  "density, specific_heat, or conductivity");
  o["csv_path"] = cmd->add_option("--csv", f->csv_path, "CSV input path (source=csv)");
  o["x_column"] = cmd->add_option("--x-column", f->x_column, "CSV x column name");
  o["y_column"] = cmd->add_option("--y-column", f->y_column, "CSV y column name");
  o["degree"] = cmd->add_option("--degree", f->degree, "polynomial degree");
  o["m1"] = cmd->add_option("--m1", f->m1, "train split size");
  o["m2"] = cmd->add_option("--m2", f->m2, "validation split size");
  o["split_mode"] = cmd->add_option("--split-mode", f->split_mode,
                                    "without_replacement or with_replacement");
  o["split_seed"] = cmd->add_option("--split-seed", f->split_seed, "split RNG seed");
  o["noise_level"] = cmd->add_option("--noise-level", f->noise_level,
                                     "dither level (fraction, e.g. 0.01)");
  o["noise_seed"] = cmd->add_option("--noise-seed", f->noise_seed, "dither RNG seed");
  o["noise_scale"] = cmd->add_option("--noise-scale", f->noise_scale,
                                     "variance (sigma^2 = level*Var y) or std (sigma = level*Std y)");
  o["epsilon"] = cmd->add_option("--epsilon", f->epsilon, "perturbation strength");
  o["epsilon_max"] = cmd->add_option("--epsilon-max", f->epsilon_max,
                                     "expansion-regime bound (runs with epsilon >= this are refused)");
  o["final_time"] = cmd->add_option("--final-time", f->final_time, "flow horizon T");
  o["n_steps"] = cmd->add_option("--steps", f->n_steps, "RK4 step count");
  o["u_min"] = cmd->add_option("--u-min", f->u_min, "control set lower bound");
  o["u_max"] = cmd->add_option("--u-max", f->u_max, "control set upper bound");
  o["tie_tol"] = cmd->add_option("--tie-tol", f->tie_tol, "switching-function tie tolerance");
  o["theta_init"] = cmd->add_option("--theta0", f->theta_init,
                                    "initial raw-coordinate parameters (comma separated)")
                        ->delimiter(',');
  o["standardize"] = cmd->add_flag("--standardize,!--no-standardize", f->standardize,
                                   "z-score x and y before the flows (default on)");
  o["adjoint"] = cmd->add_option("--adjoint", f->adjoint, "corrected or paper_literal");
  o["paper_literal"] = cmd->add_flag("--paper-literal-adjoint", f->paper_literal,
                                     "integrate the adjoint exactly as printed (no p factor)");
  if (with_out)
    o["out"] = cmd->add_option("--out", f->out_dir,
                               "output directory (default $PERTFLOW_OUT, else ./pertflow_out)");
  return f;
}

pf::RunConfig buildConfig(const ConfigFlags& f) {
  pf::RunConfig cfg;
  if (f.opt.at("config")->count() > 0) cfg = pf::loadConfigFile(f.config_path);
  const auto set = [&f](const char* name, auto fn) {
    if (f.opt.count(name) && f.opt.at(name)->count() > 0) fn();
  };
  set("source", [&] { cfg.source = pf::dataSourceFromName(f.source); });
  set("property", [&] {
    cfg.property = pf::waterPropertyFromName(f.property);
    if (f.opt.at("source")->count() == 0 && f.opt.at("config")->count() == 0)
      cfg.source = pf::DataSource::BuiltinWater;
  });
  set("csv_path", [&] {
    cfg.csv_path = f.csv_path;
    if (f.opt.at("source")->count() == 0) cfg.source = pf::DataSource::Csv;
  });
  set("x_column", [&] { cfg.x_column = f.x_column; });
  set("y_column", [&] { cfg.y_column = f.y_column; });
  set("degree", [&] { cfg.degree = f.degree; });
  set("m1", [&] { cfg.m1 = f.m1; });
  set("m2", [&] { cfg.m2 = f.m2; });
  set("split_mode", [&] { cfg.split_mode = pf::splitModeFromName(f.split_mode); });
  set("split_seed", [&] { cfg.split_seed = f.split_seed; });
  set("noise_level", [&] { cfg.noise_level = f.noise_level; });
  set("noise_seed", [&] { cfg.noise_seed = f.noise_seed; });
  set("noise_scale", [&] { cfg.noise_scale = pf::noiseScaleFromName(f.noise_scale); });
  set("epsilon", [&] { cfg.epsilon = f.epsilon; });
  set("epsilon_max", [&] { cfg.epsilon_max = f.epsilon_max; });
  set("final_time", [&] { cfg.final_time = f.final_time; });
  set("n_steps", [&] { cfg.n_steps = f.n_steps; });
  set("u_min", [&] { cfg.u_min = f.u_min; });
  set("u_max", [&] { cfg.u_max = f.u_max; });
  set("tie_tol", [&] { cfg.tie_tol = f.tie_tol; });
  set("theta_init", [&] { cfg.theta_init = f.theta_init; });
  set("standardize", [&] { cfg.standardize = f.standardize; });
  set("adjoint", [&] { cfg.adjoint = pf::adjointFormFromName(f.adjoint); });
  if (f.paper_literal) cfg.adjoint = pf::AdjointForm::PaperLiteral;

  if (f.opt.count("out") && f.opt.at("out")->count() > 0) {
    cfg.output_dir = f.out_dir;
  } else if (cfg.output_dir.empty()) {
    const char* env = std::getenv("PERTFLOW_OUT");
    cfg.output_dir = env != nullptr ? env : "pertflow_out";
  }
  return cfg;
}

void printVector(const char* name, const pf::VectorXd& v) {
  std::cout << name << " = [";
  for (pf::Index i = 0; i < v.size(); ++i)
    std::cout << (i ? ", " : "") << pf::formatDouble(v[i]);
  std::cout << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pertflow: perturbative weakly-controlled gradient flows"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 1 unexpected, 2 config/data validation, 3 numerical\n"
             "divergence, 4 sweep slope out of [1.8, 2.3], 5 sweep at numerical floor.");
  int rc = 0;

  auto* run = app.add_subcommand("run", "run the full algorithm, write manifest/result/trajectory");
  auto rf = addConfigFlags(run);
  run->callback([rf]() {
    const pf::RunConfig cfg = buildConfig(*rf);
    const pf::RunArtifacts art = pf::runToFiles(cfg);
    printVector("theta_star", art.result.theta_star);
    std::cout << "residual_std = " << pf::formatDouble(art.residual_std) << "\n"
              << "delta_train = " << pf::formatDouble(art.result.delta_train)
              << ", delta_val = " << pf::formatDouble(art.result.delta_val) << "\n"
              << "first_order_term = " << pf::formatDouble(art.result.first_order_term)
              << ", expansion_residual = "
              << pf::formatDouble(art.result.expansion_residual_flow) << "\n";
    if (art.result.tie_warning)
      std::cout << "note: tie rule fired on "
                << pf::formatDouble(100.0 * art.result.tie_fraction)
                << "% of nodes (switching value below tie_tol where the backward"
                   " adjoint has contracted; u0 = 0 there)\n";
    std::cout << "wrote " << art.manifest_path.string() << ", " << art.result_path.string()
              << ", " << art.trajectory_path.string() << "\n";
  });

  auto* tables = app.add_subcommand("reproduce-tables",
                                    "all three properties at each noise level");
  auto tf = addConfigFlags(tables);
  auto seeds = std::make_shared<std::vector<unsigned long long>>();
  auto levels = std::make_shared<std::vector<double>>(std::vector<double>{0.01, 0.05});
  tables->add_option("--seeds", *seeds, "seed list; one run per seed")->delimiter(',');
  tables->add_option("--levels", *levels, "noise levels (default 0.01,0.05)")->delimiter(',');
  tables->callback([tf, seeds, levels]() {
    const pf::RunConfig cfg = buildConfig(*tf);
    std::vector<std::uint64_t> s(seeds->begin(), seeds->end());
    const pf::TableArtifacts art = pf::tablesToFiles(cfg, s, *levels);
    std::ifstream txt(art.txt_path);
    std::cout << txt.rdbuf() << "\n";
    std::cout << "wrote " << art.txt_path.string() << ", " << art.csv_path.string() << "\n";
  });

  auto* curves = app.add_subcommand("loss-curves",
                                    "per-node train/validation losses at levels 0/1%/5%");
  auto cf = addConfigFlags(curves);
  curves->callback([cf]() {
    const pf::RunConfig cfg = buildConfig(*cf);
    const pf::LossCurveArtifacts art = pf::lossCurvesToFiles(cfg);
    std::cout << "wrote " << art.curves_path.string() << ", " << art.markers_path.string()
              << "\n";
  });

  auto* sweep = app.add_subcommand("sweep", "expansion-residual slope over an epsilon list");
  auto sf = addConfigFlags(sweep);
  auto eps_list = std::make_shared<std::vector<double>>(
      std::vector<double>{1e-4, 3e-4, 1e-3, 3e-3, 1e-2});
  sweep->add_option("--epsilons", *eps_list, "epsilon values (>= 4, spanning >= 2 decades)")
      ->delimiter(',');
  sweep->callback([sf, eps_list, &rc]() {
    const pf::RunConfig cfg = buildConfig(*sf);
    const pf::SweepArtifacts art = pf::sweepToFiles(cfg, *eps_list);
    for (const auto& pt : art.sweep.points)
      std::cout << "epsilon = " << pf::formatDouble(pt.epsilon)
                << "  residual = " << pf::formatDouble(pt.residual) << "\n";
    if (art.status == "at_numerical_floor") {
      std::cout << "all residuals at numerical floor (< 1e-14); slope undefined\n";
      rc = 5;
    } else {
      std::cout << "fitted slope = " << pf::formatDouble(art.sweep.slope)
                << " (expected range [1.8, 2.3])\n";
      if (art.status != "ok") {
        std::cout << "slope outside the expected range\n";
        rc = 4;
      }
    }
    std::cout << "wrote " << art.csv_path.string() << ", " << art.summary_path.string()
              << "\n";
  });

  auto* exp = app.add_subcommand("export-data", "write a built-in water table as CSV");
  auto eprop = std::make_shared<std::string>("density");
  auto efile = std::make_shared<std::string>();
  exp->add_option("--property", *eprop, "density, specific_heat, or conductivity");
  exp->add_option("--out-file", *efile, "target CSV (default water_<property>.csv)");
  exp->callback([eprop, efile]() {
    const pf::WaterProperty p = pf::waterPropertyFromName(*eprop);
    const std::filesystem::path path =
        efile->empty() ? "water_" + pf::waterPropertyName(p) + ".csv" : *efile;
    pf::exportBuiltin(p, path);
    std::cout << "wrote " << path.string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;  // usage problems are config errors
  } catch (const pf::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pf::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const pf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
