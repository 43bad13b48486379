// qkayak: prediction and simulation of shear-driven Q-tensor orbits.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "qkayak/harness.hpp"

namespace {

struct Overrides {
  std::vector<std::pair<std::string, double>> kv;
  void add_flag(CLI::App* app, const std::string& name) {
    app->add_option_function<double>(
        "--" + name,
        [this, name](const double& v) { kv.push_back({name, v}); },
        "override config key " + name);
  }
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkayak: kayaking-orbit prediction and simulation for "
               "Q-tensor nematodynamics in steady shear"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--out", out_dir, "output directory");

  Overrides ovr;
  for (const char* k : {"omega", "beta", "b", "c", "tau-ldg", "m-c", "m-l", "m-q",
                        "v1", "v2", "v3", "v4", "v5", "v6", "v7", "rel-tol",
                        "abs-tol", "phi0", "epsilon"}) {
    ovr.add_flag(&app, k);
  }

  CLI::App* predict = app.add_subcommand("predict", "closed-form bifurcation report");

  qkayak::SimulateOptions sim_opt;
  CLI::App* simulate = app.add_subcommand("simulate", "integrate and classify");
  simulate->add_option("--sim-beta", sim_opt.beta, "beta for this run");
  simulate->add_option("--t-final", sim_opt.t_final, "integration time (default 10 T0)");
  simulate->add_option("--theta0", sim_opt.theta0, "initial polar angle (rad)");
  simulate->add_option("--phi-start", sim_opt.phi_start, "initial azimuth (rad)");
  simulate->add_option("--u0", sim_opt.u0[0], "initial normal offset along E0");
  simulate->add_option("--u21", sim_opt.u0[1], "initial normal offset along E21");
  simulate->add_option("--u22", sim_opt.u0[2], "initial normal offset along E22");
  simulate->add_option("--samples", sim_opt.samples, "CSV sample count");
  simulate->add_flag("--svg", sim_opt.svg, "emit SVG phase portraits");

  qkayak::SimulateOptions cls_opt;
  CLI::App* classify = app.add_subcommand("classify", "settle and classify one orbit");
  classify->add_option("--sim-beta", cls_opt.beta, "beta for this run");
  classify->add_option("--t-final", cls_opt.t_final, "settle time (default 20 T0)");
  classify->add_option("--theta0", cls_opt.theta0, "initial polar angle (rad)");
  classify->add_option("--phi-start", cls_opt.phi_start, "initial azimuth (rad)");
  classify->add_option("--u0", cls_opt.u0[0], "initial normal offset along E0");
  classify->add_option("--u21", cls_opt.u0[1], "initial normal offset along E21");
  classify->add_option("--u22", cls_opt.u0[2], "initial normal offset along E22");

  qkayak::VerifyOrderOptions vo_opt;
  CLI::App* verify = app.add_subcommand(
      "verify-order", "return-displacement scaling in beta");
  verify->add_option("--betas", vo_opt.betas, "beta values (include 0 for the noise row)");
  verify->add_option("--thetas", vo_opt.thetas, "polar angles to sample (rad)");

  qkayak::SweepOptions sw_opt;
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep / region grid");
  sweep->add_option("--param", sw_opt.parameter, "omega | tau_ldg | b | c | beta");
  sweep->add_option("--from", sw_opt.from, "start value")->required();
  sweep->add_option("--to", sw_opt.to, "end value")->required();
  sweep->add_option("--points", sw_opt.points, "grid points");
  std::string param2;
  sweep->add_option("--param2", param2, "second axis (omega x tau_ldg region grid)");
  sweep->add_option("--from2", sw_opt.from2, "second axis start");
  sweep->add_option("--to2", sw_opt.to2, "second axis end");
  sweep->add_option("--points2", sw_opt.points2, "second axis points");
  sweep->add_option("--threads", sw_opt.threads, "worker threads (0 = auto)");

  qkayak::FloquetOptions fl_opt;
  CLI::App* floquet = app.add_subcommand("floquet", "multipliers of a periodic orbit");
  floquet->add_option("--kind", fl_opt.kind, "tumbling | kayaking | point");
  floquet->add_option("--theta-guess", fl_opt.theta_guess,
                      "initial polar angle for kind=point");

  CLI11_PARSE(app, argc, argv);

  try {
    qkayak::CommandContext ctx;
    ctx.cfg = config_path.empty() ? qkayak::default_config()
                                  : qkayak::load_config(config_path);
    for (const auto& [k, v] : ovr.kv) qkayak::apply_override(ctx.cfg, k, v);
    ctx.out_dir = out_dir;
    ctx.command_line = join_args(argc, argv);

    if (predict->parsed()) return qkayak::cmd_predict(ctx);
    if (simulate->parsed()) return qkayak::cmd_simulate(ctx, sim_opt);
    if (classify->parsed()) return qkayak::cmd_classify(ctx, cls_opt);
    if (verify->parsed()) return qkayak::cmd_verify_order(ctx, vo_opt);
    if (sweep->parsed()) {
      if (!param2.empty()) sw_opt.parameter2 = param2;
      return qkayak::cmd_sweep(ctx, sw_opt);
    }
    if (floquet->parsed()) return qkayak::cmd_floquet(ctx, fl_opt);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const qkayak::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qkayak::DegenerateModelError& e) {
    std::cerr << "degenerate model: " << e.what() << "\n";
    return 4;
  } catch (const qkayak::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
