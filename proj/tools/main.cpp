#include <spdlog/spdlog.h>

#include <iostream>

#include "CLI11.hpp"
#include "cli/commands.hpp"

using namespace rps::cli;

int main(int argc, char** argv) {
  CLI::App app{"Radar respiration simulator: depth geometry to FMCW IF signals and evaluation"};
  app.require_subcommand(1);

  CommonOptions common;
  std::uint64_t seed = 1;
  std::string plots = "none";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--threads", common.threads, "worker threads (0 = all cores)");
    sub->add_option("--out", common.out, "output directory")->required();
    sub->add_option("--plots", plots, "plot format")->check(CLI::IsMember({"none", "png", "svg"}));
  };

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "render a synthetic scene to a depth sequence and ground truth");
  s->add_option("scene", synth.scene, "scene JSON")->required();
  add_common(s);

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "depth sequence to scattering centers and IF cube");
  m->add_option("depth", sim.depth, "depth sequence (.dseq)")->required();
  m->add_option("radar", sim.radar, "radar JSON")->required();
  m->add_flag("--baseline", sim.baseline, "also synthesize the sinusoidal baseline cube");
  m->add_option("--truth", sim.truth, "ground-truth CSV used to fit the baseline");
  m->add_option("--truth-part", sim.truth_part, "ground-truth part index");
  m->add_option("--baseline-amplitude", sim.baseline_amplitude, "baseline amplitude (m)");
  add_common(m);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "compare two IF cubes");
  e->add_option("cube_a", ev.cube_a, "reference cube (.ifcb)")->required();
  e->add_option("cube_b", ev.cube_b, "compared cube (.ifcb)")->required();
  e->add_option("region", ev.region, "region JSON");
  e->add_option("--truth", ev.truth, "ground-truth CSV");
  e->add_option("--truth-part", ev.truth_part, "ground-truth part index");
  add_common(e);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "summarize metrics reports");
  r->add_option("reports", rep.reports, "report.json files")->required();
  add_common(r);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? exit_ok : exit_validation;
  }

  configure_logging();
  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) common.seed = seed;
  common.plots = plot_format_from_string(plots);

  try {
    if (sub == s) run_synth(synth, common);
    else if (sub == m) run_simulate(sim, common);
    else if (sub == e) run_evaluate(ev, common);
    else run_report(rep, common);
  } catch (const StageError& err) {
    spdlog::error("{}: {}", sub->get_name(), err.what());
    return err.code();
  } catch (const std::exception& err) {
    spdlog::error("{}: {}", sub->get_name(), err.what());
    return exit_runtime;
  }
  return exit_ok;
}
