#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using stocheq::cli::CommandResult;
using stocheq::cli::Format;

struct Common {
  stocheq::Tolerance tol;
  std::string format = "text";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--rank-tol", c.tol.rank_rel, "relative singular-value cutoff");
  app->add_option("--eq-abs", c.tol.eq_abs, "absolute matrix-equality tolerance");
  app->add_option("--eq-rel", c.tol.eq_rel, "relative matrix-equality tolerance");
  app->add_option("--format", c.format, "report format")
      ->check(CLI::IsMember({"text", "json"}));
}

stocheq::Vector vector_option(const std::string& s) {
  return stocheq::cli::parse_vector(s);
}

}  // namespace

int main(int argc, char** argv) {
  Common common;
  try {
    common.tol = stocheq::cli::tolerance_from_env();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stocheq::cli::kExitError;
  }

  CLI::App app{"Equivalence checking and reduction of stochastic linear systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stocheq 0.1.0");

  stocheq::cli::CheckArgs check;
  std::string relation, transform;
  auto* c = app.add_subcommand("check", "decide an equivalence between two systems");
  c->add_option("kind", check.kind, "lin | ext | bisim | realization")
      ->required()
      ->check(CLI::IsMember({"lin", "ext", "bisim", "realization"}));
  c->add_option("sys1", check.sys1, "first system")->required();
  c->add_option("sys2", check.sys2, "second system")->required();
  c->add_option("--relation,-r", relation, "relation document");
  c->add_option("--transform,-t", transform, "transform document (lin)");
  c->add_flag("--nondegenerate", check.nondegenerate,
              "bisim without relation for systems with non-degenerate noise");
  add_common(c, common);

  stocheq::cli::MaximalRelationArgs maxrel;
  auto* mr = app.add_subcommand("maximal-relation",
                                "write the largest external-equivalence relation");
  mr->add_option("kind", maxrel.kind, "ext")->required()->check(CLI::IsMember({"ext"}));
  mr->add_option("sys1", maxrel.sys1, "first system")->required();
  mr->add_option("sys2", maxrel.sys2, "second system")->required();
  mr->add_option("-o,--out", maxrel.out, "relation output")->required();
  add_common(mr, common);

  stocheq::cli::ReduceArgs reduce;
  std::string relation_out, graph_out, certificate_out;
  auto* rd = app.add_subcommand("reduce", "minimal equivalent system");
  rd->add_option("kind", reduce.kind, "ext | bisim")
      ->required()
      ->check(CLI::IsMember({"ext", "bisim"}));
  rd->add_option("sys", reduce.sys, "system to reduce")->required();
  rd->add_option("-o,--out", reduce.out, "reduced system output")->required();
  rd->add_option("--relation-out", relation_out, "inducing relation output");
  rd->add_option("--graph-out", graph_out,
                 "relation between reduced and original states");
  rd->add_option("--certificate-out", certificate_out, "certificate output");
  add_common(rd, common);

  stocheq::cli::SimulateArgs sim;
  std::string x0, inputs;
  auto* sm = app.add_subcommand("simulate", "sample trajectories");
  sm->add_option("sys", sim.sys, "system to simulate")->required();
  sm->add_option("--x0", x0, "initial state, comma separated (default 0)");
  sm->add_option("--inputs", inputs, "input sequence document");
  sm->add_option("--seed", sim.seed, "random seed");
  sm->add_option("-N,--trajectories", sim.trajectories, "number of trajectories")->check(CLI::PositiveNumber);
  sm->add_option("-T,--horizon", sim.horizon, "last time step")->check(CLI::NonNegativeNumber);
  sm->add_option("-o,--out", sim.out, "ensemble output (tab separated)")->required();
  add_common(sm, common);

  stocheq::cli::ValidateArgs val;
  std::string boxes, vinputs, x01, x02;
  auto* vd = app.add_subcommand("validate", "Monte Carlo validation of a relation");
  vd->add_option("sys1", val.sys1, "first system")->required();
  vd->add_option("sys2", val.sys2, "second system")->required();
  vd->add_option("relation", val.relation, "relation document")->required();
  vd->add_option("--seed", val.seed, "random seed");
  vd->add_option("-N,--trajectories", val.trajectories, "number of trajectories")->check(CLI::Range(2, 100000000));
  vd->add_option("-T,--horizon", val.horizon, "last time step of the output-law comparison")->check(CLI::NonNegativeNumber);
  vd->add_option("--boxes", boxes, "box list document");
  vd->add_option("--inputs", vinputs, "input sequence document");
  vd->add_option("--x0-1", x01, "initial state of sys1");
  vd->add_option("--x0-2", x02, "initial state of sys2");
  add_common(vd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stocheq::cli::kExitError;
  }

  CommandResult result;
  try {
    if (*c) {
      if (!relation.empty()) check.relation = relation;
      if (!transform.empty()) check.transform = transform;
      check.tol = common.tol;
      result = stocheq::cli::cmd_check(check);
    } else if (*mr) {
      maxrel.tol = common.tol;
      result = stocheq::cli::cmd_maximal_relation(maxrel);
    } else if (*rd) {
      if (!relation_out.empty()) reduce.relation_out = relation_out;
      if (!graph_out.empty()) reduce.graph_out = graph_out;
      if (!certificate_out.empty()) reduce.certificate_out = certificate_out;
      reduce.tol = common.tol;
      result = stocheq::cli::cmd_reduce(reduce);
    } else if (*sm) {
      if (!x0.empty()) sim.x0 = vector_option(x0);
      if (!inputs.empty()) sim.inputs = inputs;
      sim.tol = common.tol;
      result = stocheq::cli::cmd_simulate(sim);
    } else if (*vd) {
      if (!boxes.empty()) val.boxes = boxes;
      if (!vinputs.empty()) val.inputs = vinputs;
      if (!x01.empty()) val.x0_1 = vector_option(x01);
      if (!x02.empty()) val.x0_2 = vector_option(x02);
      val.tol = common.tol;
      result = stocheq::cli::cmd_validate(val);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stocheq::cli::kExitError;
  }

  const Format fmt = common.format == "json" ? Format::kJson : Format::kText;
  std::ostream& out = result.exit_code == stocheq::cli::kExitError ? std::cerr : std::cout;
  out << result.render(fmt);
  return result.exit_code;
}
