#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stocheq/errors.hpp"
#include "stocheq/io.hpp"
#include "stocheq/reduction.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"

namespace stocheq::cli {

using nlohmann::json;

namespace {

CommandResult guarded(const std::function<CommandResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    CommandResult r;
    r.exit_code = kExitError;
    r.text = std::string("error: ") + e.what() + "\n";
    json j;
    j["schema_version"] = kSchemaVersion;
    j["error"] = e.what();
    r.json = j.dump(2) + "\n";
    return r;
  }
}

json tolerance_json(const Tolerance& tol) {
  return {{"rank_rel", tol.rank_rel},
          {"eq_abs", tol.eq_abs},
          {"eq_rel", tol.eq_rel},
          {"cluster_rel", tol.cluster_rel}};
}

std::string tolerance_text(const Tolerance& tol) {
  std::ostringstream out;
  out << "tolerance: rank_rel=" << tol.rank_rel << " eq_abs=" << tol.eq_abs
      << " eq_rel=" << tol.eq_rel << " cluster_rel=" << tol.cluster_rel
      << "\n";
  return out.str();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

int exit_for(Verdict v) {
  return v == Verdict::kEquivalent ? kExitTrue : kExitFalse;
}

std::filesystem::path sibling_path(const std::filesystem::path& out,
                                   const std::string& suffix) {
  std::filesystem::path p = out;
  p.replace_extension();
  return p.string() + suffix;
}

Vector zeros_or(const std::optional<Vector>& v, Index n, std::string_view what) {
  if (!v) return Vector::Zero(n);
  if (v->size() != n) {
    throw DimensionError(std::string(what) + " must have " + std::to_string(n) +
                         " entries, got " + std::to_string(v->size()));
  }
  return *v;
}

InputSequence load_inputs(const std::optional<std::filesystem::path>& path,
                          Index m) {
  if (!path) return {};
  return parse_inputs(read_text_file(*path), m, path->string());
}

}  // namespace

Tolerance tolerance_from_env() {
  Tolerance tol;
  const std::pair<const char*, double*> vars[] = {
      {"STOCHEQ_RANK_TOL", &tol.rank_rel},
      {"STOCHEQ_EQ_ABS", &tol.eq_abs},
      {"STOCHEQ_EQ_REL", &tol.eq_rel}};
  for (const auto& [name, slot] : vars) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') continue;
    char* end = nullptr;
    const double x = std::strtod(value, &end);
    if (end == value || *end != '\0' || !(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(name) +
                                  ": expected a positive number, got '" +
                                  value + "'");
    }
    *slot = x;
  }
  return tol;
}

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) {
      throw std::invalid_argument("empty entry in vector '" + text + "'");
    }
    const auto last = item.find_last_not_of(" \t");
    const std::string token = item.substr(first, last - first + 1);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(x)) {
      throw std::invalid_argument("bad number '" + token + "' in vector '" +
                                  text + "'");
    }
    values.push_back(x);
  }
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Index>(values.size()));
}

std::string report_text(const CheckReport& report) {
  std::ostringstream out;
  out << "check: " << report.check << "\n";
  out << "verdict: " << to_string(report.verdict) << "\n";
  out << tolerance_text(report.tolerance);
  for (const auto& c : report.conditions) {
    out << "  [" << (c.passed ? "pass" : "FAIL") << "] " << to_string(c.id)
        << "  " << c.label << "  residual=" << format_double(c.residual);
    if (!c.required) out << "  (diagnostic)";
    out << "\n";
  }
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  return out.str();
}

std::string report_json(const CheckReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["check"] = report.check;
  j["verdict"] = to_string(report.verdict);
  j["holds"] = report.holds();
  j["tolerance"] = tolerance_json(report.tolerance);
  json conds = json::array();
  for (const auto& c : report.conditions) {
    json e{{"id", to_string(c.id)},
           {"label", c.label},
           {"passed", c.passed},
           {"required", c.required},
           {"residual", c.residual}};
    if (c.witness) e["witness"] = matrix_json(*c.witness);
    if (c.witness_subspace) {
      e["witness_subspace"] = matrix_json(c.witness_subspace->basis());
    }
    conds.push_back(std::move(e));
  }
  j["conditions"] = std::move(conds);
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

CommandResult cmd_check(const CheckArgs& args) {
  return guarded([&] {
    args.tol.validate();
    const auto s1 = load_system(args.sys1);
    const auto s2 = load_system(args.sys2);
    std::optional<LinearRelation> rel;
    if (args.relation) rel = load_relation(*args.relation);

    CheckReport report;
    if (args.kind == "lin") {
      Matrix t;
      if (args.transform) {
        t = parse_transform(read_text_file(*args.transform),
                            args.transform->string());
      } else if (rel) {
        t = derive_transformation(*rel, args.tol);
      } else {
        throw std::invalid_argument("check lin: needs --transform or "
                                    "--relation");
      }
      report = check_linear_equivalence(s1, s2, t, args.tol);
    } else if (args.kind == "ext") {
      report = check_external_equivalence(s1, s2, rel, args.tol);
    } else if (args.kind == "bisim") {
      if (rel) {
        report = check_bisimulation(s1, s2, *rel, args.tol);
      } else if (args.nondegenerate) {
        report = check_bisim_nondegenerate(s1, s2, args.tol);
      } else {
        throw std::invalid_argument("check bisim: needs --relation (or "
                                    "--nondegenerate)");
      }
    } else if (args.kind == "realization") {
      report = check_same_realization(s1, s2, args.tol);
    } else {
      throw std::invalid_argument("check: unknown kind '" + args.kind +
                                  "' (lin, ext, bisim, realization)");
    }
    return CommandResult{exit_for(report.verdict), report_text(report),
                         report_json(report)};
  });
}

CommandResult cmd_maximal_relation(const MaximalRelationArgs& args) {
  return guarded([&] {
    args.tol.validate();
    if (args.kind != "ext") {
      throw std::invalid_argument("maximal-relation: only 'ext' is supported");
    }
    const auto s1 = load_system(args.sys1);
    const auto s2 = load_system(args.sys2);
    const LinearRelation rel = maximal_external_relation(s1, s2, args.tol);
    write_text_file(args.out, dump_relation(rel, "maximal-ext"));
    const TotalityRanks r = totality_ranks(rel, args.tol);
    const Index dim = relation_subspace(rel, args.tol).dim();

    std::ostringstream text;
    text << "maximal external relation written to " << args.out.string()
         << "\n";
    text << "dim = " << dim << ", total = " << (r.total() ? "yes" : "no")
         << " (rank R1 = " << r.rank_r1 << ", rank R2 = " << r.rank_r2
         << ", rank [R1 -R2] = " << r.rank_stack << ")\n";
    text << tolerance_text(args.tol);
    json j{{"schema_version", kSchemaVersion},
           {"relation", args.out.string()},
           {"dim", dim},
           {"total", r.total()},
           {"ranks", {r.rank_r1, r.rank_r2, r.rank_stack}},
           {"tolerance", tolerance_json(args.tol)}};
    return CommandResult{kExitTrue, text.str(), j.dump(2) + "\n"};
  });
}

CommandResult cmd_reduce(const ReduceArgs& args) {
  return guarded([&] {
    args.tol.validate();
    const auto sys = load_system(args.sys);
    const std::filesystem::path rel_out =
        args.relation_out ? *args.relation_out
                          : sibling_path(args.out, ".relation.json");
    const std::filesystem::path graph_out =
        args.graph_out ? *args.graph_out : sibling_path(args.out, ".graph.json");

    Quotient q;
    std::optional<LinearRelation> rel;
    json cert;
    std::string summary;
    if (args.kind == "ext") {
      MinimalExternal m = minimal_external(sys, args.tol);
      q = std::move(m.quotient);
      rel = std::move(m.relation);
      summary = "minimal external reduction: quotient by the unobservable "
                "subspace ker(Obs(A, C))";
      cert["method"] = "observability-kernel";
    } else if (args.kind == "bisim") {
      MinimalBisim m = minimal_bisim(sys, args.tol);
      q = std::move(m.quotient);
      rel = std::move(m.relation);
      summary = "minimal bisimulation reduction: " + m.certificate.summary();
      cert["method"] = to_string(m.certificate.method);
      cert["maximal"] = m.certificate.maximal;
      cert["verified"] = m.certificate.verified;
      json clusters = json::array();
      for (const auto& c : m.certificate.clusters) {
        json eig = json::array();
        for (const auto& z : c.eigenvalues) eig.push_back({z.real(), z.imag()});
        clusters.push_back({{"eigenvalues", eig},
                            {"separated", c.separated},
                            {"removed_dim", c.removed.dim()},
                            {"upper_bound", c.upper_bound},
                            {"removed_basis", matrix_json(c.removed.basis())}});
      }
      cert["clusters"] = std::move(clusters);
      cert["notes"] = m.certificate.notes;
    } else {
      throw std::invalid_argument("reduce: unknown kind '" + args.kind +
                                  "' (ext, bisim)");
    }
    const auto& d = q.decomposition;
    cert["schema_version"] = kSchemaVersion;
    cert["kind"] = args.kind;
    cert["summary"] = summary;
    cert["original_dim"] = sys.n();
    cert["reduced_dim"] = d.reduced_dim;
    cert["T"] = matrix_json(d.T);
    cert["block_diagonal"] = d.block_diagonal;
    cert["coupling_residual"] = d.coupling_residual;
    cert["tolerance"] = tolerance_json(args.tol);

    write_text_file(args.out, dump_system(q.reduced));
    write_text_file(rel_out, dump_relation(*rel, args.kind + "-reduction"));
    write_text_file(graph_out,
                    dump_relation(q.graph_relation(), "reduced -> original"));
    if (args.certificate_out) {
      write_text_file(*args.certificate_out, cert.dump(2) + "\n");
    }

    std::ostringstream text;
    text << summary << "\n";
    text << "dimension: " << sys.n() << " -> " << d.reduced_dim << "\n";
    text << "block diagonal: " << (d.block_diagonal ? "yes" : "no")
         << " (coupling residual " << format_double(d.coupling_residual)
         << ")\n";
    text << "reduced system: " << args.out.string() << "\n";
    text << "relation: " << rel_out.string() << "\n";
    text << "graph relation (reduced, original): " << graph_out.string()
         << "\n";
    text << tolerance_text(args.tol);
    json j = cert;
    j["reduced_system"] = args.out.string();
    j["relation"] = rel_out.string();
    j["graph_relation"] = graph_out.string();
    return CommandResult{kExitTrue, text.str(), j.dump(2) + "\n"};
  });
}

CommandResult cmd_simulate(const SimulateArgs& args) {
  return guarded([&] {
    args.tol.validate();
    const auto sys = load_system(args.sys);
    const Vector x0 = zeros_or(args.x0, sys.n(), "--x0");
    InputSequence u = load_inputs(args.inputs, sys.m());
    if (u.values.empty()) u = InputSequence::zeros(sys.m(), args.horizon);
    if (u.horizon() < args.horizon) {
      throw DimensionError("simulate: input file has " +
                           std::to_string(u.horizon()) + " steps, horizon is " +
                           std::to_string(args.horizon));
    }
    u.values.resize(static_cast<std::size_t>(args.horizon));

    SimulationConfig cfg{args.seed, args.trajectories, args.horizon};
    const Ensemble ens = simulate(sys, x0, u, cfg);
    {
      std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
      if (!out) {
        throw std::runtime_error(args.out.string() + ": cannot open for writing");
      }
      write_ensemble_tsv(ens, out);
      if (!out) throw std::runtime_error(args.out.string() + ": write failed");
    }

    const MomentSequence exact = conditional_moments(sys, x0, u);
    double support_gap = 0.0;
    for (Index t = 0; t <= args.horizon; ++t) {
      const AffineSupport s = state_support(sys, x0, u, t, args.tol);
      const Matrix proj = s.directions.projector();
      for (Index k = 0; k < ens.trajectories(); ++k) {
        const Vector d = ens.state(k, t) - s.offset;
        const Vector off = d - proj * d;
        const double scale = 1.0 + s.offset.norm() + d.norm();
        support_gap = std::max(support_gap, off.norm() / scale);
      }
    }

    json j{{"schema_version", kSchemaVersion},
           {"ensemble", args.out.string()},
           {"seed", args.seed},
           {"trajectories", args.trajectories},
           {"horizon", args.horizon},
           {"max_relative_support_distance", support_gap},
           {"tolerance", tolerance_json(args.tol)}};
    std::ostringstream text;
    text << "ensemble: " << args.out.string() << " (" << args.trajectories
         << " trajectories, horizon " << args.horizon << ", seed "
         << args.seed << ")\n";
    text << "max relative distance of states from the analytic support: "
         << format_double(support_gap) << "\n";

    if (args.trajectories >= 2) {
      const EmpiricalMoments em = empirical_moments(ens);
      json rows = json::array();
      text << "t\tmax|mean y - E y|\tmax|cov y - Cov y|\tmax|mean x - E x|\t"
              "max|cov x - Cov x|\n";
      for (Index t = 0; t <= args.horizon; ++t) {
        const auto i = static_cast<std::size_t>(t);
        auto maxabs = [](const Matrix& m) {
          return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
        };
        const double my = maxabs(em.output_means[i] - exact.output_mean(t));
        const double cy = maxabs(em.output_covs[i] - exact.output_cov(t, t));
        const double mx = maxabs(em.state_means[i] - exact.state_mean(t));
        const double cx = maxabs(em.state_covs[i] - exact.state_cov(t, t));
        text << t << "\t" << format_double(my) << "\t" << format_double(cy)
             << "\t" << format_double(mx) << "\t" << format_double(cx) << "\n";
        rows.push_back({{"t", t},
                        {"output_mean", my},
                        {"output_cov", cy},
                        {"state_mean", mx},
                        {"state_cov", cx}});
      }
      j["moment_deviation"] = std::move(rows);
    }
    text << tolerance_text(args.tol);
    return CommandResult{kExitTrue, text.str(), j.dump(2) + "\n"};
  });
}

CommandResult cmd_validate(const ValidateArgs& args) {
  return guarded([&] {
    args.tol.validate();
    const auto s1 = load_system(args.sys1);
    const auto s2 = load_system(args.sys2);
    const LinearRelation rel = load_relation(args.relation);
    if (rel.n1() != s1.n() || rel.n2() != s2.n()) {
      throw DimensionError("validate: relation does not match the systems");
    }
    const Vector x01 = zeros_or(args.x0_1, s1.n(), "--x0-1");
    const Vector x02 = zeros_or(args.x0_2, s2.n(), "--x0-2");
    if (!matrices_equal(rel.R1() * x01, rel.R2() * x02, args.tol).equal) {
      throw PreconditionError("validate: initial states are not related");
    }
    const InputSequence u = load_inputs(args.inputs, s1.m());
    std::vector<BoxSpec> boxes;
    if (args.boxes) {
      boxes = parse_boxes(read_text_file(*args.boxes), args.boxes->string());
    }

    SimulationConfig cfg{args.seed, args.trajectories, args.horizon};
    const EmpiricalReport laws = compare_output_laws(s1, s2, x01, x02, u, cfg);

    bool all = laws.passed;
    std::ostringstream text;
    json j{{"schema_version", kSchemaVersion},
           {"seed", args.seed},
           {"trajectories", args.trajectories},
           {"horizon", args.horizon},
           {"gate_standard_errors", kEmpiricalGate},
           {"tolerance", tolerance_json(args.tol)}};
    text << "output laws (t <= " << args.horizon << ", N = "
         << args.trajectories << "): " << (laws.passed ? "pass" : "FAIL")
         << "\n";
    json failed = json::array();
    for (const auto* c : laws.failures()) {
      text << "  [FAIL] t=" << c->t << " " << c->label
           << " diff=" << format_double(c->difference)
           << " se=" << format_double(c->standard_error) << "\n";
      failed.push_back({{"t", c->t},
                        {"label", c->label},
                        {"difference", c->difference},
                        {"standard_error", c->standard_error}});
    }
    j["output_laws"] = {{"passed", laws.passed},
                        {"checks", laws.checks.size()},
                        {"failures", failed}};

    json box_rows = json::array();
    for (const auto& b : boxes) {
      const bool forward = b.condition == BisimCondition::kForward;
      const BoxProbabilityReport r = check_bisim_condition_empirical(
          s1, s2, rel, x01, x02, u, b.t, b.box, cfg, b.condition, args.tol);
      all = all && r.passed;
      text << "box " << b.name << " (" << (forward ? "forward" : "backward")
           << ", t=" << b.t << "): p1=" << format_double(r.p1)
           << " p2=" << format_double(r.p2)
           << " se=" << format_double(r.standard_error) << " "
           << (r.passed ? "pass" : "FAIL") << "\n";
      box_rows.push_back({{"name", b.name},
                          {"condition", forward ? "forward" : "backward"},
                          {"t", b.t},
                          {"p1", r.p1},
                          {"p2", r.p2},
                          {"standard_error", r.standard_error},
                          {"support_dim", r.support_dim},
                          {"passed", r.passed}});
    }
    j["boxes"] = std::move(box_rows);
    j["passed"] = all;
    text << "verdict: " << (all ? "pass" : "FAIL") << "\n";
    text << tolerance_text(args.tol);
    return CommandResult{all ? kExitTrue : kExitFalse, text.str(),
                         j.dump(2) + "\n"};
  });
}

}  // namespace stocheq::cli
