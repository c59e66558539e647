#pragma once

// Command layer of the stocheq tool. Every command returns its exit code and
// both report renderings; main() only parses flags and prints.
//
// Exit codes: 0 the property holds, 1 it does not (or the check is
// inconclusive), 2 malformed input or any other error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stocheq/equivalence.hpp"
#include "stocheq/montecarlo.hpp"
#include "stocheq/numlin.hpp"

namespace stocheq::cli {

inline constexpr int kExitTrue = 0;
inline constexpr int kExitFalse = 1;
inline constexpr int kExitError = 2;

enum class Format { kText, kJson };

struct CommandResult {
  int exit_code = kExitError;
  std::string text;
  std::string json;

  [[nodiscard]] const std::string& render(Format f) const {
    return f == Format::kJson ? json : text;
  }
};

/// Library defaults overridden by STOCHEQ_RANK_TOL, STOCHEQ_EQ_ABS and
/// STOCHEQ_EQ_REL when set. Throws std::invalid_argument on unparsable values.
Tolerance tolerance_from_env();

struct CheckArgs {
  std::string kind;  ///< lin, ext, bisim, realization
  std::filesystem::path sys1;
  std::filesystem::path sys2;
  std::optional<std::filesystem::path> relation;
  std::optional<std::filesystem::path> transform;
  /// bisim without a relation: decide via the non-degenerate criterion.
  bool nondegenerate = false;
  Tolerance tol;
};

struct MaximalRelationArgs {
  std::string kind = "ext";
  std::filesystem::path sys1;
  std::filesystem::path sys2;
  std::filesystem::path out;
  Tolerance tol;
};

struct ReduceArgs {
  std::string kind;  ///< ext, bisim
  std::filesystem::path sys;
  std::filesystem::path out;
  /// Defaults to <out stem>.relation.json next to out.
  std::optional<std::filesystem::path> relation_out;
  /// Relation between reduced and original states; defaults to
  /// <out stem>.graph.json.
  std::optional<std::filesystem::path> graph_out;
  std::optional<std::filesystem::path> certificate_out;
  Tolerance tol;
};

struct SimulateArgs {
  std::filesystem::path sys;
  std::optional<Vector> x0;  ///< default 0
  std::optional<std::filesystem::path> inputs;
  std::uint64_t seed = 0;
  Index trajectories = 1000;
  Index horizon = 10;
  std::filesystem::path out;  ///< ensemble file
  Tolerance tol;
};

struct ValidateArgs {
  std::filesystem::path sys1;
  std::filesystem::path sys2;
  std::filesystem::path relation;
  std::optional<std::filesystem::path> boxes;
  std::optional<std::filesystem::path> inputs;
  std::optional<Vector> x0_1;
  std::optional<Vector> x0_2;
  std::uint64_t seed = 0;
  Index trajectories = 100000;
  Index horizon = 5;
  Tolerance tol;
};

CommandResult cmd_check(const CheckArgs& args);
CommandResult cmd_maximal_relation(const MaximalRelationArgs& args);
CommandResult cmd_reduce(const ReduceArgs& args);
CommandResult cmd_simulate(const SimulateArgs& args);
CommandResult cmd_validate(const ValidateArgs& args);

/// Parses "1,2.5,-3" (whitespace allowed) into a vector.
Vector parse_vector(const std::string& text);

/// Text and JSON renderings of an analytic check report.
std::string report_text(const CheckReport& report);
std::string report_json(const CheckReport& report);

}  // namespace stocheq::cli
