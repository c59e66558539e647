#pragma once

// JSON documents (schema_version "1") for systems, relations, transforms,
// input sequences and box lists, plus the tab-separated ensemble export.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stocheq/montecarlo.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"

namespace stocheq {

inline constexpr std::string_view kSchemaVersion = "1";

/// Malformed document. what() reads "<source>: <field>: <message>", with a
/// line and column for JSON syntax errors.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(const std::string& source, const std::string& field,
              const std::string& message);
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

StochasticLinearSystem parse_system(std::string_view text,
                                    const std::string& source = "<input>");
std::string dump_system(const StochasticLinearSystem& sys);

LinearRelation parse_relation(std::string_view text,
                              const std::string& source = "<input>");
std::string dump_relation(const LinearRelation& rel,
                          const std::string& name = {});

Matrix parse_transform(std::string_view text,
                       const std::string& source = "<input>");
std::string dump_transform(const Matrix& t);

/// Input sequence u(0..T-1); each entry must have length m.
InputSequence parse_inputs(std::string_view text, Index m,
                           const std::string& source = "<input>");

struct BoxSpec {
  std::string name;
  Index t = 0;
  BisimCondition condition = BisimCondition::kForward;
  BoxSet box;
};

/// Boxes with null bounds read as unbounded.
std::vector<BoxSpec> parse_boxes(std::string_view text,
                                 const std::string& source = "<input>");

/// Reads a whole file; throws SchemaError naming the path when unreadable.
std::string read_text_file(const std::filesystem::path& path);
/// Writes a whole file; throws std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

StochasticLinearSystem load_system(const std::filesystem::path& path);
LinearRelation load_relation(const std::filesystem::path& path);

/// One row per (trajectory, t): trajectory, t, x..., y..., %.17g formatted,
/// tab separated, after a '#' header line.
void write_ensemble_tsv(const Ensemble& ens, std::ostream& out);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace stocheq
