#include "stocheq/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "stocheq/errors.hpp"

namespace stocheq {

using nlohmann::json;

SchemaError::SchemaError(const std::string& source, const std::string& field,
                         const std::string& message)
    : std::invalid_argument(source + ": " +
                            (field.empty() ? std::string() : field + ": ") +
                            message),
      field_(field) {}

namespace {

struct Doc {
  json root;
  std::string source;

  [[noreturn]] void fail(const std::string& field,
                         const std::string& message) const {
    throw SchemaError(source, field, message);
  }
};

Doc parse_document(std::string_view text, const std::string& source) {
  Doc d{json(), source};
  try {
    d.root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    Index line = 1;
    Index col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size() + 1);
    for (std::size_t i = 0; i + 1 < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SchemaError(source, "line " + std::to_string(line) + ", column " +
                                  std::to_string(col),
                      "invalid JSON");
  }
  if (!d.root.is_object()) d.fail("", "document must be a JSON object");
  if (!d.root.contains("schema_version")) {
    d.fail("schema_version", "missing");
  }
  const json& v = d.root["schema_version"];
  if (!v.is_string() || v.get<std::string>() != kSchemaVersion) {
    d.fail("schema_version", "expected \"" + std::string(kSchemaVersion) +
                                 "\", got " + v.dump());
  }
  return d;
}

const json& require(const Doc& d, const std::string& key) {
  if (!d.root.contains(key)) d.fail(key, "missing");
  return d.root.at(key);
}

double number(const Doc& d, const json& v, const std::string& field) {
  if (!v.is_number()) d.fail(field, "expected a number, got " + v.dump());
  const double x = v.get<double>();
  if (!std::isfinite(x)) d.fail(field, "value is not finite");
  return x;
}

Index count(const Doc& d, const std::string& key) {
  const json& v = require(d, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    d.fail(key, "expected a non-negative integer, got " + v.dump());
  }
  return static_cast<Index>(v.get<long long>());
}

// Nested row-major array; rows/cols < 0 means "infer".
Matrix matrix(const Doc& d, const json& v, const std::string& field,
              Index rows, Index cols) {
  if (!v.is_array()) d.fail(field, "expected an array of rows");
  const auto r = static_cast<Index>(v.size());
  if (rows >= 0 && r != rows) {
    d.fail(field, "expected " + std::to_string(rows) + " rows, got " +
                      std::to_string(r));
  }
  Index c = cols;
  if (c < 0) {
    if (r == 0) d.fail(field, "cannot infer the column count of an empty matrix");
    if (!v[0].is_array()) d.fail(field + "[0]", "expected an array");
    c = static_cast<Index>(v[0].size());
  }
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const std::string row_field = field + "[" + std::to_string(i) + "]";
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array()) d.fail(row_field, "expected an array");
    if (static_cast<Index>(row.size()) != c) {
      d.fail(row_field, "expected " + std::to_string(c) + " entries, got " +
                            std::to_string(row.size()));
    }
    for (Index j = 0; j < c; ++j) {
      m(i, j) = number(d, row[static_cast<std::size_t>(j)],
                       row_field + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

Vector vector(const Doc& d, const json& v, const std::string& field,
              Index size) {
  if (!v.is_array()) d.fail(field, "expected an array");
  if (size >= 0 && static_cast<Index>(v.size()) != size) {
    d.fail(field, "expected " + std::to_string(size) + " entries, got " +
                      std::to_string(v.size()));
  }
  Vector out(static_cast<Index>(v.size()));
  for (Index i = 0; i < out.size(); ++i) {
    out(i) = number(d, v[static_cast<std::size_t>(i)],
                    field + "[" + std::to_string(i) + "]");
  }
  return out;
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

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

StochasticLinearSystem parse_system(std::string_view text,
                                    const std::string& source) {
  const Doc d = parse_document(text, source);
  const Index n = count(d, "n");
  const Index m = count(d, "m");
  const Index l = count(d, "l");
  const Index p = count(d, "p");
  StochasticLinearSystem sys;
  sys.A = matrix(d, require(d, "A"), "A", n, n);
  sys.B = matrix(d, require(d, "B"), "B", n, m);
  sys.C = matrix(d, require(d, "C"), "C", p, n);
  sys.G = matrix(d, require(d, "G"), "G", n, l);
  sys.mu = vector(d, require(d, "mu"), "mu", l);
  sys.Psi = matrix(d, require(d, "Psi"), "Psi", p, p);
  if (d.root.contains("W")) {
    const Matrix w = matrix(d, d.root["W"], "W", l, l);
    if (!w.isIdentity(0.0)) {
      d.fail("W", "disturbance covariance must be the identity; fold its "
                  "square root into G");
    }
  }
  if (d.root.contains("name")) {
    if (!d.root["name"].is_string()) d.fail("name", "expected a string");
    sys.name = d.root["name"].get<std::string>();
  }
  try {
    sys.validate();
  } catch (const std::exception& e) {
    d.fail("", e.what());
  }
  return sys;
}

std::string dump_system(const StochasticLinearSystem& sys) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (!sys.name.empty()) j["name"] = sys.name;
  j["n"] = sys.n();
  j["m"] = sys.m();
  j["l"] = sys.l();
  j["p"] = sys.p();
  j["A"] = matrix_json(sys.A);
  j["B"] = matrix_json(sys.B);
  j["C"] = matrix_json(sys.C);
  j["G"] = matrix_json(sys.G);
  j["mu"] = vector_json(sys.mu);
  j["Psi"] = matrix_json(sys.Psi);
  return j.dump(2) + "\n";
}

LinearRelation parse_relation(std::string_view text, const std::string& source) {
  const Doc d = parse_document(text, source);
  const Matrix r1 = matrix(d, require(d, "R1"), "R1", -1, -1);
  const Matrix r2 = matrix(d, require(d, "R2"), "R2", -1, -1);
  if (r1.rows() != r2.rows()) {
    d.fail("R2", "R1 has " + std::to_string(r1.rows()) + " rows, R2 has " +
                     std::to_string(r2.rows()));
  }
  return {r1, r2};
}

std::string dump_relation(const LinearRelation& rel, const std::string& name) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (!name.empty()) j["name"] = name;
  j["R1"] = matrix_json(rel.R1());
  j["R2"] = matrix_json(rel.R2());
  return j.dump(2) + "\n";
}

Matrix parse_transform(std::string_view text, const std::string& source) {
  const Doc d = parse_document(text, source);
  const Matrix t = matrix(d, require(d, "T"), "T", -1, -1);
  if (t.rows() != t.cols()) d.fail("T", "must be square");
  return t;
}

std::string dump_transform(const Matrix& t) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["T"] = matrix_json(t);
  return j.dump(2) + "\n";
}

InputSequence parse_inputs(std::string_view text, Index m,
                           const std::string& source) {
  const Doc d = parse_document(text, source);
  const json& u = require(d, "u");
  if (!u.is_array()) d.fail("u", "expected an array of input vectors");
  InputSequence seq;
  for (std::size_t t = 0; t < u.size(); ++t) {
    seq.values.push_back(vector(d, u[t], "u[" + std::to_string(t) + "]", m));
  }
  return seq;
}

std::vector<BoxSpec> parse_boxes(std::string_view text,
                                 const std::string& source) {
  const Doc d = parse_document(text, source);
  const json& boxes = require(d, "boxes");
  if (!boxes.is_array()) d.fail("boxes", "expected an array");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<BoxSpec> out;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const std::string f = "boxes[" + std::to_string(k) + "]";
    const json& b = boxes[k];
    if (!b.is_object()) d.fail(f, "expected an object");
    BoxSpec spec;
    spec.name = b.value("name", "box" + std::to_string(k));
    if (!b.contains("t") || !b["t"].is_number_integer() ||
        b["t"].get<long long>() < 0) {
      d.fail(f + ".t", "expected a non-negative integer");
    }
    spec.t = static_cast<Index>(b["t"].get<long long>());
    const std::string cond = b.value("condition", "forward");
    if (cond == "forward") {
      spec.condition = BisimCondition::kForward;
    } else if (cond == "backward") {
      spec.condition = BisimCondition::kBackward;
    } else {
      d.fail(f + ".condition", "expected \"forward\" or \"backward\"");
    }
    for (const char* key : {"lower", "upper"}) {
      const std::string kf = f + "." + key;
      if (!b.contains(key) || !b[key].is_array()) d.fail(kf, "expected an array");
      const json& arr = b[key];
      Vector v(static_cast<Index>(arr.size()));
      const bool is_lower = std::string_view(key) == "lower";
      for (std::size_t i = 0; i < arr.size(); ++i) {
        v(static_cast<Index>(i)) =
            arr[i].is_null()
                ? (is_lower ? -inf : inf)
                : number(d, arr[i], kf + "[" + std::to_string(i) + "]");
      }
      (is_lower ? spec.box.lower : spec.box.upper) = v;
    }
    try {
      spec.box.validate();
    } catch (const std::exception& e) {
      d.fail(f, e.what());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string(), "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

StochasticLinearSystem load_system(const std::filesystem::path& path) {
  return parse_system(read_text_file(path), path.string());
}

LinearRelation load_relation(const std::filesystem::path& path) {
  return parse_relation(read_text_file(path), path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_ensemble_tsv(const Ensemble& ens, std::ostream& out) {
  out << "# trajectory\tt";
  for (Index i = 0; i < ens.n(); ++i) out << "\tx" << i + 1;
  for (Index i = 0; i < ens.p(); ++i) out << "\ty" << i + 1;
  out << '\n';
  for (Index k = 0; k < ens.trajectories(); ++k) {
    for (Index t = 0; t <= ens.horizon(); ++t) {
      out << k << '\t' << t;
      const auto x = ens.state(k, t);
      const auto y = ens.output(k, t);
      for (Index i = 0; i < x.size(); ++i) out << '\t' << format_double(x(i));
      for (Index i = 0; i < y.size(); ++i) out << '\t' << format_double(y(i));
      out << '\n';
    }
  }
}

}  // namespace stocheq
