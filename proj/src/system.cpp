#include "lyapbound/system.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace lyapbound {

using json = nlohmann::ordered_json;

namespace {

void check_finite(const Matrix& m, const std::string& field) {
  if (!m.allFinite()) {
    throw ParseError("field '" + field + "' contains a non-finite entry");
  }
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ParseError("field '" + field + "' must be an array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError("field '" + field + "' row " + std::to_string(r) +
                       " has inconsistent length");
    }
    for (std::size_t s = 0; s < cols; ++s) {
      if (!j[r][s].is_number()) {
        throw ParseError("field '" + field + "' entry (" + std::to_string(r) +
                         "," + std::to_string(s) + ") is not a number");
      }
      m(r, s) = j[r][s].get<double>();
    }
  }
  check_finite(m, field);
  return m;
}

Vector parse_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("field '" + field + "' must be a non-empty array");
  }
  Vector v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) {
      throw ParseError("field '" + field + "' entry " + std::to_string(k) +
                       " is not a number");
    }
    v(k) = j[k].get<double>();
  }
  if (!v.allFinite()) {
    throw ParseError("field '" + field + "' contains a non-finite entry");
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index s = 0; s < m.cols(); ++s) row.push_back(m(r, s));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

}  // namespace

void LtiSystem::validate() const {
  if (a.rows() != a.cols()) {
    throw DimensionError("A must be square, got " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()));
  }
  if (b.size() != a.rows()) {
    throw DimensionError("b has length " + std::to_string(b.size()) +
                         ", expected " + std::to_string(a.rows()));
  }
  if (c.size() != a.rows()) {
    throw DimensionError("c has length " + std::to_string(c.size()) +
                         ", expected " + std::to_string(a.rows()));
  }
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) {
    throw DimensionError("system entries must be finite");
  }
}

void UncertainSystem::validate() const {
  nominal().validate();
  if (delta.rows() != a.rows() || delta.cols() != a.cols()) {
    throw DimensionError("Delta has shape " + std::to_string(delta.rows()) +
                         "x" + std::to_string(delta.cols()) + ", expected " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (!delta.allFinite()) {
    throw DimensionError("Delta entries must be finite");
  }
}

ParsedSystem parse_system_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("top-level document must be an object");
  for (const std::string required : {"A", "b", "c"}) {
    if (!j.contains(required)) {
      throw ParseError("missing required field '" + required + "'");
    }
  }

  ParsedSystem out;
  out.system.name = j.value("name", std::string{});
  out.system.a = parse_matrix(j["A"], "A");
  out.system.b = parse_vector(j["b"], "b");
  RowVector c = parse_vector(j["c"], "c").transpose();
  out.system.c = c;
  if (j.contains("Delta")) {
    out.system.delta = parse_matrix(j["Delta"], "Delta");
    out.has_delta = true;
  } else {
    out.system.delta = Matrix::Zero(out.system.a.rows(), out.system.a.cols());
  }
  try {
    out.system.validate();
  } catch (const DimensionError& e) {
    throw ParseError(e.what());
  }
  return out;
}

ParsedSystem parse_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_system_text(buf.str());
}

std::string write_system(const UncertainSystem& sys, bool include_delta) {
  json j;
  j["name"] = sys.name;
  j["A"] = matrix_to_json(sys.a);
  j["b"] = vector_to_json(sys.b);
  j["c"] = vector_to_json(sys.c.transpose());
  if (include_delta) j["Delta"] = matrix_to_json(sys.delta);
  return j.dump(2) + "\n";
}

}  // namespace lyapbound
