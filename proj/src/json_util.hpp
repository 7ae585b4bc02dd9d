#pragma once

// Internal helpers for strict JSON schemas: unknown keys are rejected, every
// number must be finite, and error messages carry the offending key path.

#include <cmath>
#include <initializer_list>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "lfgs/errors.hpp"

namespace lfgs::jsonio {

using json = nlohmann::ordered_json;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline const json& member(const json& obj, const std::string& where, const char* key) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing key '") + key + "'");
  return *it;
}

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) fail(where, "unknown key '" + it.key() + "'");
  }
}

inline double as_finite(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "number is not finite");
  return x;
}

inline int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

inline Eigen::MatrixXd as_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a nonempty nested array");
  const size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty()) fail(where, "expected nested arrays of numbers");
  const size_t cols = v[0].size();
  Eigen::MatrixXd M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) fail(where, "ragged matrix rows");
    for (size_t c = 0; c < cols; ++c) M(r, c) = as_finite(v[r][c], where);
  }
  return M;
}

inline Eigen::VectorXd as_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a nonempty array");
  Eigen::VectorXd x(v.size());
  for (size_t k = 0; k < v.size(); ++k) x(k) = as_finite(v[k], where);
  return x;
}

inline json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Eigen::VectorXd& x) {
  json a = json::array();
  for (Eigen::Index k = 0; k < x.size(); ++k) a.push_back(x(k));
  return a;
}

}  // namespace lfgs::jsonio
