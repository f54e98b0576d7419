// matrix_json.hpp — wire format for complex matrices:
// {"dim": n, "entries": [[re, im], ...]} with entries row-major, length n^2.
#pragma once

#include "substate/common.hpp"

#include <json.hpp>

#include <string>

namespace substate {

inline nlohmann::json matrix_to_json(const Matrix& a) {
  require_square(a, "matrix_to_json");
  nlohmann::json entries = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      entries.push_back({a(i, j).real(), a(i, j).imag()});
  return nlohmann::json{{"dim", a.rows()}, {"entries", entries}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw validation_error("matrix: expected a JSON object");
  if (!j.contains("dim")) throw validation_error("matrix: missing field \"dim\"");
  if (!j["dim"].is_number_integer() || j["dim"].get<std::int64_t>() <= 0)
    throw validation_error("matrix: \"dim\" must be a positive integer");
  const auto n = j["dim"].get<Eigen::Index>();
  if (!j.contains("entries") || !j["entries"].is_array())
    throw validation_error("matrix: missing or non-array field \"entries\"");
  const auto& entries = j["entries"];
  if (static_cast<Eigen::Index>(entries.size()) != n * n)
    throw validation_error("matrix: \"entries\" has " + std::to_string(entries.size()) +
                           " elements, expected dim^2 = " + std::to_string(n * n));
  Matrix a(n, n);
  for (Eigen::Index k = 0; k < n * n; ++k) {
    const auto& e = entries[static_cast<std::size_t>(k)];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw validation_error("matrix: entry " + std::to_string(k) +
                             " must be a [re, im] number pair");
    a(k / n, k % n) = Complex(e[0].get<double>(), e[1].get<double>());
  }
  return a;
}

}  // namespace substate
