#pragma once

// JSON records for fields and placement laws:
//   field:        {"b": 1, "coeffs": [[re, im], ...]}     (k = -b..b)
//   distribution: {"b": 1, "law": "optimal", "p": [...]}

#include <complex>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "locfield/deployment.hpp"
#include "locfield/errors.hpp"
#include "locfield/field_model.hpp"

namespace locfield {

inline nlohmann::json field_to_json(const BandlimitedField& field) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : field.coefficients()) coeffs.push_back({c.real(), c.imag()});
  return {{"b", field.bandwidth()}, {"coeffs", std::move(coeffs)}};
}

inline BandlimitedField field_from_json(const nlohmann::json& j) {
  try {
    const int b = j.at("b").get<int>();
    std::vector<Complex> coeffs;
    for (const auto& pair : j.at("coeffs")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw InvariantError("each coefficient must be a [re, im] pair");
      }
      coeffs.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return {b, std::move(coeffs)};
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("malformed field record: ") + e.what());
  }
}

inline nlohmann::json distribution_to_json(const SensorDistribution& dist) {
  const auto p = dist.probabilities();
  return {{"b", dist.bandwidth()},
          {"law", dist.law()},
          {"p", std::vector<double>(p.begin(), p.end())}};
}

inline SensorDistribution distribution_from_json(const nlohmann::json& j) {
  try {
    return {j.at("b").get<int>(), j.at("p").get<std::vector<double>>(),
            j.value("law", std::string("custom"))};
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("malformed distribution record: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("invalid JSON in " + path + ": " + e.what());
  }
}

inline BandlimitedField load_field(const std::string& path) {
  return field_from_json(read_json_file(path));
}

}  // namespace locfield
