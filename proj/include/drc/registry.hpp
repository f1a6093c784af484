#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "drc/problem.hpp"
#include "drc/smd.hpp"

namespace drc {

/// Problem lookup by string id: "smd1".."smd12" (dims default to (2,3)) and
/// "synthq-<d>" (dims fixed at (d,d), target vector all ones).
inline BilevelProblem make_problem(const std::string& id,
                                   std::optional<int> m = std::nullopt,
                                   std::optional<int> n = std::nullopt) {
  if (id.rfind("smd", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(id.substr(3), &used);
      if (used != id.size() - 3) throw std::invalid_argument(id);
    } catch (const std::exception&) {
      throw std::invalid_argument("unknown problem id: " + id);
    }
    return make_smd(k, m.value_or(2), n.value_or(3));
  }
  if (id.rfind("synthq-", 0) == 0) {
    int d = 0;
    try {
      std::size_t used = 0;
      d = std::stoi(id.substr(7), &used);
      if (used != id.size() - 7) throw std::invalid_argument(id);
    } catch (const std::exception&) {
      throw std::invalid_argument("unknown problem id: " + id);
    }
    if (d < 1) throw std::invalid_argument("unknown problem id: " + id);
    if ((m && *m != d) || (n && *n != d))
      throw std::invalid_argument("dims for " + id + " must be (" +
                                  std::to_string(d) + "," +
                                  std::to_string(d) + ")");
    return make_synthetic_quadratic(d, Eigen::VectorXd::Ones(d));
  }
  throw std::invalid_argument("unknown problem id: " + id);
}

}  // namespace drc
