#pragma once

#include <cstdint>
#include <vector>

#include "zipmix/errors.hpp"
#include "zipmix/numeric.hpp"

namespace zipmix {

// Logs of the elementary symmetric functions s_0..s_J of {theta^{m_j}}.
struct ElemSymmTable {
  std::vector<double> logs;            // length J + 1; logs[0] = 0
  double theta = 1.0;
  std::vector<std::int64_t> exponents;

  double log_s(int j) const { return logs[static_cast<std::size_t>(j)]; }
};

// One-variable-at-a-time Pascal-style recurrence
//   s_j^{(k)} = s_j^{(k-1)} + theta^{m_k} s_{j-1}^{(k-1)},
// carried out on logs with log-sum-exp combination.  O(J^2).
inline ElemSymmTable elem_symm_log(const std::vector<std::int64_t>& mjs, double theta) {
  if (!(theta > 0.0)) throw DomainError("theta: require theta > 0");
  const std::size_t J = mjs.size();
  const double log_theta = std::log(theta);

  ElemSymmTable t;
  t.theta = theta;
  t.exponents = mjs;
  t.logs.assign(J + 1, kNegInf);
  t.logs[0] = 0.0;
  for (std::size_t k = 0; k < J; ++k) {
    const double log_x = static_cast<double>(mjs[k]) * log_theta;
    for (std::size_t j = k + 1; j >= 1; --j)
      t.logs[j] = log_sum_exp(t.logs[j], log_x + t.logs[j - 1]);
  }
  return t;
}

}  // namespace zipmix
