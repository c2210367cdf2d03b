#pragma once

#include <random>

#include "cardpen/problem.hpp"
#include "cardpen/symmat.hpp"
#include "oracles.hpp"

namespace testing_util {

inline oracle::Mat to_rows(const cardpen::SymMatrix& s) {
  oracle::Mat rows(s.dim(), std::vector<double>(s.dim()));
  for (cardpen::Index i = 0; i < s.dim(); ++i)
    for (cardpen::Index j = 0; j < s.dim(); ++j) rows[i][j] = s(i, j);
  return rows;
}

inline cardpen::SymMatrix from_rows(const oracle::Mat& rows) {
  cardpen::Matrix m(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  return cardpen::SymMatrix(m);
}

struct Case {
  cardpen::SymMatrix sigma;
  double rho;
};

// Seeded instance with n in [2, max_n], m in [1, n], rho ~ U(0, Sigma_11).
inline Case random_case(std::mt19937_64& rng, int max_n, int min_n = 2) {
  std::uniform_int_distribution<int> nd(min_n, max_n);
  const int n = nd(rng);
  std::uniform_int_distribution<int> md(1, n);
  const int m = md(rng);
  auto sigma = cardpen::random_instance(n, m, rng(), cardpen::InstanceKind::DensePsd);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rho = u(rng) * sigma.diag().maxCoeff();
  return {sigma, rho};
}

}  // namespace testing_util
