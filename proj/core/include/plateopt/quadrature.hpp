#pragma once

#include <array>
#include <vector>

namespace plateopt {

// Barycentric quadrature on a triangle; weights sum to one, so an integral
// over T is |T| * sum_q w_q f(x_q).
struct QuadRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

// 12-point rule exact for total degree 6 (Dunavant's degree-6 rule, with the
// tabulated values refined to double precision on first use).
const QuadRule& triangle_rule_12();

// Collapsed Gauss-Legendre product rule with n points per direction; exact
// for total degree 2n - 2. Used as a high-order reference.
QuadRule collapsed_gauss_rule(int n);

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Exact integral of x^i y^j over the reference triangle (0,0), (1,0), (0,1).
double reference_monomial_integral(int i, int j);

}  // namespace plateopt
