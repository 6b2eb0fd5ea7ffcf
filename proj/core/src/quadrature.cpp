#include "plateopt/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace plateopt {

namespace {

struct Dunavant6Params {
  double w1, w2, w3, b1, b2, c1, c2;
};

QuadRule expand(const Dunavant6Params& p) {
  QuadRule r;
  r.degree = 6;
  auto add = [&](double x, double y, double z, double w) {
    r.bary.push_back({x, y, z});
    r.weights.push_back(w);
  };
  const double a1 = 1.0 - 2.0 * p.b1, a2 = 1.0 - 2.0 * p.b2, c3 = 1.0 - p.c1 - p.c2;
  add(a1, p.b1, p.b1, p.w1);
  add(p.b1, a1, p.b1, p.w1);
  add(p.b1, p.b1, a1, p.w1);
  add(a2, p.b2, p.b2, p.w2);
  add(p.b2, a2, p.b2, p.w2);
  add(p.b2, p.b2, a2, p.w2);
  const double c[3] = {p.c1, p.c2, c3};
  const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& q : perm) add(c[q[0]], c[q[1]], c[q[2]], p.w3);
  return r;
}

// Moment residuals 2 * sum_q w_q x^i y^j - exact, i + j <= 6.
Eigen::VectorXd moment_residual(const Dunavant6Params& p) {
  const QuadRule r = expand(p);
  Eigen::VectorXd res(28);
  int k = 0;
  for (int d = 0; d <= 6; ++d) {
    for (int i = 0; i <= d; ++i) {
      const int j = d - i;
      double s = 0.0;
      for (int q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.bary[q][1], i) * std::pow(r.bary[q][2], j);
      res[k++] = 0.5 * s - reference_monomial_integral(i, j);
    }
  }
  return res;
}

QuadRule build_dunavant6() {
  Dunavant6Params p{0.116786275726379, 0.050844906370207, 0.082851075618374, 0.249286745170910,
                    0.063089014491502, 0.053145049844817, 0.310352451033784};
  double* v[7] = {&p.w1, &p.w2, &p.w3, &p.b1, &p.b2, &p.c1, &p.c2};
  for (int it = 0; it < 8; ++it) {
    const Eigen::VectorXd r0 = moment_residual(p);
    if (r0.lpNorm<Eigen::Infinity>() < 1e-17) break;
    Eigen::MatrixXd J(28, 7);
    for (int k = 0; k < 7; ++k) {
      const double save = *v[k];
      const double h = 1e-7;
      *v[k] = save + h;
      const Eigen::VectorXd rp = moment_residual(p);
      *v[k] = save - h;
      const Eigen::VectorXd rm = moment_residual(p);
      *v[k] = save;
      J.col(k) = (rp - rm) / (2.0 * h);
    }
    const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-r0);
    for (int k = 0; k < 7; ++k) *v[k] += dx[k];
  }
  return expand(p);
}

}  // namespace

double reference_monomial_integral(int i, int j) {
  // i! j! / (i + j + 2)!
  return std::exp(std::lgamma(i + 1.0) + std::lgamma(j + 1.0) - std::lgamma(i + j + 3.0));
}

const QuadRule& triangle_rule_12() {
  static const QuadRule rule = build_dunavant6();
  return rule;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

QuadRule collapsed_gauss_rule(int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadRule r;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Duffy map (s, t) -> (s, (1 - s) t); Jacobian (1 - s); area 1/2.
      const double s = x[i], t = x[j];
      const double px = s, py = (1.0 - s) * t;
      r.bary.push_back({1.0 - px - py, px, py});
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - s));
    }
  }
  return r;
}

}  // namespace plateopt
