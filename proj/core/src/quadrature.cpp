#include "tetraale/quadrature.hpp"

#include <cmath>

namespace tetraale {

namespace {

// Golub-Welsch on the symmetric Jacobi matrix for the weight
// (1-x)^alpha (1+x)^beta on [-1,1], beta = 0 here.
void jacobi_rule_m11(int n, double alpha, std::vector<double>& x,
                     std::vector<double>& w) {
  const double beta = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double ab = 2.0 * k + alpha + beta;
    double diag;
    if (k == 0) {
      diag = (beta - alpha) / (alpha + beta + 2.0);
    } else {
      diag = (beta * beta - alpha * alpha) / (ab * (ab + 2.0));
    }
    J(k, k) = diag;
    if (k > 0) {
      double b2;
      if (k == 1) {
        b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) /
             ((2.0 + alpha + beta) * (2.0 + alpha + beta) * (3.0 + alpha + beta));
      } else {
        double kk = k;
        b2 = 4.0 * kk * (kk + alpha) * (kk + beta) * (kk + alpha + beta) /
             ((ab * ab) * (ab + 1.0) * (ab - 1.0));
      }
      J(k, k - 1) = J(k - 1, k) = std::sqrt(b2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::pow(2.0, alpha + beta + 1.0) / (alpha + beta + 1.0);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    w[i] = mu0 * v0 * v0;
  }
}

int points_for_degree(int degree) { return (degree + 2) / 2; }

}  // namespace

void gauss_jacobi(int n, double alpha, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  std::vector<double> x, w;
  jacobi_rule_m11(n, alpha, x, w);
  nodes.resize(n);
  weights.resize(n);
  const double scale = std::pow(2.0, alpha + 1.0);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (1.0 + x[i]);
    weights[i] = w[i] / scale;
  }
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  gauss_jacobi(n, 0.0, nodes, weights);
}

Quadrature interval_quadrature(int degree) {
  Quadrature q;
  q.dim = 1;
  q.exactness = degree;
  std::vector<double> x, w;
  gauss_legendre(points_for_degree(degree), x, w);
  for (size_t i = 0; i < x.size(); ++i) {
    q.points.push_back(Vec3(x[i], 0.0, 0.0));
    q.weights.push_back(w[i]);
  }
  return q;
}

// Collapsed tensor rule: x = u, y = v(1-u), with Jacobian (1-u) absorbed by
// the Gauss-Jacobi weight in u.
Quadrature triangle_quadrature(int degree) {
  Quadrature q;
  q.dim = 2;
  q.exactness = degree;
  const int n = points_for_degree(degree);
  std::vector<double> xu, wu, xv, wv;
  gauss_jacobi(n, 1.0, xu, wu);
  gauss_legendre(n, xv, wv);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double u = xu[i], v = xv[j];
      q.points.push_back(Vec3(u, v * (1.0 - u), 0.0));
      q.weights.push_back(wu[i] * wv[j]);
    }
  }
  return q;
}

// Collapsed tensor rule: x = u, y = v(1-u), z = w(1-u)(1-v), Jacobian
// (1-u)^2 (1-v) absorbed by the Gauss-Jacobi weights.
Quadrature tet_quadrature(int degree) {
  Quadrature q;
  q.dim = 3;
  q.exactness = degree;
  const int n = points_for_degree(degree);
  std::vector<double> xu, wu, xv, wv, xw, ww;
  gauss_jacobi(n, 2.0, xu, wu);
  gauss_jacobi(n, 1.0, xv, wv);
  gauss_legendre(n, xw, ww);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double u = xu[i], v = xv[j], w = xw[k];
        q.points.push_back(Vec3(u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v)));
        q.weights.push_back(wu[i] * wv[j] * ww[k]);
      }
    }
  }
  return q;
}

double tet_monomial_moment(int a, int b, int c) {
  // a! b! c! / (a+b+c+3)! evaluated without overflow for moderate degrees.
  double result = 1.0;
  int denom_terms = a + b + c + 3;
  // result = prod_{k=1..a} k / (k + offset) style accumulation
  double num = 1.0;
  for (int k = 2; k <= a; ++k) num *= k;
  for (int k = 2; k <= b; ++k) num *= k;
  for (int k = 2; k <= c; ++k) num *= k;
  double den = 1.0;
  for (int k = 2; k <= denom_terms; ++k) den *= k;
  result = num / den;
  return result;
}

}  // namespace tetraale
