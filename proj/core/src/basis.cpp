#include "tetraale/basis.hpp"

#include <cmath>
#include <map>

namespace tetraale {

namespace {

std::vector<std::array<int, 3>> spatial_exponents(int degree) {
  std::vector<std::array<int, 3>> expo;
  for (int d = 0; d <= degree; ++d) {
    for (int a = d; a >= 0; --a) {
      for (int b = d - a; b >= 0; --b) {
        int c = d - a - b;
        expo.push_back({a, b, c});
      }
    }
  }
  return expo;
}

}  // namespace

SpatialBasis::SpatialBasis(int degree) : degree_(degree), size_(basis_size(degree)) {
  if (degree < 0 || degree > kMaxDegree)
    throw std::invalid_argument("unsupported basis degree");
  expo_ = spatial_exponents(degree);

  // Monomial Gram matrix from exact moments.
  Eigen::MatrixXd G(size_, size_);
  for (int p = 0; p < size_; ++p)
    for (int q = 0; q < size_; ++q)
      G(p, q) = tet_monomial_moment(expo_[p][0] + expo_[q][0],
                                    expo_[p][1] + expo_[q][1],
                                    expo_[p][2] + expo_[q][2]);

  // Gram-Schmidt in monomial coordinates, re-orthogonalized once. The first
  // mode stays the constant 1; every mode is rescaled to norm^2 = 1/6 so the
  // Gram matrix of the basis is (1/6) I.
  coef_ = Eigen::MatrixXd::Identity(size_, size_);
  const double target = 1.0 / 6.0;
  for (int l = 0; l < size_; ++l) {
    Eigen::VectorXd c = coef_.row(l).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < l; ++j) {
        Eigen::VectorXd cj = coef_.row(j).transpose();
        double proj = c.dot(G * cj) / target;
        c -= proj * cj;
      }
    }
    double nrm2 = c.dot(G * c);
    coef_.row(l) = (c * std::sqrt(target / nrm2)).transpose();
  }

  // Oscillation matrix by quadrature of exactness 2M over the unit tet.
  osc_ = Eigen::MatrixXd::Zero(size_, size_);
  if (degree_ >= 1) {
    Quadrature q = tet_quadrature(2 * degree_);
    std::map<std::array<int, 3>, int> index;
    for (int m = 0; m < size_; ++m) index[expo_[m]] = m;
    for (int da = 0; da <= degree_; ++da) {
      for (int db = 0; db <= degree_ - da; ++db) {
        for (int dc = 0; dc <= degree_ - da - db; ++dc) {
          if (da + db + dc < 1) continue;
          // Coefficients of the (da,db,dc) derivative of each basis function.
          Eigen::MatrixXd D = Eigen::MatrixXd::Zero(size_, size_);
          for (int m = 0; m < size_; ++m) {
            auto [a, b, c] = expo_[m];
            if (a < da || b < db || c < dc) continue;
            double factor = 1.0;
            for (int k = 0; k < da; ++k) factor *= a - k;
            for (int k = 0; k < db; ++k) factor *= b - k;
            for (int k = 0; k < dc; ++k) factor *= c - k;
            D(index.at({a - da, b - db, c - dc}), m) = factor;
          }
          Eigen::MatrixXd dc_coef = coef_ * D.transpose();
          Eigen::MatrixXd vals(size_, q.size());
          std::vector<double> mono(size_);
          for (int p = 0; p < q.size(); ++p) {
            monomial_values(q.points[p], mono.data());
            for (int l = 0; l < size_; ++l) {
              double v = 0.0;
              for (int m = 0; m < size_; ++m) v += dc_coef(l, m) * mono[m];
              vals(l, p) = v;
            }
          }
          for (int p = 0; p < q.size(); ++p)
            osc_ += q.weights[p] * vals.col(p) * vals.col(p).transpose();
        }
      }
    }
  }
}

void SpatialBasis::monomial_values(const Vec3& xi, double* mono) const {
  double px[kMaxDegree + 1], py[kMaxDegree + 1], pz[kMaxDegree + 1];
  px[0] = py[0] = pz[0] = 1.0;
  for (int d = 1; d <= degree_; ++d) {
    px[d] = px[d - 1] * xi[0];
    py[d] = py[d - 1] * xi[1];
    pz[d] = pz[d - 1] * xi[2];
  }
  for (int m = 0; m < size_; ++m)
    mono[m] = px[expo_[m][0]] * py[expo_[m][1]] * pz[expo_[m][2]];
}

void SpatialBasis::eval(const Vec3& xi, double* values) const {
  double mono[56];
  monomial_values(xi, mono);
  for (int l = 0; l < size_; ++l) {
    double v = 0.0;
    const double* row = coef_.data() + l;  // column-major stride size_
    for (int m = 0; m < size_; ++m) v += row[m * size_] * mono[m];
    values[l] = v;
  }
}

void SpatialBasis::eval_grad(const Vec3& xi, double* values, double* grad) const {
  double px[kMaxDegree + 1], py[kMaxDegree + 1], pz[kMaxDegree + 1];
  px[0] = py[0] = pz[0] = 1.0;
  for (int d = 1; d <= degree_; ++d) {
    px[d] = px[d - 1] * xi[0];
    py[d] = py[d - 1] * xi[1];
    pz[d] = pz[d - 1] * xi[2];
  }
  double mono[56], gx[56], gy[56], gz[56];
  for (int m = 0; m < size_; ++m) {
    auto [a, b, c] = expo_[m];
    mono[m] = px[a] * py[b] * pz[c];
    gx[m] = a > 0 ? a * px[a - 1] * py[b] * pz[c] : 0.0;
    gy[m] = b > 0 ? b * px[a] * py[b - 1] * pz[c] : 0.0;
    gz[m] = c > 0 ? c * px[a] * py[b] * pz[c - 1] : 0.0;
  }
  for (int l = 0; l < size_; ++l) {
    double v = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
    for (int m = 0; m < size_; ++m) {
      double cm = coef_(l, m);
      v += cm * mono[m];
      dx += cm * gx[m];
      dy += cm * gy[m];
      dz += cm * gz[m];
    }
    values[l] = v;
    grad[3 * l + 0] = dx;
    grad[3 * l + 1] = dy;
    grad[3 * l + 2] = dz;
  }
}

STBasis::STBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > kMaxDegree)
    throw std::invalid_argument("unsupported basis degree");
  spatial_size_ = basis_size(degree);
  size_ = spatial_size_ * (degree + 1);

  if (degree == 0) {
    spatial_nodes_.push_back(Vec3(0.25, 0.25, 0.25));
  } else {
    // Equidistant lattice i+j+k <= M in a fixed deterministic order.
    for (int i = 0; i <= degree; ++i)
      for (int j = 0; j <= degree - i; ++j)
        for (int k = 0; k <= degree - i - j; ++k)
          spatial_nodes_.push_back(
              Vec3(double(i) / degree, double(j) / degree, double(k) / degree));
  }

  std::vector<double> tau, wtau;
  gauss_legendre(degree + 1, tau, wtau);

  for (int jt = 0; jt <= degree; ++jt)
    for (int s = 0; s < spatial_size_; ++s)
      nodes_.push_back(Vec4(spatial_nodes_[s][0], spatial_nodes_[s][1],
                            spatial_nodes_[s][2], tau[jt]));

  auto sp_expo = spatial_exponents(degree);
  for (int p = 0; p <= degree; ++p)
    for (auto& e : sp_expo) expo_.push_back({e[0], e[1], e[2], p});

  // Generalized Vandermonde; Lagrange coefficients from its inverse.
  Eigen::MatrixXd V(size_, size_);
  for (int l = 0; l < size_; ++l) {
    const Vec4& n = nodes_[l];
    for (int t = 0; t < size_; ++t) {
      auto [a, b, c, p] = expo_[t];
      V(l, t) = std::pow(n[0], a) * std::pow(n[1], b) * std::pow(n[2], c) *
                std::pow(n[3], p);
    }
  }
  coef_ = V.fullPivLu().inverse().transpose();
}

void STBasis::eval(const Vec4& xt, double* values) const {
  double px[kMaxDegree + 1], py[kMaxDegree + 1], pz[kMaxDegree + 1],
      pt[kMaxDegree + 1];
  px[0] = py[0] = pz[0] = pt[0] = 1.0;
  for (int d = 1; d <= degree_; ++d) {
    px[d] = px[d - 1] * xt[0];
    py[d] = py[d - 1] * xt[1];
    pz[d] = pz[d - 1] * xt[2];
    pt[d] = pt[d - 1] * xt[3];
  }
  for (int l = 0; l < size_; ++l) {
    double v = 0.0;
    for (int t = 0; t < size_; ++t) {
      auto [a, b, c, p] = expo_[t];
      v += coef_(l, t) * px[a] * py[b] * pz[c] * pt[p];
    }
    values[l] = v;
  }
}

void STBasis::eval_grad(const Vec4& xt, double* values, double* grad) const {
  double px[kMaxDegree + 1], py[kMaxDegree + 1], pz[kMaxDegree + 1],
      pt[kMaxDegree + 1];
  px[0] = py[0] = pz[0] = pt[0] = 1.0;
  for (int d = 1; d <= degree_; ++d) {
    px[d] = px[d - 1] * xt[0];
    py[d] = py[d - 1] * xt[1];
    pz[d] = pz[d - 1] * xt[2];
    pt[d] = pt[d - 1] * xt[3];
  }
  for (int l = 0; l < size_; ++l) {
    double v = 0.0, d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
    for (int t = 0; t < size_; ++t) {
      auto [a, b, c, p] = expo_[t];
      double cf = coef_(l, t);
      double mx = px[a], my = py[b], mz = pz[c], mt = pt[p];
      v += cf * mx * my * mz * mt;
      if (a > 0) d0 += cf * a * px[a - 1] * my * mz * mt;
      if (b > 0) d1 += cf * b * mx * py[b - 1] * mz * mt;
      if (c > 0) d2 += cf * c * mx * my * pz[c - 1] * mt;
      if (p > 0) d3 += cf * p * mx * my * mz * pt[p - 1];
    }
    values[l] = v;
    grad[4 * l + 0] = d0;
    grad[4 * l + 1] = d1;
    grad[4 * l + 2] = d2;
    grad[4 * l + 3] = d3;
  }
}

}  // namespace tetraale
