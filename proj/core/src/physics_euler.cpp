#include <cmath>

#include "tetraale/physics.hpp"

namespace tetraale {

void SystemDescriptor::nonconservative_product(const StateVec&, const StateGrad&,
                                               StateVec& P) const {
  P.setZero(nvar());
}

void SystemDescriptor::ncp_matrix_n(const StateVec&, const Vec3&,
                                    StateMat& Bn) const {
  Bn.setZero(nvar(), nvar());
}

void SystemDescriptor::source(const StateVec&, StateVec& S) const {
  S.setZero(nvar());
}

void SystemDescriptor::source_jacobian(const StateVec& q, StateMat& J) const {
  const int nu = nvar();
  J.resize(nu, nu);
  StateVec qp = q, qm = q, sp(nu), sm(nu);
  for (int j = 0; j < nu; ++j) {
    double h = 1e-7 * std::max(1.0, std::abs(q[j]));
    qp[j] = q[j] + h;
    qm[j] = q[j] - h;
    source(qp, sp);
    source(qm, sm);
    J.col(j) = (sp - sm) / (2.0 * h);
    qp[j] = q[j];
    qm[j] = q[j];
  }
}

double SystemDescriptor::max_abs_eigenvalue(const StateVec& q, const Vec3& n,
                                            double vn) const {
  StateVec lam(nvar());
  eigenvalues(q, n, vn, lam);
  return lam.cwiseAbs().maxCoeff();
}

void SystemDescriptor::jacobian_n(const StateVec& q, const Vec3& n, double vn,
                                  StateMat& A) const {
  const int nu = nvar();
  A.resize(nu, nu);
  FluxMat Fp(nu, 3), Fm(nu, 3);
  StateVec qp = q, qm = q;
  for (int j = 0; j < nu; ++j) {
    double h = 1e-7 * std::max(1.0, std::abs(q[j]));
    qp[j] = q[j] + h;
    qm[j] = q[j] - h;
    flux(qp, Fp);
    flux(qm, Fm);
    A.col(j) = (Fp * n - Fm * n) / (2.0 * h);
    qp[j] = q[j];
    qm[j] = q[j];
  }
  if (has_nonconservative()) {
    StateMat Bn;
    ncp_matrix_n(q, n, Bn);
    A += Bn;
  }
  A -= vn * StateMat::Identity(nu, nu);
}

bool SystemDescriptor::abs_jacobian_apply(const StateVec& q, const Vec3& n,
                                          double vn, double scale,
                                          const StateVec& dq, StateVec& out) const {
  return abs_jacobian_apply_numeric(*this, q, n, vn, scale, dq, out);
}

bool abs_jacobian_apply_numeric(const SystemDescriptor& sys, const StateVec& q,
                                const Vec3& n, double vn, double scale,
                                const StateVec& dq, StateVec& out) {
  StateMat A;
  sys.jacobian_n(q, n, vn, A);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) return false;
  double magscale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().imag().cwiseAbs().maxCoeff() > 1e-6 * magscale)
    return false;
  Eigen::MatrixXd R = es.eigenvectors().real();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (!lu.isInvertible() || lu.rcond() < 1e-10) return false;
  Eigen::VectorXd y = lu.solve(Eigen::VectorXd(dq));
  y.array() *= es.eigenvalues().real().array().abs();
  out = scale * (R * y);
  return true;
}

namespace {

// Orthonormal tangent pair for a unit direction.
void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  Vec3 a = std::abs(n[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  t1 = n.cross(a).normalized();
  t2 = n.cross(t1);
}

}  // namespace

void EulerSystem::flux(const StateVec& q, FluxMat& F) const {
  F.resize(5, 3);
  double rho = q[0];
  Vec3 v = q.segment<3>(1) / rho;
  double p = pressure(q);
  double Et = q[4];
  for (int d = 0; d < 3; ++d) {
    F(0, d) = q[1 + d];
    for (int i = 0; i < 3; ++i) F(1 + i, d) = q[1 + i] * v[d];
    F(1 + d, d) += p;
    F(4, d) = v[d] * (Et + p);
  }
}

double EulerSystem::pressure(const StateVec& q) const {
  return (gamma_ - 1.0) * (q[4] - 0.5 * q.segment<3>(1).squaredNorm() / q[0]);
}

double EulerSystem::sound_speed(const StateVec& q) const {
  return std::sqrt(gamma_ * pressure(q) / q[0]);
}

Vec3 EulerSystem::velocity(const StateVec& q) const {
  return q.segment<3>(1) / q[0];
}

bool EulerSystem::admissible(const StateVec& q) const {
  return q.allFinite() && q[0] > 0.0 && pressure(q) > 0.0;
}

StateVec EulerSystem::prim_to_cons(const StateVec& u) const {
  StateVec q(5);
  double rho = u[0], p = u[4];
  q[0] = rho;
  q.segment<3>(1) = rho * u.segment<3>(1);
  q[4] = p / (gamma_ - 1.0) + 0.5 * rho * u.segment<3>(1).squaredNorm();
  return q;
}

StateVec EulerSystem::cons_to_prim(const StateVec& q) const {
  StateVec u(5);
  u[0] = q[0];
  u.segment<3>(1) = q.segment<3>(1) / q[0];
  u[4] = pressure(q);
  return u;
}

void EulerSystem::eigenvalues(const StateVec& q, const Vec3& n, double vn,
                              StateVec& lam) const {
  lam.resize(5);
  double un = velocity(q).dot(n);
  double c = sound_speed(q);
  lam << un - vn - c, un - vn, un - vn, un - vn, un - vn + c;
}

double EulerSystem::max_signal(const StateVec& q, const Vec3& V) const {
  return (velocity(q) - V).norm() + sound_speed(q);
}

bool EulerSystem::abs_jacobian_apply(const StateVec& q, const Vec3& n, double vn,
                                     double scale, const StateVec& dq,
                                     StateVec& out) const {
  double rho = q[0];
  Vec3 v = q.segment<3>(1) / rho;
  double p = pressure(q);
  if (!(rho > 0.0) || !(p > 0.0)) return false;
  double c = std::sqrt(gamma_ * p / rho);
  double H = (q[4] + p) / rho;
  detail::Vec5 o;
  detail::euler_abs_apply(v, c, H, n, vn, scale, detail::Vec5(dq), o);
  out = o;
  return out.allFinite();
}

namespace detail {

namespace {

void euler_block_eigen(const Vec3& v, double c, double H, const Vec3& n,
                       Eigen::Matrix<double, 5, 5>& R,
                       Eigen::Matrix<double, 5, 1>& lam) {
  double un = v.dot(n);
  Vec3 t1, t2;
  tangent_frame(n, t1, t2);
  R.col(0) << 1.0, v - c * n, H - c * un;
  R.col(1) << 1.0, v, 0.5 * v.squaredNorm();
  R.col(2) << 0.0, t1, v.dot(t1);
  R.col(3) << 0.0, t2, v.dot(t2);
  R.col(4) << 1.0, v + c * n, H + c * un;
  lam << un - c, un, un, un, un + c;
}

}  // namespace

void euler_abs_apply(const Vec3& v, double c, double H, const Vec3& n, double vn,
                     double scale, const Vec5& dq, Vec5& out) {
  Eigen::Matrix<double, 5, 5> R;
  Vec5 lam;
  euler_block_eigen(v, c, H, n, R, lam);
  Vec5 y = R.partialPivLu().solve(dq);
  y.array() *= (lam.array() - vn).abs();
  out = scale * (R * y);
}

bool euler_shifted_solve(const Vec3& v, double c, double H, const Vec3& n,
                         double mu, const Vec5& rhs, Vec5& w) {
  Eigen::Matrix<double, 5, 5> R;
  Vec5 lam;
  euler_block_eigen(v, c, H, n, R, lam);
  Vec5 y = R.partialPivLu().solve(rhs);
  double guard = 1e-8 * (c + std::abs(v.dot(n)) + std::abs(mu) + 1e-300);
  for (int i = 0; i < 5; ++i) {
    double d = lam[i] - mu;
    if (std::abs(d) < guard && std::abs(y[i]) > 1e-14 * rhs.cwiseAbs().maxCoeff())
      return false;
    y[i] = std::abs(d) < guard ? 0.0 : y[i] / d;
  }
  w = R * y;
  return w.allFinite();
}

}  // namespace detail

}  // namespace tetraale

namespace tetraale {

StateVec EulerSystem::wall_mirror(const StateVec& q, const Vec3& n,
                                  const Vec3& vwall) const {
  StateVec u = cons_to_prim(q);
  Vec3 v = u.segment<3>(1);
  u.segment<3>(1) = v - 2.0 * (v - vwall).dot(n) * n;
  return prim_to_cons(u);
}

}  // namespace tetraale
