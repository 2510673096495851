#include <cmath>

#include "tetraale/physics.hpp"

namespace tetraale {

namespace {
constexpr double kFourPi = 4.0 * 3.14159265358979323846;
}

// State layout: rho, rho u, rho v, rho w, rho E, Bx, By, Bz, psi.
void MhdGlmSystem::flux(const StateVec& q, FluxMat& F) const {
  F.resize(9, 3);
  double rho = q[0];
  Vec3 v = q.segment<3>(1) / rho;
  Vec3 B = q.segment<3>(5);
  double psi = q[8];
  double p = gas_pressure(q);
  double pt = p + B.squaredNorm() / (2.0 * kFourPi);
  double vB = v.dot(B);
  for (int d = 0; d < 3; ++d) {
    F(0, d) = q[1 + d];
    for (int i = 0; i < 3; ++i)
      F(1 + i, d) = q[1 + i] * v[d] - B[i] * B[d] / kFourPi;
    F(1 + d, d) += pt;
    F(4, d) = v[d] * (q[4] + pt) - B[d] * vB / kFourPi;
    for (int i = 0; i < 3; ++i) F(5 + i, d) = v[d] * B[i] - B[d] * v[i];
    F(5 + d, d) += psi;
    F(8, d) = ch_ * ch_ * B[d];
  }
}

double MhdGlmSystem::gas_pressure(const StateVec& q) const {
  double rho = q[0];
  double kin = 0.5 * q.segment<3>(1).squaredNorm() / rho;
  double mag = q.segment<3>(5).squaredNorm() / (2.0 * kFourPi);
  return (gamma_ - 1.0) * (q[4] - kin - mag);
}

double MhdGlmSystem::pressure(const StateVec& q) const {
  return gas_pressure(q) + q.segment<3>(5).squaredNorm() / (2.0 * kFourPi);
}

double MhdGlmSystem::sound_speed(const StateVec& q) const {
  double a2 = gamma_ * gas_pressure(q) / q[0];
  double b2 = q.segment<3>(5).squaredNorm() / (kFourPi * q[0]);
  return std::sqrt(a2 + b2);
}

double MhdGlmSystem::fast_speed(const StateVec& q, const Vec3& n) const {
  double rho = q[0];
  double a2 = gamma_ * gas_pressure(q) / rho;
  double b2 = q.segment<3>(5).squaredNorm() / (kFourPi * rho);
  double bn2 = std::pow(q.segment<3>(5).dot(n), 2) / (kFourPi * rho);
  double s = a2 + b2;
  double disc = std::sqrt(std::max(0.0, s * s - 4.0 * a2 * bn2));
  return std::sqrt(0.5 * (s + disc));
}

Vec3 MhdGlmSystem::velocity(const StateVec& q) const {
  return q.segment<3>(1) / q[0];
}

bool MhdGlmSystem::admissible(const StateVec& q) const {
  return q.allFinite() && q[0] > 0.0 && gas_pressure(q) > 0.0;
}

StateVec MhdGlmSystem::prim_to_cons(const StateVec& u) const {
  // (rho, u, v, w, p, Bx, By, Bz, psi)
  StateVec q(9);
  double rho = u[0], p = u[4];
  q[0] = rho;
  q.segment<3>(1) = rho * u.segment<3>(1);
  q.segment<3>(5) = u.segment<3>(5);
  q[8] = u[8];
  q[4] = p / (gamma_ - 1.0) + 0.5 * rho * u.segment<3>(1).squaredNorm() +
         u.segment<3>(5).squaredNorm() / (2.0 * kFourPi);
  return q;
}

StateVec MhdGlmSystem::cons_to_prim(const StateVec& q) const {
  StateVec u(9);
  u[0] = q[0];
  u.segment<3>(1) = q.segment<3>(1) / q[0];
  u[4] = gas_pressure(q);
  u.segment<3>(5) = q.segment<3>(5);
  u[8] = q[8];
  return u;
}

void MhdGlmSystem::eigenvalues(const StateVec& q, const Vec3& n, double vn,
                               StateVec& lam) const {
  lam.resize(9);
  double rho = q[0];
  double un = velocity(q).dot(n);
  double a2 = gamma_ * gas_pressure(q) / rho;
  double b2 = q.segment<3>(5).squaredNorm() / (kFourPi * rho);
  double bn2 = std::pow(q.segment<3>(5).dot(n), 2) / (kFourPi * rho);
  double s = a2 + b2;
  double disc = std::sqrt(std::max(0.0, s * s - 4.0 * a2 * bn2));
  double cf = std::sqrt(0.5 * (s + disc));
  double cs = std::sqrt(std::max(0.0, 0.5 * (s - disc)));
  double ca = std::sqrt(bn2);
  lam << un - vn - cf, un - vn - ca, un - vn - cs, un - vn, un - vn + cs,
      un - vn + ca, un - vn + cf, ch_ - vn, -ch_ - vn;
}

double MhdGlmSystem::max_signal(const StateVec& q, const Vec3& V) const {
  double urel = (velocity(q) - V).norm();
  return std::max(urel + sound_speed(q), ch_ + V.norm());
}

bool MhdGlmSystem::abs_jacobian_apply(const StateVec& q, const Vec3& n,
                                      double vn, double scale,
                                      const StateVec& dq, StateVec& out) const {
  return abs_jacobian_apply_numeric(*this, q, n, vn, scale, dq, out);
}

}  // namespace tetraale

namespace tetraale {

StateVec MhdGlmSystem::wall_mirror(const StateVec& q, const Vec3& n,
                                   const Vec3& vwall) const {
  StateVec u = cons_to_prim(q);
  Vec3 v = u.segment<3>(1);
  u.segment<3>(1) = v - 2.0 * (v - vwall).dot(n) * n;
  return prim_to_cons(u);
}

}  // namespace tetraale
