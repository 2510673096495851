#include <cmath>

#include "tetraale/physics.hpp"

namespace tetraale {

// Conserved layout: phi1 rho1, phi1 rho1 u1 (3), phi1 rho1 E1,
//                   phi2 rho2, phi2 rho2 u2 (3), phi2 rho2 E2, phi1.
// The compaction equation eliminates d(phi1)/dt from the energy equations, so
// the p_I terms appear as spatial non-conservative products and the
// mu (p1 - p2) part lands in the source.

BaerNunziatoSystem::Phases BaerNunziatoSystem::decompose(const StateVec& q) const {
  Phases ph;
  ph.phi1 = q[10];
  double phi2 = 1.0 - ph.phi1;
  double m1 = q[0], m2 = q[5];
  ph.rho1 = m1 / ph.phi1;
  ph.rho2 = m2 / phi2;
  ph.u1 = q.segment<3>(1) / m1;
  ph.u2 = q.segment<3>(6) / m2;
  double rhoe1 = (q[4] - 0.5 * q.segment<3>(1).squaredNorm() / m1) / ph.phi1;
  double rhoe2 = (q[9] - 0.5 * q.segment<3>(6).squaredNorm() / m2) / phi2;
  ph.p1 = (p_.gamma1 - 1.0) * rhoe1 - p_.gamma1 * p_.pi1;
  ph.p2 = (p_.gamma2 - 1.0) * rhoe2 - p_.gamma2 * p_.pi2;
  ph.c1 = std::sqrt(std::max(0.0, p_.gamma1 * (ph.p1 + p_.pi1) / ph.rho1));
  ph.c2 = std::sqrt(std::max(0.0, p_.gamma2 * (ph.p2 + p_.pi2) / ph.rho2));
  return ph;
}

void BaerNunziatoSystem::flux(const StateVec& q, FluxMat& F) const {
  F.resize(11, 3);
  Phases ph = decompose(q);
  double phi2 = 1.0 - ph.phi1;
  for (int d = 0; d < 3; ++d) {
    F(0, d) = q[0] * ph.u1[d];
    for (int i = 0; i < 3; ++i) F(1 + i, d) = q[1 + i] * ph.u1[d];
    F(1 + d, d) += ph.phi1 * ph.p1;
    F(4, d) = (q[4] + ph.phi1 * ph.p1) * ph.u1[d];
    F(5, d) = q[5] * ph.u2[d];
    for (int i = 0; i < 3; ++i) F(6 + i, d) = q[6 + i] * ph.u2[d];
    F(6 + d, d) += phi2 * ph.p2;
    F(9, d) = (q[9] + phi2 * ph.p2) * ph.u2[d];
    F(10, d) = 0.0;
  }
}

void BaerNunziatoSystem::nonconservative_product(const StateVec& q,
                                                 const StateGrad& grad,
                                                 StateVec& P) const {
  P.setZero(11);
  Phases ph = decompose(q);
  Vec3 gphi = grad.row(10).transpose();
  double uIg = ph.u1.dot(gphi);
  for (int i = 0; i < 3; ++i) {
    P[1 + i] = -ph.p2 * gphi[i];
    P[6 + i] = ph.p2 * gphi[i];
  }
  P[4] = -ph.p2 * uIg;
  P[9] = ph.p2 * uIg;
  P[10] = uIg;
}

void BaerNunziatoSystem::ncp_matrix_n(const StateVec& q, const Vec3& n,
                                      StateMat& Bn) const {
  Bn.setZero(11, 11);
  Phases ph = decompose(q);
  double uIn = ph.u1.dot(n);
  for (int i = 0; i < 3; ++i) {
    Bn(1 + i, 10) = -ph.p2 * n[i];
    Bn(6 + i, 10) = ph.p2 * n[i];
  }
  Bn(4, 10) = -ph.p2 * uIn;
  Bn(9, 10) = ph.p2 * uIn;
  Bn(10, 10) = uIn;
}

void BaerNunziatoSystem::source(const StateVec& q, StateVec& S) const {
  S.setZero(11);
  if (!has_source()) return;
  Phases ph = decompose(q);
  Vec3 du = ph.u1 - ph.u2;
  double dp = ph.p1 - ph.p2;
  Vec3 drag = p_.lambda * du;
  double dragwork = p_.lambda * ph.u1.dot(du);
  S.segment<3>(1) = -drag;
  S[4] = -dragwork - p_.mu * ph.p2 * dp;
  S.segment<3>(6) = drag;
  S[9] = dragwork + p_.mu * ph.p2 * dp;
  S[10] = p_.mu * dp;
}

void BaerNunziatoSystem::eigenvalues(const StateVec& q, const Vec3& n, double vn,
                                     StateVec& lam) const {
  lam.resize(11);
  Phases ph = decompose(q);
  double u1n = ph.u1.dot(n), u2n = ph.u2.dot(n);
  lam << u1n - vn - ph.c1, u1n - vn, u1n - vn, u1n - vn, u1n - vn + ph.c1,
      u2n - vn - ph.c2, u2n - vn, u2n - vn, u2n - vn, u2n - vn + ph.c2,
      u1n - vn;
}

double BaerNunziatoSystem::max_signal(const StateVec& q, const Vec3& V) const {
  Phases ph = decompose(q);
  return std::max((ph.u1 - V).norm() + ph.c1, (ph.u2 - V).norm() + ph.c2);
}

bool BaerNunziatoSystem::admissible(const StateVec& q) const {
  if (!q.allFinite()) return false;
  double phi1 = q[10];
  if (!(phi1 > 0.0 && phi1 < 1.0)) return false;
  if (!(q[0] > 0.0 && q[5] > 0.0)) return false;
  Phases ph = decompose(q);
  // Positive phase internal energy and squared sound speed.
  if (!(ph.p1 + p_.gamma1 * p_.pi1 > 0.0) || !(ph.p1 + p_.pi1 > 0.0)) return false;
  if (!(ph.p2 + p_.gamma2 * p_.pi2 > 0.0) || !(ph.p2 + p_.pi2 > 0.0)) return false;
  return true;
}

StateVec BaerNunziatoSystem::prim_to_cons(const StateVec& u) const {
  // (rho1, u1, v1, w1, p1, rho2, u2, v2, w2, p2, phi1)
  StateVec q(11);
  double phi1 = u[10], phi2 = 1.0 - phi1;
  double rho1 = u[0], p1 = u[4], rho2 = u[5], p2 = u[9];
  double e1 = (p1 + p_.gamma1 * p_.pi1) / (rho1 * (p_.gamma1 - 1.0));
  double e2 = (p2 + p_.gamma2 * p_.pi2) / (rho2 * (p_.gamma2 - 1.0));
  q[0] = phi1 * rho1;
  q.segment<3>(1) = q[0] * u.segment<3>(1);
  q[4] = q[0] * (e1 + 0.5 * u.segment<3>(1).squaredNorm());
  q[5] = phi2 * rho2;
  q.segment<3>(6) = q[5] * u.segment<3>(6);
  q[9] = q[5] * (e2 + 0.5 * u.segment<3>(6).squaredNorm());
  q[10] = phi1;
  return q;
}

StateVec BaerNunziatoSystem::cons_to_prim(const StateVec& q) const {
  Phases ph = decompose(q);
  StateVec u(11);
  u[0] = ph.rho1;
  u.segment<3>(1) = ph.u1;
  u[4] = ph.p1;
  u[5] = ph.rho2;
  u.segment<3>(6) = ph.u2;
  u[9] = ph.p2;
  u[10] = ph.phi1;
  return u;
}

Vec3 BaerNunziatoSystem::velocity(const StateVec& q) const {
  return q.segment<3>(1) / q[0];  // interface velocity = solid velocity
}

double BaerNunziatoSystem::pressure(const StateVec& q) const {
  Phases ph = decompose(q);
  return ph.phi1 * ph.p1 + (1.0 - ph.phi1) * ph.p2;
}

double BaerNunziatoSystem::sound_speed(const StateVec& q) const {
  Phases ph = decompose(q);
  return std::max(ph.c1, ph.c2);
}

double BaerNunziatoSystem::mass_density(const StateVec& q) const {
  return q[0] + q[5];
}

// |A| dq exploiting the structure of the system matrix: two stiffened-gas
// Euler blocks plus a single coupling column in d(phi1) whose eigenvalue is
// the interface speed. The phase-1 part of the interface eigenvector has a
// closed form; the phase-2 part is solved in phase-2 characteristic space
// (resonant configurations fall back to Rusanov dissipation via `false`).
bool BaerNunziatoSystem::abs_jacobian_apply(const StateVec& q, const Vec3& n,
                                            double vn, double scale,
                                            const StateVec& dq,
                                            StateVec& out) const {
  Phases ph = decompose(q);
  if (!(ph.c1 > 0.0) || !(ph.c2 > 0.0)) return false;
  double u1n = ph.u1.dot(n);
  double H1 = (q[4] + ph.phi1 * ph.p1) / q[0];
  double H2 = (q[9] + (1.0 - ph.phi1) * ph.p2) / q[5];

  // Interface eigenvector (w1, w2, 1).
  detail::Vec5 w1, w2;
  {
    double a = (ph.p2 + p_.gamma1 * p_.pi1) / (2.0 * ph.c1 * ph.c1);
    detail::Vec5 rm, rp;
    rm << 1.0, ph.u1 - ph.c1 * n, H1 - ph.c1 * u1n;
    rp << 1.0, ph.u1 + ph.c1 * n, H1 + ph.c1 * u1n;
    w1 = a * (rp + rm);
  }
  {
    detail::Vec5 rhs;
    double u2n = ph.u2.dot(n);
    rhs << 0.0, -(ph.p2 + p_.gamma2 * p_.pi2) * n,
        -(p_.gamma2 * p_.pi2 * u2n + ph.p2 * u1n);
    if (!detail::euler_shifted_solve(ph.u2, ph.c2, H2, n, u1n, rhs, w2))
      return false;
  }

  double dphi = dq[10];
  detail::Vec5 d1 = dq.segment<5>(0) - dphi * w1;
  detail::Vec5 d2 = dq.segment<5>(5) - dphi * w2;
  detail::Vec5 o1, o2;
  detail::euler_abs_apply(ph.u1, ph.c1, H1, n, vn, scale, d1, o1);
  detail::euler_abs_apply(ph.u2, ph.c2, H2, n, vn, scale, d2, o2);

  double lamI = scale * std::abs(u1n - vn);
  out.resize(11);
  out.segment<5>(0) = o1 + lamI * dphi * w1;
  out.segment<5>(5) = o2 + lamI * dphi * w2;
  out[10] = lamI * dphi;
  return out.allFinite();
}

}  // namespace tetraale

namespace tetraale {

StateVec BaerNunziatoSystem::wall_mirror(const StateVec& q, const Vec3& n,
                                         const Vec3& vwall) const {
  StateVec u = cons_to_prim(q);
  Vec3 u1 = u.segment<3>(1), u2 = u.segment<3>(6);
  u.segment<3>(1) = u1 - 2.0 * (u1 - vwall).dot(n) * n;
  u.segment<3>(6) = u2 - 2.0 * (u2 - vwall).dot(n) * n;
  return prim_to_cons(u);
}

}  // namespace tetraale
