#pragma once

#include <memory>
#include <string>

#include "tetraale/types.hpp"

namespace tetraale {

using FluxMat = Eigen::Matrix<double, Eigen::Dynamic, 3, 0, kMaxVars, 3>;

/// Abstract hyperbolic system written as
///   dQ/dt + div F(Q) + B(Q) . grad Q = S(Q).
class SystemDescriptor {
 public:
  virtual ~SystemDescriptor() = default;

  virtual int nvar() const = 0;
  virtual std::string name() const = 0;

  /// Conservative flux tensor; column d is the flux in direction d.
  virtual void flux(const StateVec& q, FluxMat& F) const = 0;

  virtual bool has_nonconservative() const { return false; }
  /// P = sum_d B_d(q) gradQ(:,d); default zero.
  virtual void nonconservative_product(const StateVec& q, const StateGrad& grad,
                                       StateVec& P) const;
  /// Bn = sum_d B_d(q) n_d; default zero.
  virtual void ncp_matrix_n(const StateVec& q, const Vec3& n, StateMat& Bn) const;

  virtual bool has_source() const { return false; }
  virtual void source(const StateVec& q, StateVec& S) const;
  /// dS/dQ by central differences unless overridden.
  virtual void source_jacobian(const StateVec& q, StateMat& J) const;

  /// Eigenvalues of (dF/dQ + B).n - vn I for a unit spatial direction n.
  virtual void eigenvalues(const StateVec& q, const Vec3& n, double vn,
                           StateVec& lam) const = 0;
  double max_abs_eigenvalue(const StateVec& q, const Vec3& n, double vn) const;

  /// Upper bound of |eigenvalue| over all unit directions for mesh velocity V.
  virtual double max_signal(const StateVec& q, const Vec3& V) const = 0;

  /// out = |A| dq for A = scale * ((dF/dQ + B).n - vn I). Returns false when
  /// the decomposition is unavailable (caller falls back to Rusanov).
  virtual bool abs_jacobian_apply(const StateVec& q, const Vec3& n, double vn,
                                  double scale, const StateVec& dq,
                                  StateVec& out) const;

  /// (dF/dQ + B).n - vn I by flux finite differences plus the analytic B.
  void jacobian_n(const StateVec& q, const Vec3& n, double vn, StateMat& A) const;

  virtual bool admissible(const StateVec& q) const = 0;
  virtual StateVec prim_to_cons(const StateVec& u) const = 0;
  virtual StateVec cons_to_prim(const StateVec& q) const = 0;

  /// Exterior state for a (possibly moving) slip wall: velocities reflected
  /// about the wall plane in the wall frame, thermodynamics copied.
  virtual StateVec wall_mirror(const StateVec& q, const Vec3& n,
                               const Vec3& vwall) const = 0;

  /// Local fluid velocity driving the Lagrangian mesh motion.
  virtual Vec3 velocity(const StateVec& q) const = 0;
  /// Pressure entering the node-solver force balance.
  virtual double pressure(const StateVec& q) const = 0;
  /// Direction-free wavespeed bound for impedances and the flattener.
  virtual double sound_speed(const StateVec& q) const = 0;
  virtual double mass_density(const StateVec& q) const = 0;
  /// Material parameter for the nonlinear impedance, (gamma+1)/2.
  virtual double impedance_gamma(const StateVec& q) const = 0;

  /// Conserved totals for diagnostics (default: first five components).
  virtual void totals(const StateVec& q, double& mass, Vec3& momentum,
                      double& energy) const {
    mass = q[0];
    momentum = q.segment<3>(1);
    energy = q[4];
  }
};

class EulerSystem : public SystemDescriptor {
 public:
  explicit EulerSystem(double gamma = 1.4) : gamma_(gamma) {}

  int nvar() const override { return 5; }
  std::string name() const override { return "euler"; }
  void flux(const StateVec& q, FluxMat& F) const override;
  void eigenvalues(const StateVec& q, const Vec3& n, double vn,
                   StateVec& lam) const override;
  double max_signal(const StateVec& q, const Vec3& V) const override;
  bool abs_jacobian_apply(const StateVec& q, const Vec3& n, double vn,
                          double scale, const StateVec& dq,
                          StateVec& out) const override;
  bool admissible(const StateVec& q) const override;
  StateVec prim_to_cons(const StateVec& u) const override;
  StateVec cons_to_prim(const StateVec& q) const override;
  StateVec wall_mirror(const StateVec& q, const Vec3& n,
                       const Vec3& vwall) const override;
  Vec3 velocity(const StateVec& q) const override;
  double pressure(const StateVec& q) const override;
  double sound_speed(const StateVec& q) const override;
  double mass_density(const StateVec& q) const override { return q[0]; }
  double impedance_gamma(const StateVec&) const override {
    return 0.5 * (gamma_ + 1.0);
  }
  double gamma() const { return gamma_; }

 private:
  double gamma_;
};

/// Ideal MHD with hyperbolic divergence cleaning; magnetic terms carry the
/// 4*pi scaling (B^2/(8 pi) pressure, B B/(4 pi) stress).
class MhdGlmSystem : public SystemDescriptor {
 public:
  MhdGlmSystem(double gamma = 1.4, double ch = 2.0) : gamma_(gamma), ch_(ch) {}

  int nvar() const override { return 9; }
  std::string name() const override { return "mhd"; }
  void flux(const StateVec& q, FluxMat& F) const override;
  void eigenvalues(const StateVec& q, const Vec3& n, double vn,
                   StateVec& lam) const override;
  double max_signal(const StateVec& q, const Vec3& V) const override;
  bool abs_jacobian_apply(const StateVec& q, const Vec3& n, double vn,
                          double scale, const StateVec& dq,
                          StateVec& out) const override;
  bool admissible(const StateVec& q) const override;
  StateVec prim_to_cons(const StateVec& u) const override;
  StateVec cons_to_prim(const StateVec& q) const override;
  StateVec wall_mirror(const StateVec& q, const Vec3& n,
                       const Vec3& vwall) const override;
  Vec3 velocity(const StateVec& q) const override;
  double pressure(const StateVec& q) const override;       // total pressure
  double gas_pressure(const StateVec& q) const;
  double sound_speed(const StateVec& q) const override;    // fast-speed bound
  double fast_speed(const StateVec& q, const Vec3& n) const;
  double mass_density(const StateVec& q) const override { return q[0]; }
  double impedance_gamma(const StateVec&) const override {
    return 0.5 * (gamma_ + 1.0);
  }
  double gamma() const { return gamma_; }
  double ch() const { return ch_; }

 private:
  double gamma_;
  double ch_;
};

/// Seven-equation Baer-Nunziato two-phase model (11 conserved variables in
/// 3D) with stiffened-gas phases, interphase drag and pressure relaxation.
/// Interface conventions: u_I = u_1 (solid), p_I = p_2 (gas).
class BaerNunziatoSystem : public SystemDescriptor {
 public:
  struct Params {
    double gamma1 = 1.4, pi1 = 0.0;
    double gamma2 = 1.4, pi2 = 0.0;
    double lambda = 0.0;  // drag
    double mu = 0.0;      // pressure relaxation
  };
  explicit BaerNunziatoSystem(const Params& p) : p_(p) {}

  int nvar() const override { return 11; }
  std::string name() const override { return "baer-nunziato"; }
  void flux(const StateVec& q, FluxMat& F) const override;
  bool has_nonconservative() const override { return true; }
  void nonconservative_product(const StateVec& q, const StateGrad& grad,
                               StateVec& P) const override;
  void ncp_matrix_n(const StateVec& q, const Vec3& n, StateMat& Bn) const override;
  bool has_source() const override { return p_.lambda != 0.0 || p_.mu != 0.0; }
  void source(const StateVec& q, StateVec& S) const override;
  void eigenvalues(const StateVec& q, const Vec3& n, double vn,
                   StateVec& lam) const override;
  double max_signal(const StateVec& q, const Vec3& V) const override;
  bool abs_jacobian_apply(const StateVec& q, const Vec3& n, double vn,
                          double scale, const StateVec& dq,
                          StateVec& out) const override;
  bool admissible(const StateVec& q) const override;
  StateVec prim_to_cons(const StateVec& u) const override;
  StateVec cons_to_prim(const StateVec& q) const override;
  StateVec wall_mirror(const StateVec& q, const Vec3& n,
                       const Vec3& vwall) const override;
  Vec3 velocity(const StateVec& q) const override;  // interface velocity u_1
  double pressure(const StateVec& q) const override;
  double sound_speed(const StateVec& q) const override;
  double mass_density(const StateVec& q) const override;  // mixture density
  double impedance_gamma(const StateVec&) const override {
    return 0.5 * (p_.gamma1 + 1.0);
  }
  const Params& params() const { return p_; }
  void totals(const StateVec& q, double& mass, Vec3& momentum,
              double& energy) const override {
    mass = q[0] + q[5];
    momentum = q.segment<3>(1) + q.segment<3>(6);
    energy = q[4] + q[9];
  }

  /// Phase primitives (rho_k, u_k, p_k, phi_1) extracted from conserved vars.
  struct Phases {
    double rho1, p1, rho2, p2, phi1;
    Vec3 u1, u2;
    double c1, c2;
  };
  Phases decompose(const StateVec& q) const;

 private:
  Params p_;
};

/// Generic |A| dq through a dense eigendecomposition of the finite-difference
/// Jacobian; shared fallback and test oracle.
bool abs_jacobian_apply_numeric(const SystemDescriptor& sys, const StateVec& q,
                                const Vec3& n, double vn, double scale,
                                const StateVec& dq, StateVec& out);

namespace detail {

using Vec5 = Eigen::Matrix<double, 5, 1>;

/// |A| dq for an ideal- or stiffened-gas Euler block in conserved variables,
/// parametrized by velocity, sound speed and total enthalpy.
void euler_abs_apply(const Vec3& v, double c, double H, const Vec3& n, double vn,
                     double scale, const Vec5& dq, Vec5& out);

/// Solve (A - mu I) w = rhs through the eigendecomposition of the same block;
/// returns false near resonance (mu close to an eigenvalue).
bool euler_shifted_solve(const Vec3& v, double c, double H, const Vec3& n,
                         double mu, const Vec5& rhs, Vec5& w);

}  // namespace detail

}  // namespace tetraale
