#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tetraale {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Largest state-vector size across the supported systems (Baer-Nunziato, 11).
constexpr int kMaxVars = 11;

/// Stack-allocated state vector / matrix sized at runtime up to kMaxVars.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxVars, 1>;
using StateMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxVars, kMaxVars>;
/// Per-variable spatial gradient, one column per direction.
using StateGrad = Eigen::Matrix<double, Eigen::Dynamic, 3, 0, kMaxVars, 3>;

/// Number of spatial basis functions for reconstruction degree M.
constexpr int basis_size(int degree) {
  return (degree + 1) * (degree + 2) * (degree + 3) / 6;
}

/// Stencil population used by the reconstruction, always three times the
/// number of degrees of freedom.
constexpr int stencil_size(int degree) { return 3 * basis_size(degree); }

/// Highest reconstruction degree enabled without the experimental flag.
constexpr int kMaxSupportedDegree = 3;
/// Absolute cap (experimental degrees 4 and 5 allowed behind a flag).
constexpr int kMaxDegree = 5;

/// Flat per-element storage of cell-average state vectors.
struct StateField {
  int nvar = 0;
  std::vector<double> data;

  StateField() = default;
  StateField(int num_elems, int nv) : nvar(nv), data(size_t(num_elems) * nv, 0.0) {}

  int size() const { return nvar ? static_cast<int>(data.size()) / nvar : 0; }
  double* ptr(int e) { return data.data() + size_t(e) * nvar; }
  const double* ptr(int e) const { return data.data() + size_t(e) * nvar; }
  StateVec get(int e) const {
    return Eigen::Map<const Eigen::VectorXd>(ptr(e), nvar);
  }
  void set(int e, const StateVec& q) {
    Eigen::Map<Eigen::VectorXd>(ptr(e), nvar) = q;
  }
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tetraale
