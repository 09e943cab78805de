#ifndef STOKES_BIE_TYPES_HPP
#define STOKES_BIE_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace stokes_bie {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Rank-3 tensor stored as three 3x3 slices: t(i, j, k) == slice[i](j, k).
struct Tensor3 {
  std::array<Mat3, 3> slice{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};

  double& operator()(int i, int j, int k) { return slice[i](j, k); }
  double operator()(int i, int j, int k) const { return slice[i](j, k); }

  double max_abs() const {
    return std::max({slice[0].cwiseAbs().maxCoeff(), slice[1].cwiseAbs().maxCoeff(),
                     slice[2].cwiseAbs().maxCoeff()});
  }
};

/// Nodal vector field, one entry per mesh node.
using NodalField = std::vector<Vec3>;

/// Which side of the closed surface holds the fluid.
enum class DomainKind { interior, exterior };

inline const char* to_string(DomainKind kind) {
  return kind == DomainKind::interior ? "interior" : "exterior";
}

/// Invalid or inconsistent surface geometry.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh file; carries the offending line number.
class ParseError : public MeshError {
 public:
  ParseError(const std::string& what, int line)
      : MeshError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Numerical failure: quadrature non-convergence, singular system, failed factorization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stokes_bie

#endif  // STOKES_BIE_TYPES_HPP
