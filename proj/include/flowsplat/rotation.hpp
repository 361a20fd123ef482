#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

// Quaternion exponential/logarithm maps and their Jacobians.
//
// Quaternions are handled as 4-vectors in (w, x, y, z) order whenever a
// Jacobian is involved. Angular increments are world-frame rotation vectors:
// a state rotation q advances as q <- normalize(exp(phi) * q).

namespace flowsplat::rotation {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Mat34 = Eigen::Matrix<double, 3, 4>;

Vec4 to_vec(const Eigen::Quaterniond& q);
Eigen::Quaterniond from_vec(const Vec4& v);

// Unit quaternion for rotation vector phi (angle |phi| about phi/|phi|).
Eigen::Quaterniond exp_map(const Eigen::Vector3d& phi);

// Inverse of exp_map on the w >= 0 hemisphere; q and -q give the same result.
Eigen::Vector3d log_map(const Eigen::Quaterniond& q);

// d exp_map(phi) / d phi, 4x3.
Mat43 exp_jacobian(const Eigen::Vector3d& phi);

// d log_map(q) / d q evaluated at the 4-vector q (need not be unit), 3x4.
Mat34 log_jacobian(const Vec4& q);

// Matrices with a*b == left_matrix(a) * b == right_matrix(b) * a.
Mat4 left_matrix(const Vec4& a);
Mat4 right_matrix(const Vec4& b);

// d (v / |v|) / d v.
Mat4 normalize_jacobian(const Vec4& v);

// Advances q by the world-frame rotation vector phi and renormalizes. A zero
// increment returns q unchanged.
Eigen::Quaterniond advance(const Eigen::Quaterniond& q, const Eigen::Vector3d& phi);

}  // namespace flowsplat::rotation
