#include "flowsplat/rotation.hpp"

#include <cmath>

namespace flowsplat::rotation {

Vec4 to_vec(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

Eigen::Quaterniond from_vec(const Vec4& v) { return Eigen::Quaterniond(v[0], v[1], v[2], v[3]); }

Eigen::Quaterniond exp_map(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  double w, c;
  if (angle < 1e-8) {
    w = 1.0 - angle * angle / 8.0;
    c = 0.5 - angle * angle / 48.0;
  } else {
    w = std::cos(0.5 * angle);
    c = std::sin(0.5 * angle) / angle;
  }
  return Eigen::Quaterniond(w, c * phi.x(), c * phi.y(), c * phi.z());
}

Eigen::Vector3d log_map(const Eigen::Quaterniond& q_in) {
  Vec4 q = to_vec(q_in);
  if (q[0] < 0.0) q = -q;
  const Eigen::Vector3d v = q.tail<3>();
  const double n = v.norm();
  if (n < 1e-8) {
    // theta/n -> 2/w for small n
    return (2.0 / q[0] - (2.0 / 3.0) * n * n / (q[0] * q[0] * q[0])) * v;
  }
  const double theta = 2.0 * std::atan2(n, q[0]);
  return (theta / n) * v;
}

Mat43 exp_jacobian(const Eigen::Vector3d& phi) {
  const double a = phi.norm();
  Mat43 J;
  if (a < 1e-6) {
    J.row(0) = -0.25 * phi.transpose();
    J.bottomRows<3>() = (0.5 - a * a / 48.0) * Eigen::Matrix3d::Identity() -
                        (1.0 / 24.0) * phi * phi.transpose();
    return J;
  }
  const double s = std::sin(0.5 * a), c = std::cos(0.5 * a);
  const double sinc = s / a;
  const double dsinc_over_a = (0.5 * c * a - s) / (a * a * a);
  J.row(0) = (-0.5 * s / a) * phi.transpose();
  J.bottomRows<3>() =
      sinc * Eigen::Matrix3d::Identity() + dsinc_over_a * phi * phi.transpose();
  return J;
}

Mat34 log_jacobian(const Vec4& q_in) {
  double sign = 1.0;
  Vec4 q = q_in;
  if (q[0] < 0.0) {
    q = -q;
    sign = -1.0;
  }
  const double w = q[0];
  const Eigen::Vector3d v = q.tail<3>();
  const double n = v.norm();
  Mat34 J;
  if (n < 1e-8) {
    const double s = 2.0 / w - (2.0 / 3.0) * n * n / (w * w * w);
    J.col(0) = (-2.0 / (w * w)) * v;
    J.rightCols<3>() = s * Eigen::Matrix3d::Identity() -
                       (4.0 / 3.0) / (w * w * w) * v * v.transpose();
    return sign * J;
  }
  const double r2 = w * w + n * n;
  const double theta = 2.0 * std::atan2(n, w);
  const double s = theta / n;
  const double dtheta_dw = -2.0 * n / r2;
  const double dtheta_dn = 2.0 * w / r2;
  const double ds_dn = (dtheta_dn * n - theta) / (n * n);
  const double ds_dw = dtheta_dw / n;
  J.col(0) = ds_dw * v;
  J.rightCols<3>() = s * Eigen::Matrix3d::Identity() + (ds_dn / n) * v * v.transpose();
  return sign * J;
}

Mat4 left_matrix(const Vec4& a) {
  const double w = a[0], x = a[1], y = a[2], z = a[3];
  Mat4 m;
  m << w, -x, -y, -z,
       x,  w, -z,  y,
       y,  z,  w, -x,
       z, -y,  x,  w;
  return m;
}

Mat4 right_matrix(const Vec4& b) {
  const double w = b[0], x = b[1], y = b[2], z = b[3];
  Mat4 m;
  m << w, -x, -y, -z,
       x,  w,  z, -y,
       y, -z,  w,  x,
       z,  y, -x,  w;
  return m;
}

Mat4 normalize_jacobian(const Vec4& v) {
  const double n = v.norm();
  const Vec4 u = v / n;
  return (Mat4::Identity() - u * u.transpose()) / n;
}

Eigen::Quaterniond advance(const Eigen::Quaterniond& q, const Eigen::Vector3d& phi) {
  if (phi.isZero()) return q;
  Eigen::Quaterniond out = exp_map(phi) * q;
  out.normalize();
  return out;
}

}  // namespace flowsplat::rotation
