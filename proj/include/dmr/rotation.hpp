#pragma once

// Rotation algebra: quaternion / matrix / 6D conversions, closest-rotation
// projection, and the adjoints used by the retargeting gradient.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "dmr/errors.hpp"

namespace dmr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// First two columns of a rotation matrix, column-major:
// (R00, R10, R20, R01, R11, R21).
struct Rotation6d {
  Eigen::Matrix<double, 6, 1> cols = Eigen::Matrix<double, 6, 1>::Zero();

  Vec3 first() const { return cols.head<3>(); }
  Vec3 second() const { return cols.tail<3>(); }

  static Rotation6d identity() {
    Rotation6d r;
    r.cols << 1, 0, 0, 0, 1, 0;
    return r;
  }
};

inline constexpr double kDegenerateColumnNorm = 1e-9;

inline Rotation6d encode6d(const Mat3& r) {
  Rotation6d out;
  out.cols.head<3>() = r.col(0);
  out.cols.tail<3>() = r.col(1);
  return out;
}

// Gram-Schmidt decoding. The first column of the result is the normalized
// first input column.
inline Mat3 rotation6dToMatrix(const Rotation6d& r) {
  const Vec3 a1 = r.first();
  const Vec3 a2 = r.second();
  const double n1 = a1.norm();
  if (!(n1 > kDegenerateColumnNorm)) {
    throw DegenerateInput("6D rotation: first column is near zero");
  }
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double nu = u.norm();
  if (!(nu > kDegenerateColumnNorm)) {
    throw DegenerateInput("6D rotation: columns are parallel or second column is near zero");
  }
  const Vec3 b2 = u / nu;
  Mat3 out;
  out.col(0) = b1;
  out.col(1) = b2;
  out.col(2) = b1.cross(b2);
  return out;
}

namespace detail {

// Adjoint of y = x / |x|.
inline Vec3 normalizeBackward(const Vec3& x, const Vec3& gradY) {
  const double n = x.norm();
  const Vec3 y = x / n;
  return (gradY - y * y.dot(gradY)) / n;
}

}  // namespace detail

// Given dLoss/dR for R = rotation6dToMatrix(r), returns dLoss/dr.
inline Rotation6d rotation6dToMatrixBackward(const Rotation6d& r, const Mat3& gradR) {
  const Vec3 a1 = r.first();
  const Vec3 a2 = r.second();
  const Vec3 b1 = a1.normalized();
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const Vec3 b2 = u.normalized();

  const Vec3 g3 = gradR.col(2);
  Vec3 gb1 = gradR.col(0) + b2.cross(g3);
  const Vec3 gb2 = gradR.col(1) + g3.cross(b1);

  const Vec3 gu = detail::normalizeBackward(u, gb2);
  const double b1gu = b1.dot(gu);
  const Vec3 ga2 = gu - b1gu * b1;
  gb1 += -b1gu * a2 - b1.dot(a2) * gu;
  const Vec3 ga1 = detail::normalizeBackward(a1, gb1);

  Rotation6d out;
  out.cols.head<3>() = ga1;
  out.cols.tail<3>() = ga2;
  return out;
}

inline Mat3 toMatrix(const Quat& q) { return q.normalized().toRotationMatrix(); }

// Canonical quaternion (w >= 0) for a rotation matrix.
inline Quat toQuaternion(const Mat3& r) {
  Quat q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

inline Rotation6d encode6d(const Quat& q) { return encode6d(toMatrix(q)); }

// Polar factor of m: the rotation closest to m in Frobenius norm.
struct PolarFactor {
  Mat3 rotation;
  Mat3 u;
  Mat3 v;
  Vec3 sigma;  // signed so that rotation = u * v^T with det +1
};

inline PolarFactor polarDecompose(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  PolarFactor out;
  out.u = svd.matrixU();
  out.v = svd.matrixV();
  out.sigma = svd.singularValues();
  if ((out.u * out.v.transpose()).determinant() < 0.0) {
    out.u.col(2) = -out.u.col(2);
    out.sigma(2) = -out.sigma(2);
  }
  out.rotation = out.u * out.v.transpose();
  return out;
}

inline Mat3 closestRotation(const Mat3& m) { return polarDecompose(m).rotation; }

// dLoss/dM given dLoss/dR for R = closestRotation(M).
// With M = U S V^T and X = U^T G V, dL/dM = U [(X - X^T) / (s_i + s_j)] V^T.
inline Mat3 closestRotationBackward(const PolarFactor& f, const Mat3& gradR) {
  const Mat3 x = f.u.transpose() * gradR * f.v;
  Mat3 inner = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double denom = f.sigma(i) + f.sigma(j);
      if (std::abs(denom) < 1e-12) continue;
      inner(i, j) = (x(i, j) - x(j, i)) / denom;
    }
  }
  return f.u * inner * f.v.transpose();
}

// Rotation of `angle` radians about a (not necessarily unit) axis.
inline Mat3 axisAngle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace dmr
