#pragma once

// Test fixtures and independent oracles. Nothing here calls the library's
// kinematics or skinning code; the oracles recompute from first principles.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmr/dmr.hpp"

namespace fixtures {

using dmr::Mat3;
using dmr::Quat;
using dmr::Vec3;

inline Quat randomQuat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d v(n(rng), n(rng), n(rng), n(rng));
  v.normalize();
  return Quat(v(0), v(1), v(2), v(3));
}

inline Mat3 randomRotation(std::mt19937_64& rng) { return randomQuat(rng).toRotationMatrix(); }

// Rotation by `angle` radians about a unit axis, small-angle friendly.
inline Quat smallRotation(std::mt19937_64& rng, double maxAngle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-maxAngle, maxAngle);
  const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
  return Quat(Eigen::AngleAxisd(u(rng), axis));
}

inline Vec3 randomVec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

// Upright tube of `segments` facets around the Y axis from y0 to y1, closed
// by fan caps, all weighted to joint 0 of a two-joint skeleton (0,0,0) ->
// (0,1,0).
inline dmr::SkinnedCharacter cylinderCharacter(double radius, int segments, double y0 = -0.25, double y1 = 1.25,
                                               int rings = 12) {
  dmr::SkinnedCharacter c;
  c.name = "cylinder";
  c.forward = Vec3::UnitZ();
  c.joints = {Vec3::Zero(), Vec3::UnitY()};
  c.parents = {-1, 0};
  c.jointNames = {"base", "tip"};
  c.bodyParts = {dmr::BodyPart::Torso, dmr::BodyPart::Torso};
  for (int r = 0; r <= rings; ++r) {
    const double y = y0 + (y1 - y0) * r / rings;
    for (int k = 0; k < segments; ++k) {
      const double a = 2.0 * std::numbers::pi * k / segments;
      c.vertices.emplace_back(radius * std::cos(a), y, radius * std::sin(a));
    }
  }
  const int bottom = static_cast<int>(c.vertices.size());
  c.vertices.emplace_back(0.0, y0, 0.0);
  const int top = bottom + 1;
  c.vertices.emplace_back(0.0, y1, 0.0);
  auto id = [&](int r, int k) { return r * segments + (k % segments); };
  for (int r = 0; r < rings; ++r) {
    for (int k = 0; k < segments; ++k) {
      c.faces.push_back({id(r, k), id(r + 1, k), id(r + 1, k + 1)});
      c.faces.push_back({id(r, k), id(r + 1, k + 1), id(r, k + 1)});
    }
  }
  for (int k = 0; k < segments; ++k) {
    c.faces.push_back({bottom, id(0, k), id(0, k + 1)});
    c.faces.push_back({top, id(rings, k + 1), id(rings, k)});
  }
  c.skinWeights.assign(c.vertices.size(), {{0, 1.0}});
  return c;
}

inline dmr::SkinnedCharacter scaled(dmr::SkinnedCharacter c, double k) {
  for (auto& v : c.vertices) v *= k;
  for (auto& j : c.joints) j *= k;
  return c;
}

// Five bones on a small branching tree:
//   0 root -> 1 -> 2, 1 -> 3, 0 -> 4 -> 5
// with one capsule per bone and soft weights blended between the two
// nearest joints, so sensors see genuinely mixed transforms.
inline dmr::SkinnedCharacter fiveBoneCharacter() {
  dmr::SkinnedCharacter c;
  c.name = "five_bone";
  c.forward = Vec3::UnitZ();
  c.joints = {Vec3(0, 0, 0), Vec3(0, 0.5, 0), Vec3(0.35, 0.75, 0.05), Vec3(-0.35, 0.8, -0.05), Vec3(0.1, -0.45, 0),
              Vec3(0.15, -0.9, 0.1)};
  c.parents = {-1, 0, 1, 1, 0, 4};
  c.jointNames = {"root", "spine", "l_arm", "r_arm", "leg", "foot"};
  c.bodyParts = {dmr::BodyPart::Torso,   dmr::BodyPart::Torso,   dmr::BodyPart::LeftArm,
                 dmr::BodyPart::RightArm, dmr::BodyPart::LeftLeg, dmr::BodyPart::LeftLeg};
  dmr::detail::MeshBuilder mb(c);
  for (int j = 1; j < 6; ++j) {
    mb.capsule(c.joints[c.parents[j]], c.joints[j], 0.06, c.parents[j], 10, 3, 0.05);
  }
  // Soften: every vertex shares weight between its capsule's joint and the
  // nearest other joint.
  for (std::size_t v = 0; v < c.vertices.size(); ++v) {
    const int own = c.skinWeights[v].front().joint;
    int other = -1;
    double best = 1e9;
    for (int j = 0; j < 6; ++j) {
      if (j == own) continue;
      const double d = (c.vertices[v] - c.joints[j]).norm();
      if (d < best) {
        best = d;
        other = j;
      }
    }
    const double w = 0.2 + 0.3 * std::exp(-4.0 * best);
    c.skinWeights[v] = {{own, 1.0 - w}, {other, w}};
  }
  return c;
}

// Five-bone fixture relabelled so that limb sensors observe the torso.
inline dmr::SkinnedCharacter interactingFiveBone() {
  dmr::SkinnedCharacter c = fiveBoneCharacter();
  c.bodyParts = {dmr::BodyPart::Torso, dmr::BodyPart::LeftArm, dmr::BodyPart::Head,
                 dmr::BodyPart::Head,  dmr::BodyPart::LeftLeg, dmr::BodyPart::RightLeg};
  return c;
}

// Same skeleton with the x extent stretched, as a retargeting target.
inline dmr::SkinnedCharacter stretched(dmr::SkinnedCharacter c, double kx) {
  for (auto& v : c.vertices) v.x() *= kx;
  for (auto& j : c.joints) j.x() *= kx;
  return c;
}

inline dmr::MotionSequence randomMotion(const dmr::SkinnedCharacter& c, int frames, std::mt19937_64& rng,
                                        double maxAngle = std::numbers::pi) {
  dmr::MotionSequence m = dmr::MotionSequence::identity(c, frames);
  for (auto& q : m.rotations) q = maxAngle >= std::numbers::pi ? randomQuat(rng) : smallRotation(rng, maxAngle);
  for (auto& x : m.rootTranslation) x = randomVec(rng, 0.5);
  return m;
}

// ---- oracles ---------------------------------------------------------------

using Mat4 = Eigen::Matrix4d;

inline Mat4 homogeneous(const Mat3& r, const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

// Global joint frame as an explicit product over the ancestor chain:
// T(J_root + X) R_root ... T(J_n - J_parent) R_n.
inline Mat4 ancestorProduct(const dmr::SkinnedCharacter& c, const std::vector<Mat3>& local, const Vec3& root,
                            int joint) {
  std::vector<int> chain;
  for (int j = joint; j >= 0; j = c.parents[j]) chain.insert(chain.begin(), j);
  Mat4 g = Mat4::Identity();
  for (int j : chain) {
    const Vec3 offset = c.parents[j] < 0 ? Vec3(c.joints[j] + root) : Vec3(c.joints[j] - c.joints[c.parents[j]]);
    g = g * homogeneous(Mat3::Identity(), offset) * homogeneous(local[j], Vec3::Zero());
  }
  return g;
}

// Closest rotation by Higham's iteration X <- (X + X^-T) / 2, independent of
// the SVD path used by the library.
inline Mat3 highamPolar(Mat3 x) {
  for (int i = 0; i < 100; ++i) {
    const Mat3 next = 0.5 * (x + x.inverse().transpose());
    if ((next - x).norm() < 1e-15) return next;
    x = next;
  }
  return x;
}

struct OracleSensor {
  Vec3 position;
  Mat3 tangent;
};

// Dense LBS of a virtual vertex carrying the sensor's weights.
inline OracleSensor denseLbs(const dmr::SkinnedCharacter& c, const std::vector<Mat3>& local, const Vec3& root,
                             const dmr::SensorFeature& s) {
  Mat4 blended = Mat4::Zero();
  for (const auto& w : s.skinWeights) {
    const Mat4 g = ancestorProduct(c, local, root, w.joint);
    blended += w.weight * g * homogeneous(Mat3::Identity(), -c.joints[w.joint]);
  }
  const Eigen::Vector4d p = blended * Eigen::Vector4d(s.position.x(), s.position.y(), s.position.z(), 1.0);
  return {p.head<3>(), highamPolar(blended.topLeftCorner<3, 3>() * s.tangent)};
}

// Inside test by counting crossings along a fixed oblique ray.
inline bool rayParityInside(const std::vector<dmr::Triangle>& mesh, const Vec3& q) {
  const Vec3 dir = Vec3(0.5773, 0.6124, 0.5402).normalized();
  int crossings = 0;
  for (const auto& tri : mesh) {
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-15) continue;
    const Vec3 s = q - tri.a;
    const double u = s.dot(p) / det;
    const Vec3 qv = s.cross(e1);
    const double v = dir.dot(qv) / det;
    const double t = e2.dot(qv) / det;
    if (u >= 0 && v >= 0 && u + v <= 1 && t > 0) ++crossings;
  }
  return crossings % 2 == 1;
}

// Retargeting problem on the five-bone fixture: source is the relabelled
// fixture, target the same skeleton stretched along x.
inline dmr::RetargetConfig fiveBoneConfig() {
  dmr::RetargetConfig cfg;
  cfg.endEffectors = {2, 3, 5};
  cfg.pairs = 4;
  return cfg;
}

inline dmr::RetargetObjective fiveBoneObjective(const dmr::MotionSequence& source,
                                                const dmr::RetargetConfig& cfg = fiveBoneConfig()) {
  const auto a = interactingFiveBone();
  const auto b = stretched(a, 1.3);
  const auto coords = dmr::coordinateGrid(dmr::boneCount(a));
  const auto setup = dmr::prepareRetarget(source, a, b, coords, cfg);
  return dmr::RetargetObjective(b, setup.targetSensors, setup.sourceField, setup.targetMask, dmr::toParams(source),
                                setup.initialMotion.rootTranslation, cfg);
}

// Central differences of the objective total along every parameter.
inline dmr::MotionParams finiteDifferenceGradient(const dmr::RetargetObjective& f, const dmr::MotionParams& p,
                                                  double eps) {
  dmr::MotionParams g = dmr::MotionParams::zeros(p.frames, p.joints);
  dmr::MotionParams q = p;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    for (int k = 0; k < 6; ++k) {
      q.values[i].cols(k) = p.values[i].cols(k) + eps;
      const double hi = f.evaluate(q).total;
      q.values[i].cols(k) = p.values[i].cols(k) - eps;
      const double lo = f.evaluate(q).total;
      q.values[i].cols(k) = p.values[i].cols(k);
      g.values[i].cols(k) = (hi - lo) / (2.0 * eps);
    }
  }
  return g;
}

// Relative error under 1e-3, or absolute under 1e-6 for components whose
// magnitude is below 1e-4.
inline bool gradientAgrees(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-4) return std::abs(analytic - numeric) < 1e-6;
  return std::abs(analytic - numeric) / scale < 1e-3;
}

// Random 6D parameters away from degenerate column pairs.
inline dmr::MotionParams randomParams(int frames, int joints, std::mt19937_64& rng) {
  dmr::MotionParams p = dmr::MotionParams::zeros(frames, joints);
  for (auto& v : p.values) {
    const Mat3 r = randomRotation(rng);
    v = dmr::encode6d(r);
    std::normal_distribution<double> n(0.0, 0.2);
    for (int k = 0; k < 6; ++k) v.cols(k) += n(rng);
  }
  return p;
}

// Scalar-loop reference kernels.
inline double recOracle(const dmr::MotionParams& b, const dmr::MotionParams& a) {
  double sum = 0.0;
  for (int t = 0; t < a.frames; ++t) {
    for (int j = 0; j < a.joints; ++j) {
      for (int k = 0; k < 6; ++k) {
        const double d = b.at(t, j).cols(k) - a.at(t, j).cols(k);
        sum += d * d;
      }
    }
  }
  return sum / (static_cast<double>(a.frames) * a.joints * 6);
}

inline double dmiOracle(const dmr::DmiField& a, const dmr::DmiField& b) {
  double total = 0.0;
  for (int t = 0; t < a.frames; ++t) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t e = 0; e < a.entries[t].size(); ++e) {
      if (!a.entries[t][e].valid || !b.entries[t][e].valid) continue;
      ++n;
      double dot = 0.0;
      double na = 0.0;
      double nb = 0.0;
      for (int r = 0; r < 3; ++r) {
        dot += a.entries[t][e].d(r) * b.entries[t][e].d(r);
        na += a.entries[t][e].d(r) * a.entries[t][e].d(r);
        nb += b.entries[t][e].d(r) * b.entries[t][e].d(r);
      }
      if (na == 0.0 || nb == 0.0) continue;
      sum += 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    }
    if (n > 0) total += sum / n;
  }
  return total / a.frames;
}

inline double efOracle(const dmr::SkinnedCharacter& c, const dmr::MotionSequence& a, const dmr::MotionSequence& b,
                       const std::vector<int>& effectors) {
  double sum = 0.0;
  for (int t = 0; t < a.frames(); ++t) {
    const auto la = a.frameMatrices(t);
    const auto lb = b.frameMatrices(t);
    for (int i : effectors) {
      const Mat4 ga = ancestorProduct(c, la, Vec3::Zero(), i);
      const Mat4 gb = ancestorProduct(c, lb, Vec3::Zero(), i);
      double f = 0.0;
      for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 3; ++s) f += (ga(r, s) - gb(r, s)) * (ga(r, s) - gb(r, s));
      }
      sum += std::sqrt(f);
    }
  }
  return sum / (static_cast<double>(a.frames()) * effectors.size());
}

}  // namespace fixtures
