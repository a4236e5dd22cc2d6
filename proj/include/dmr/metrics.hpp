#pragma once

// Evaluation metrics: height-normalized joint MSE, sensor contact error,
// arm-body penetration ratio, and a per-joint height trace for jitter.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/dmi.hpp"
#include "dmr/kinematics.hpp"
#include "dmr/mesh.hpp"
#include "dmr/parallel.hpp"
#include "dmr/scs.hpp"

namespace dmr {

struct JointMse {
  double global = 0.0;
  double local = 0.0;
  std::vector<double> perFrameGlobal;
  std::vector<double> perFrameLocal;
};

// Squared joint distances averaged over frames and joints, divided by the
// character height. Local positions are taken relative to the root joint.
inline JointMse jointMse(const MotionSequence& groundTruth, const MotionSequence& candidate,
                         const SkinnedCharacter& c) {
  if (groundTruth.frames() != candidate.frames() || groundTruth.jointCount != candidate.jointCount ||
      groundTruth.jointCount != c.jointCount()) {
    throw DimensionMismatch("jointMse: motions and character disagree on frames or joints");
  }
  const double h = characterHeight(c);
  const int n = c.jointCount();
  const int root = c.root();
  JointMse out;
  for (int t = 0; t < groundTruth.frames(); ++t) {
    const auto a = poseSkeleton(c, groundTruth.frameMatrices(t), groundTruth.rootTranslation[t]);
    const auto b = poseSkeleton(c, candidate.frameMatrices(t), candidate.rootTranslation[t]);
    double g = 0.0;
    double l = 0.0;
    for (int j = 0; j < n; ++j) {
      g += (a.position[j] - b.position[j]).squaredNorm();
      l += ((a.position[j] - a.position[root]) - (b.position[j] - b.position[root])).squaredNorm();
    }
    out.perFrameGlobal.push_back(g / (n * h));
    out.perFrameLocal.push_back(l / (n * h));
    out.global += g;
    out.local += l;
  }
  const double count = static_cast<double>(groundTruth.frames()) * n;
  out.global /= count * h;
  out.local /= count * h;
  return out;
}

// Forearm bones: arm bones whose driving joint has an arm parent and whose
// child joint has an arm child (upper arm -> forearm -> hand).
inline std::vector<int> forearmBones(const SkinnedCharacter& c) {
  const auto bs = bones(c);
  std::vector<int> out;
  for (int b = 0; b < static_cast<int>(bs.size()); ++b) {
    const int p = bs[b].parent;
    const int ch = bs[b].child;
    if (!isArm(c.bodyParts[p]) || !isArm(c.bodyParts[ch])) continue;
    const int gp = c.parents[p];
    if (gp < 0 || !isArm(c.bodyParts[gp])) continue;
    bool armChild = false;
    for (int j = 0; j < c.jointCount(); ++j) armChild = armChild || (c.parents[j] == ch && isArm(c.bodyParts[j]));
    if (armChild) out.push_back(b);
  }
  return out;
}

// Forearm bones and every arm bone below them.
inline std::vector<int> handSideBones(const SkinnedCharacter& c) {
  const auto bs = bones(c);
  const auto fore = forearmBones(c);
  std::vector<char> inside(c.jointCount(), 0);
  for (int b : fore) inside[bs[b].parent] = 1;
  for (int j : topologicalOrder(c.parents)) {
    const int p = c.parents[j];
    if (p >= 0 && inside[p] && isArm(c.bodyParts[j])) inside[j] = 1;
  }
  std::vector<int> out;
  for (int b = 0; b < static_cast<int>(bs.size()); ++b) {
    if (inside[bs[b].parent]) out.push_back(b);
  }
  return out;
}

// Mean distance of valid forearm sensors from their rest bone axis.
inline double armRadius(const SkinnedCharacter& c, const SensorSet& sensors) {
  const auto bs = bones(c);
  const auto fore = forearmBones(c);
  double sum = 0.0;
  int count = 0;
  for (const auto& s : sensors.features) {
    if (!s.valid || std::find(fore.begin(), fore.end(), s.coordinate.bone) == fore.end()) continue;
    const Vec3& a = c.joints[bs[s.coordinate.bone].parent];
    const Vec3 axis = (c.joints[bs[s.coordinate.bone].child] - a).normalized();
    const Vec3 rel = s.position - a;
    sum += (rel - rel.dot(axis) * axis).norm();
    ++count;
  }
  if (count == 0) throw NoForearmSensors("armRadius: character '" + c.name + "' has no valid forearm sensors");
  return sum / count;
}

struct ContactErrorResult {
  double value = 0.0;
  int contactPairs = 0;  // (frame, pair) samples in contact in the source
  double radiusA = 0.0;
  double radiusB = 0.0;
  std::vector<double> perFrame;
};

// Penalty for one contact pair given radius-normalized distances.
inline double contactTerm(double sourceDistance, double targetDistance) {
  return targetDistance > sourceDistance ? (sourceDistance - targetDistance) * (sourceDistance - targetDistance) : 0.0;
}

// Hand-body sensor pairs closer than the source arm diameter are contacts.
// A contact accrues (n_A - n_B)^2 when the radius-normalized target distance
// n_B exceeds the source's n_A.
inline ContactErrorResult contactError(const MotionSequence& motionA, const SkinnedCharacter& characterA,
                                       const SensorSet& sensorsA, const MotionSequence& motionB,
                                       const SkinnedCharacter& characterB, const SensorSet& sensorsB,
                                       unsigned threads = 1) {
  if (sensorsA.size() != sensorsB.size()) throw DimensionMismatch("contactError: sensor sets are not index-aligned");
  if (motionA.frames() != motionB.frames()) throw DimensionMismatch("contactError: motions differ in length");
  ContactErrorResult out;
  out.radiusA = armRadius(characterA, sensorsA);
  out.radiusB = armRadius(characterB, sensorsB);
  const double diameter = 2.0 * out.radiusA;

  const auto handBones = handSideBones(characterA);
  std::vector<int> hand;
  std::vector<int> body;
  for (int i = 0; i < sensorsA.size(); ++i) {
    if (!sensorsA.features[i].valid || !sensorsB.features[i].valid) continue;
    const int b = sensorsA.coordinates[i].bone;
    if (std::find(handBones.begin(), handBones.end(), b) != handBones.end()) {
      hand.push_back(i);
    } else if (sensorsA.parts[i] == BodyPart::Torso || sensorsA.parts[i] == BodyPart::Head) {
      body.push_back(i);
    }
  }

  const auto trajA = sensorForwardKinematics(characterA, sensorsA, motionA, threads);
  const auto trajB = sensorForwardKinematics(characterB, sensorsB, motionB, threads);
  std::vector<double> frameSum(motionA.frames(), 0.0);
  std::vector<int> frameCount(motionA.frames(), 0);
  parallelFor(motionA.frames(), threads, [&](std::size_t tt) {
    const int t = static_cast<int>(tt);
    for (int i : hand) {
      for (int j : body) {
        const double da = (trajA.position(t, i) - trajA.position(t, j)).norm();
        if (!(da < diameter)) continue;
        const double na = da / out.radiusA;
        const double nb = (trajB.position(t, i) - trajB.position(t, j)).norm() / out.radiusB;
        frameSum[t] += contactTerm(na, nb);
        ++frameCount[t];
      }
    }
  });
  double sum = 0.0;
  for (int t = 0; t < motionA.frames(); ++t) {
    sum += frameSum[t];
    out.contactPairs += frameCount[t];
    out.perFrame.push_back(frameCount[t] > 0 ? frameSum[t] / frameCount[t] : 0.0);
  }
  out.value = out.contactPairs > 0 ? sum / out.contactPairs : 0.0;
  return out;
}

struct PenetrationResult {
  std::vector<double> perFrame;
  double mean = 0.0;
  int armVertexCount = 0;
};

inline constexpr double kInsideWinding = 0.5;

// Fraction of arm vertices (hands included) whose winding number with
// respect to the posed body mesh exceeds 0.5.
inline PenetrationResult penetrationRatio(const SkinnedCharacter& c, const MotionSequence& motion,
                                          unsigned threads = 1) {
  if (motion.jointCount != c.jointCount()) throw DimensionMismatch("penetrationRatio: motion not bound to character");
  std::vector<char> arm(c.vertexCount(), 0);
  std::vector<int> armVertices;
  for (int v = 0; v < c.vertexCount(); ++v) {
    const int j = dominantJoint(c.skinWeights[v]);
    arm[v] = j >= 0 && isArm(c.bodyParts[j]);
    if (arm[v]) armVertices.push_back(v);
  }
  if (armVertices.empty()) throw EmptyArmSet("penetrationRatio: character '" + c.name + "' has no arm vertices");
  std::vector<Face> bodyFaces;
  for (const Face& f : c.faces) {
    if (!arm[f[0]] && !arm[f[1]] && !arm[f[2]]) bodyFaces.push_back(f);
  }

  PenetrationResult out;
  out.armVertexCount = static_cast<int>(armVertices.size());
  out.perFrame.assign(motion.frames(), 0.0);
  parallelFor(motion.frames(), threads, [&](std::size_t t) {
    const auto transforms = forwardKinematics(c, motion.frameMatrices(static_cast<int>(t)), motion.rootTranslation[t]);
    const auto posed = skinVertices(c, transforms);
    const auto body = trianglesOf(posed, bodyFaces);
    int inside = 0;
    for (int v : armVertices) inside += windingNumber(body, posed[v]) > kInsideWinding ? 1 : 0;
    out.perFrame[t] = static_cast<double>(inside) / armVertices.size();
  });
  for (double r : out.perFrame) out.mean += r;
  out.mean /= std::max(1, motion.frames());
  return out;
}

struct JitterTrace {
  std::vector<double> heights;
  double maxDelta = 0.0;
  int maxDeltaFrame = 0;  // frame t where the largest |h[t] - h[t-1]| lands
};

inline JitterTrace jitterTrace(const MotionSequence& motion, const SkinnedCharacter& c, int joint) {
  if (joint < 0 || joint >= c.jointCount()) throw DimensionMismatch("jitterTrace: joint index out of range");
  JitterTrace out;
  for (int t = 0; t < motion.frames(); ++t) {
    out.heights.push_back(poseSkeleton(c, motion.frameMatrices(t), motion.rootTranslation[t]).position[joint].y());
  }
  for (std::size_t t = 0; t + 1 < out.heights.size(); ++t) {
    const double d = std::abs(out.heights[t + 1] - out.heights[t]);
    if (d > out.maxDelta) {
      out.maxDelta = d;
      out.maxDeltaFrame = static_cast<int>(t) + 1;
    }
  }
  return out;
}

struct MetricReport {
  std::optional<JointMse> mse;  // needs a ground-truth motion
  double contactError = 0.0;
  int contactPairs = 0;
  double penetrationRatio = 0.0;
  std::vector<double> contactPerFrame;
  std::vector<double> penetrationPerFrame;
};

inline MetricReport evaluateMetrics(const MotionSequence& sourceMotion, const SkinnedCharacter& sourceCharacter,
                                    const SensorSet& sourceSensors, const MotionSequence& candidate,
                                    const SkinnedCharacter& targetCharacter, const SensorSet& targetSensors,
                                    const MotionSequence* groundTruth = nullptr, unsigned threads = 1) {
  MetricReport r;
  const auto contact =
      contactError(sourceMotion, sourceCharacter, sourceSensors, candidate, targetCharacter, targetSensors, threads);
  r.contactError = contact.value;
  r.contactPairs = contact.contactPairs;
  r.contactPerFrame = contact.perFrame;
  const auto pen = penetrationRatio(targetCharacter, candidate, threads);
  r.penetrationRatio = pen.mean;
  r.penetrationPerFrame = pen.perFrame;
  if (groundTruth) r.mse = jointMse(*groundTruth, candidate, targetCharacter);
  return r;
}

}  // namespace dmr
