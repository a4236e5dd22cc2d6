#pragma once

// Skeletal forward kinematics and linear blend skinning.

#include <span>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/rotation.hpp"

namespace dmr {

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

// Global joint frames: rotation[n] is the accumulated rotation of joint n,
// position[n] its posed location.
struct SkeletonPose {
  std::vector<Mat3> rotation;
  std::vector<Vec3> position;
};

inline SkeletonPose poseSkeleton(const SkinnedCharacter& c, std::span<const Mat3> local,
                                 const Vec3& rootTranslation) {
  const int n = c.jointCount();
  if (static_cast<int>(local.size()) != n) {
    throw DimensionMismatch("poseSkeleton: rotation count does not match joint count");
  }
  SkeletonPose pose;
  pose.rotation.resize(n);
  pose.position.resize(n);
  for (int j : topologicalOrder(c.parents)) {
    const int p = c.parents[j];
    if (p < 0) {
      pose.rotation[j] = local[j];
      pose.position[j] = c.joints[j] + rootTranslation;
    } else {
      pose.rotation[j] = pose.rotation[p] * local[j];
      pose.position[j] = pose.rotation[p] * (c.joints[j] - c.joints[p]) + pose.position[p];
    }
  }
  return pose;
}

// Skinning transform of joint n: maps rest-pose points rigidly attached to
// joint n into the posed frame. G_n(J_n) is the posed joint position.
inline RigidTransform skinningTransform(const SkinnedCharacter& c, const SkeletonPose& pose, int joint) {
  return {pose.rotation[joint], pose.position[joint] - pose.rotation[joint] * c.joints[joint]};
}

inline std::vector<RigidTransform> forwardKinematics(const SkinnedCharacter& c, std::span<const Mat3> local,
                                                     const Vec3& rootTranslation) {
  const SkeletonPose pose = poseSkeleton(c, local, rootTranslation);
  std::vector<RigidTransform> out(c.jointCount());
  for (int j = 0; j < c.jointCount(); ++j) out[j] = skinningTransform(c, pose, j);
  return out;
}

// Weighted affine blend sum_n w_n G_n. The linear part is generally not a
// rotation.
struct BlendedTransform {
  Mat3 linear = Mat3::Zero();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return linear * p + translation; }
};

inline BlendedTransform blend(std::span<const RigidTransform> transforms, std::span<const SkinWeight> weights) {
  BlendedTransform out;
  for (const SkinWeight& w : weights) {
    out.linear += w.weight * transforms[w.joint].rotation;
    out.translation += w.weight * transforms[w.joint].translation;
  }
  return out;
}

inline std::vector<Vec3> skinVertices(const SkinnedCharacter& c, std::span<const RigidTransform> transforms) {
  std::vector<Vec3> out(c.vertexCount());
  for (int i = 0; i < c.vertexCount(); ++i) out[i] = blend(transforms, c.skinWeights[i]).apply(c.vertices[i]);
  return out;
}

// Adjoint of poseSkeleton. gradRotation/gradPosition hold dLoss with
// respect to the global rotations and posed joint positions; they are
// consumed. Returns dLoss with respect to each local rotation matrix.
inline std::vector<Mat3> poseSkeletonBackward(const SkinnedCharacter& c, std::span<const Mat3> local,
                                              const SkeletonPose& pose, std::vector<Mat3>& gradRotation,
                                              std::vector<Vec3>& gradPosition) {
  const int n = c.jointCount();
  std::vector<Mat3> gradLocal(n, Mat3::Zero());
  const std::vector<int> order = topologicalOrder(c.parents);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int j = *it;
    const int p = c.parents[j];
    if (p < 0) {
      gradLocal[j] = gradRotation[j];
      continue;
    }
    // rotation[j] = rotation[p] * local[j]
    gradLocal[j] = pose.rotation[p].transpose() * gradRotation[j];
    gradRotation[p] += gradRotation[j] * local[j].transpose();
    // position[j] = rotation[p] * offset + position[p]
    gradRotation[p] += gradPosition[j] * (c.joints[j] - c.joints[p]).transpose();
    gradPosition[p] += gradPosition[j];
  }
  return gradLocal;
}

}  // namespace dmr
