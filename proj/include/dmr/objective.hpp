#pragma once

// Retargeting objective over the 6D joint rotations of the target motion:
//
//   total = lambdaRec * rec + lambdaDmi * dmi + lambdaEf * ef
//
// dmi: mean over frames of the average (1 - cos) between source and target
//      interaction vectors over the pairs valid on both characters.
// rec: mean squared difference between target and source 6D parameters.
// ef:  mean Frobenius distance between source and target global rotations
//      of the end-effector joints.
//
// The gradient is hand-derived reverse mode through Gram-Schmidt decoding,
// forward kinematics, sensor skinning and the polar projection of tangents.

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/dmi.hpp"
#include "dmr/kinematics.hpp"
#include "dmr/parallel.hpp"
#include "dmr/rotation.hpp"
#include "dmr/scs.hpp"

namespace dmr {

inline constexpr double kNearZeroInteraction = 1e-8;

struct RetargetConfig {
  double lambdaRec = 1.0;
  double lambdaDmi = 5.0;
  double lambdaEf = 1.0;
  // Weight of the adversarial prior term. Kept for parity with the loss
  // definition; there is no motion prior here, so it never contributes.
  double lambdaAdv = 1.0;
  // Optional penalty on |d_B| - |d_A| for every valid pair. Off by default.
  double lambdaMagnitude = 0.0;
  int pairs = 20;
  std::vector<int> endEffectors;  // empty selects defaultEndEffectors()
  PairSelection selection = PairSelection::PerFrame;
};

struct LossBreakdown {
  double dmi = 0.0;
  double rec = 0.0;
  double ef = 0.0;
  double magnitude = 0.0;
  double total = 0.0;
  int validPairCount = 0;
  bool noValidPairs = false;
};

// Hands, feet and head, looked up by common joint names.
inline std::vector<int> defaultEndEffectors(const SkinnedCharacter& c) {
  static const std::vector<std::vector<std::string_view>> kCandidates = {
      {"l_wrist", "LeftHand", "mixamorig:LeftHand", "left_wrist", "lhand"},
      {"r_wrist", "RightHand", "mixamorig:RightHand", "right_wrist", "rhand"},
      {"l_ankle", "LeftFoot", "mixamorig:LeftFoot", "left_ankle", "lfoot"},
      {"r_ankle", "RightFoot", "mixamorig:RightFoot", "right_ankle", "rfoot"},
      {"head", "Head", "mixamorig:Head"},
  };
  std::vector<int> out;
  for (const auto& names : kCandidates) {
    for (std::string_view n : names) {
      if (auto j = c.findJoint(n)) {
        out.push_back(*j);
        break;
      }
    }
  }
  if (out.empty()) throw EmptyEndEffectorSet("no end-effector joint names found on character '" + c.name + "'");
  return out;
}

// Motion rotations as 6D parameters, frame-major.
struct MotionParams {
  int frames = 0;
  int joints = 0;
  std::vector<Rotation6d> values;

  Rotation6d& at(int t, int j) { return values[static_cast<std::size_t>(t) * joints + j]; }
  const Rotation6d& at(int t, int j) const { return values[static_cast<std::size_t>(t) * joints + j]; }

  static MotionParams zeros(int frames, int joints) {
    MotionParams p;
    p.frames = frames;
    p.joints = joints;
    p.values.assign(static_cast<std::size_t>(frames) * joints, Rotation6d{});
    return p;
  }
};

inline MotionParams toParams(const MotionSequence& m) {
  MotionParams p = MotionParams::zeros(m.frames(), m.jointCount);
  for (std::size_t i = 0; i < m.rotations.size(); ++i) p.values[i] = encode6d(m.rotations[i]);
  return p;
}

// Rebuilds a motion from 6D parameters; fps, names and root translation come
// from `shape`.
inline MotionSequence fromParams(const MotionParams& p, const MotionSequence& shape) {
  MotionSequence m = shape;
  m.rotations.resize(p.values.size());
  for (std::size_t i = 0; i < p.values.size(); ++i) m.rotations[i] = toQuaternion(rotation6dToMatrix(p.values[i]));
  return m;
}

inline double recLoss(const MotionParams& b, const MotionParams& a) {
  if (b.frames != a.frames || b.joints != a.joints) throw DimensionMismatch("recLoss: parameter shapes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) sum += (b.values[i].cols - a.values[i].cols).squaredNorm();
  return a.values.empty() ? 0.0 : sum / (6.0 * static_cast<double>(a.values.size()));
}

struct DmiLossValue {
  double value = 0.0;
  double magnitude = 0.0;
  int validPairs = 0;
  bool noValidPairs = false;
};

inline double cosineSimilarity(const Vec3& a, const Vec3& b) { return a.dot(b) / (a.norm() * b.norm()); }

inline DmiLossValue dmiLoss(const DmiField& source, const DmiField& target) {
  if (source.frames != target.frames) throw DimensionMismatch("dmiLoss: frame counts differ");
  DmiLossValue out;
  double sum = 0.0;
  double magnitude = 0.0;
  for (int t = 0; t < source.frames; ++t) {
    const auto& se = source.entries[t];
    const auto& te = target.entries[t];
    if (se.size() != te.size()) throw DimensionMismatch("dmiLoss: fields are not entry-aligned");
    double frameSum = 0.0;
    double frameMag = 0.0;
    int count = 0;
    for (std::size_t e = 0; e < se.size(); ++e) {
      if (!se[e].valid || !te[e].valid) continue;
      ++count;
      const Vec3& a = se[e].d;
      const Vec3& b = te[e].d;
      frameMag += (b.norm() - a.norm()) * (b.norm() - a.norm());
      if (a.norm() < kNearZeroInteraction || b.norm() < kNearZeroInteraction) continue;
      frameSum += 1.0 - cosineSimilarity(a, b);
    }
    out.validPairs += count;
    if (count > 0) {
      sum += frameSum / count;
      magnitude += frameMag / count;
    }
  }
  out.noValidPairs = out.validPairs == 0;
  if (source.frames > 0) {
    out.value = sum / source.frames;
    out.magnitude = magnitude / source.frames;
  }
  return out;
}

// Global rotation of every joint at every frame, frame-major.
inline std::vector<Mat3> globalRotations(const SkinnedCharacter& c, const MotionSequence& m) {
  std::vector<Mat3> out;
  out.reserve(m.rotations.size());
  for (int t = 0; t < m.frames(); ++t) {
    const auto pose = poseSkeleton(c, m.frameMatrices(t), Vec3::Zero());
    out.insert(out.end(), pose.rotation.begin(), pose.rotation.end());
  }
  return out;
}

inline double endEffectorLoss(const SkinnedCharacter& c, const MotionSequence& a, const MotionSequence& b,
                              std::span<const int> effectors) {
  if (effectors.empty()) throw EmptyEndEffectorSet("endEffectorLoss: end-effector set is empty");
  if (a.frames() != b.frames() || a.jointCount != b.jointCount || a.jointCount != c.jointCount()) {
    throw DimensionMismatch("endEffectorLoss: motion shapes differ");
  }
  for (int i : effectors) {
    if (i < 0 || i >= c.jointCount()) throw DimensionMismatch("endEffectorLoss: end-effector index out of range");
  }
  const auto ra = globalRotations(c, a);
  const auto rb = globalRotations(c, b);
  const int n = c.jointCount();
  double sum = 0.0;
  for (int t = 0; t < a.frames(); ++t) {
    for (int i : effectors) sum += (ra[t * n + i] - rb[t * n + i]).norm();
  }
  return sum / (static_cast<double>(a.frames()) * effectors.size());
}

// The objective for one retargeting problem. Holds everything that does not
// change while the target rotations are optimized.
class RetargetObjective {
 public:
  RetargetObjective(SkinnedCharacter target, SensorSet targetSensors, DmiField source, InteractionMask targetMask,
                    MotionParams sourceParams, std::vector<Vec3> rootTranslation, RetargetConfig config)
      : target_(std::move(target)),
        sensors_(std::move(targetSensors)),
        source_(std::move(source)),
        mask_(std::move(targetMask)),
        sourceParams_(std::move(sourceParams)),
        root_(std::move(rootTranslation)),
        config_(std::move(config)) {
    if (config_.endEffectors.empty()) config_.endEffectors = defaultEndEffectors(target_);
    for (int i : config_.endEffectors) {
      if (i < 0 || i >= target_.jointCount()) throw DimensionMismatch("end-effector index out of range");
    }
    if (sourceParams_.joints != target_.jointCount()) {
      throw SkeletonMismatch("source motion joint count does not match the target character");
    }
    if (source_.frames != sourceParams_.frames || static_cast<int>(root_.size()) != sourceParams_.frames) {
      throw DimensionMismatch("source field, source motion and root translation disagree on frame count");
    }
    if (mask_.sensorCount != sensors_.size()) throw DimensionMismatch("target mask is not aligned with sensors");
    checkSensorWeights(target_, sensors_);
    const int n = target_.jointCount();
    sourceGlobal_.resize(static_cast<std::size_t>(frames()) * n);
    for (int t = 0; t < frames(); ++t) {
      std::vector<Mat3> local(n);
      for (int j = 0; j < n; ++j) local[j] = rotation6dToMatrix(sourceParams_.at(t, j));
      const auto pose = poseSkeleton(target_, local, Vec3::Zero());
      std::copy(pose.rotation.begin(), pose.rotation.end(), sourceGlobal_.begin() + static_cast<std::ptrdiff_t>(t) * n);
    }
  }

  int frames() const { return sourceParams_.frames; }
  const RetargetConfig& config() const { return config_; }
  const MotionParams& sourceParams() const { return sourceParams_; }
  const std::vector<Vec3>& rootTranslation() const { return root_; }

  // Loss terms at `params`; fills `gradient` (same shape) when non-null.
  LossBreakdown evaluate(const MotionParams& params, MotionParams* gradient = nullptr, unsigned threads = 1) const {
    if (params.frames != frames() || params.joints != target_.jointCount()) {
      throw DimensionMismatch("objective: parameter shape does not match the problem");
    }
    if (gradient) *gradient = MotionParams::zeros(params.frames, params.joints);
    std::vector<FrameTerms> terms(frames());
    parallelFor(frames(), threads, [&](std::size_t t) { terms[t] = evaluateFrame(params, static_cast<int>(t), gradient); });

    LossBreakdown out;
    const double T = frames();
    for (const FrameTerms& f : terms) {
      out.dmi += f.dmi;
      out.magnitude += f.magnitude;
      out.rec += f.rec;
      out.ef += f.ef;
      out.validPairCount += f.validPairs;
    }
    out.dmi /= T;
    out.magnitude /= T;
    out.rec /= 6.0 * T * target_.jointCount();
    out.ef /= T * static_cast<double>(config_.endEffectors.size());
    out.noValidPairs = out.validPairCount == 0;
    out.total = config_.lambdaRec * out.rec + config_.lambdaDmi * out.dmi + config_.lambdaEf * out.ef +
                config_.lambdaMagnitude * out.magnitude;
    return out;
  }

 private:
  struct FrameTerms {
    double dmi = 0.0;
    double magnitude = 0.0;
    double rec = 0.0;
    double ef = 0.0;
    int validPairs = 0;
  };

  FrameTerms evaluateFrame(const MotionParams& params, int t, MotionParams* gradient) const {
    const int n = target_.jointCount();
    const int s = sensors_.size();
    const double T = frames();
    FrameTerms out;

    std::vector<Mat3> local(n);
    for (int j = 0; j < n; ++j) local[j] = rotation6dToMatrix(params.at(t, j));
    const SkeletonPose pose = poseSkeleton(target_, local, root_[t]);
    std::vector<RigidTransform> transforms(n);
    for (int j = 0; j < n; ++j) transforms[j] = skinningTransform(target_, pose, j);

    std::vector<Vec3> position(s, Vec3::Zero());
    std::vector<PolarFactor> polar(s);
    for (int i = 0; i < s; ++i) {
      const SensorFeature& f = sensors_.features[i];
      if (!f.valid) continue;
      const BlendedTransform b = blend(transforms, f.skinWeights);
      position[i] = b.apply(f.position);
      polar[i] = polarDecompose(b.linear * f.tangent);
    }

    const auto& entries = source_.entries[t];
    int count = 0;
    for (const DmiEntry& e : entries) count += (e.valid && mask_.contains(e.observer, e.target)) ? 1 : 0;
    out.validPairs = count;

    std::vector<Vec3> gradPosition(s, Vec3::Zero());
    std::vector<Mat3> gradTangent(s, Mat3::Zero());
    const double dmiScale = count > 0 ? config_.lambdaDmi / (T * count) : 0.0;
    const double magScale = count > 0 ? config_.lambdaMagnitude / (T * count) : 0.0;
    double frameDmi = 0.0;
    double frameMag = 0.0;
    for (const DmiEntry& e : entries) {
      if (!e.valid || !mask_.contains(e.observer, e.target)) continue;
      const Mat3& tk = polar[e.observer].rotation;
      const Vec3 delta = position[e.target] - position[e.observer];
      const Vec3 b = tk.transpose() * delta;
      const Vec3& a = e.d;
      const double na = a.norm();
      const double nb = b.norm();
      frameMag += (nb - na) * (nb - na);
      Vec3 gb = Vec3::Zero();
      if (magScale != 0.0 && nb > 0.0) gb += magScale * 2.0 * (nb - na) * b / nb;
      if (na >= kNearZeroInteraction && nb >= kNearZeroInteraction) {
        const double cosine = a.dot(b) / (na * nb);
        frameDmi += 1.0 - cosine;
        gb -= dmiScale * (a / (na * nb) - cosine * b / (nb * nb));
      }
      if (!gradient || gb.isZero(0.0)) continue;
      gradTangent[e.observer] += delta * gb.transpose();
      const Vec3 gDelta = tk * gb;
      gradPosition[e.target] += gDelta;
      gradPosition[e.observer] -= gDelta;
    }
    if (count > 0) {
      out.dmi = frameDmi / count;
      out.magnitude = frameMag / count;
    }

    for (int i : config_.endEffectors) {
      const Mat3 diff = pose.rotation[i] - sourceGlobal_[static_cast<std::size_t>(t) * n + i];
      out.ef += diff.norm();
    }
    for (int j = 0; j < n; ++j) out.rec += (params.at(t, j).cols - sourceParams_.at(t, j).cols).squaredNorm();

    if (!gradient) return out;

    std::vector<Mat3> gradRotation(n, Mat3::Zero());
    std::vector<Vec3> gradJoint(n, Vec3::Zero());
    for (int i = 0; i < s; ++i) {
      const SensorFeature& f = sensors_.features[i];
      if (!f.valid) continue;
      if (gradPosition[i].isZero(0.0) && gradTangent[i].isZero(0.0)) continue;
      const Mat3 gradLinear = closestRotationBackward(polar[i], gradTangent[i]) * f.tangent.transpose();
      for (const SkinWeight& w : f.skinWeights) {
        gradRotation[w.joint] += w.weight * (gradLinear + gradPosition[i] * (f.position - target_.joints[w.joint]).transpose());
        gradJoint[w.joint] += w.weight * gradPosition[i];
      }
    }

    const double efScale = config_.lambdaEf / (T * static_cast<double>(config_.endEffectors.size()));
    for (int i : config_.endEffectors) {
      const Mat3 diff = pose.rotation[i] - sourceGlobal_[static_cast<std::size_t>(t) * n + i];
      const double norm = diff.norm();
      if (norm > 1e-12) gradRotation[i] += efScale * diff / norm;
    }

    const auto gradLocal = poseSkeletonBackward(target_, local, pose, gradRotation, gradJoint);
    const double recScale = 2.0 * config_.lambdaRec / (6.0 * T * n);
    for (int j = 0; j < n; ++j) {
      Rotation6d g = rotation6dToMatrixBackward(params.at(t, j), gradLocal[j]);
      g.cols += recScale * (params.at(t, j).cols - sourceParams_.at(t, j).cols);
      gradient->at(t, j) = g;
    }
    return out;
  }

  SkinnedCharacter target_;
  SensorSet sensors_;
  DmiField source_;
  InteractionMask mask_;
  MotionParams sourceParams_;
  std::vector<Vec3> root_;
  RetargetConfig config_;
  std::vector<Mat3> sourceGlobal_;
};

inline LossBreakdown totalObjective(const RetargetConfig& config, const SkinnedCharacter& targetCharacter,
                                    const SensorSet& targetSensors, const MotionParams& params,
                                    const std::vector<Vec3>& rootTranslation, const DmiField& sourceField,
                                    const InteractionMask& targetMask, const MotionParams& sourceParams,
                                    MotionParams* gradient = nullptr) {
  RetargetObjective objective(targetCharacter, targetSensors, sourceField, targetMask, sourceParams, rootTranslation,
                              config);
  return objective.evaluate(params, gradient);
}

}  // namespace dmr
