#pragma once

// Dense mesh interaction field: sensors are carried through a motion with
// linear blend skinning, then every observer sensor on a limb records the
// positions of selected target sensors in its own tangent frame.

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/kinematics.hpp"
#include "dmr/parallel.hpp"
#include "dmr/scs.hpp"

namespace dmr {

// Posed sensors of a single frame. Invalid sensors are zero.
struct SensorFrame {
  std::vector<Vec3> positions;
  std::vector<Mat3> tangents;
};

struct SensorTrajectory {
  int frames = 0;
  int sensors = 0;
  std::vector<Vec3> positions;  // frame-major, T * S
  std::vector<Mat3> tangents;   // frame-major, T * S
  std::vector<char> valid;      // S, constant over time

  const Vec3& position(int t, int i) const { return positions[static_cast<std::size_t>(t) * sensors + i]; }
  const Mat3& tangent(int t, int i) const { return tangents[static_cast<std::size_t>(t) * sensors + i]; }
};

inline void checkSensorWeights(const SkinnedCharacter& c, const SensorSet& sensors) {
  for (const auto& s : sensors.features) {
    for (const SkinWeight& w : s.skinWeights) {
      if (w.joint < 0 || w.joint >= c.jointCount()) {
        throw DimensionMismatch("sensor skin weight references joint " + std::to_string(w.joint) +
                                " outside the character's " + std::to_string(c.jointCount()) + " joints");
      }
    }
  }
}

// Sensor LBS for one frame: position from the blended affine transform,
// tangent re-orthonormalized to the closest rotation of the blended linear
// part applied to the rest tangent.
inline SensorFrame poseSensors(const SensorSet& sensors, std::span<const RigidTransform> transforms) {
  SensorFrame out;
  out.positions.assign(sensors.size(), Vec3::Zero());
  out.tangents.assign(sensors.size(), Mat3::Zero());
  for (int i = 0; i < sensors.size(); ++i) {
    const SensorFeature& s = sensors.features[i];
    if (!s.valid) continue;
    const BlendedTransform b = blend(transforms, s.skinWeights);
    out.positions[i] = b.apply(s.position);
    out.tangents[i] = closestRotation(b.linear * s.tangent);
  }
  return out;
}

inline SensorTrajectory sensorForwardKinematics(const SkinnedCharacter& c, const SensorSet& sensors,
                                                const MotionSequence& motion, unsigned threads = 1) {
  checkSensorWeights(c, sensors);
  if (motion.jointCount != c.jointCount()) {
    throw DimensionMismatch("sensorForwardKinematics: motion joint count does not match character");
  }
  SensorTrajectory traj;
  traj.frames = motion.frames();
  traj.sensors = sensors.size();
  traj.positions.resize(static_cast<std::size_t>(traj.frames) * traj.sensors);
  traj.tangents.resize(traj.positions.size());
  traj.valid.resize(traj.sensors);
  for (int i = 0; i < traj.sensors; ++i) traj.valid[i] = sensors.features[i].valid;
  parallelFor(traj.frames, threads, [&](std::size_t t) {
    const auto local = motion.frameMatrices(static_cast<int>(t));
    const auto transforms = forwardKinematics(c, local, motion.rootTranslation[t]);
    SensorFrame frame = poseSensors(sensors, transforms);
    std::copy(frame.positions.begin(), frame.positions.end(), traj.positions.begin() + t * traj.sensors);
    std::copy(frame.tangents.begin(), frame.tangents.end(), traj.tangents.begin() + t * traj.sensors);
  });
  return traj;
}

// Body parts each limb observes.
inline std::vector<BodyPart> interactionTargets(BodyPart observer) {
  switch (observer) {
    case BodyPart::LeftArm: return {BodyPart::RightArm, BodyPart::Head, BodyPart::Torso};
    case BodyPart::RightArm: return {BodyPart::LeftArm, BodyPart::Head, BodyPart::Torso};
    case BodyPart::LeftLeg: return {BodyPart::RightLeg, BodyPart::Torso};
    case BodyPart::RightLeg: return {BodyPart::LeftLeg, BodyPart::Torso};
    default: return {};
  }
}

struct ObserverGroups {
  int sensor = 0;
  std::vector<std::vector<int>> groups;  // one list of target sensors per observed body part
};

struct InteractionMask {
  int sensorCount = 0;
  std::vector<ObserverGroups> observers;
  std::vector<char> allowed;  // sensorCount^2, row = observer

  bool contains(int observer, int target) const {
    return allowed[static_cast<std::size_t>(observer) * sensorCount + target] != 0;
  }

  std::size_t pairCount() const { return static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), 1)); }
};

// Observers are the limb sensors valid on `source` (and on `target`, when
// given); each may pair with valid sensors of its interaction groups.
inline InteractionMask buildInteractionMask(const SensorSet& source, const SensorSet* target = nullptr) {
  if (target && target->size() != source.size()) {
    throw DimensionMismatch("buildInteractionMask: sensor sets are not index-aligned");
  }
  const int s = source.size();
  auto usable = [&](int i) { return source.features[i].valid && (!target || target->features[i].valid); };
  InteractionMask mask;
  mask.sensorCount = s;
  mask.allowed.assign(static_cast<std::size_t>(s) * s, 0);
  for (int k = 0; k < s; ++k) {
    const auto targets = interactionTargets(source.parts[k]);
    if (targets.empty() || !usable(k)) continue;
    ObserverGroups obs;
    obs.sensor = k;
    for (BodyPart part : targets) {
      std::vector<int> group;
      for (int j = 0; j < s; ++j) {
        if (j != k && source.parts[j] == part && usable(j)) {
          group.push_back(j);
          mask.allowed[static_cast<std::size_t>(k) * s + j] = 1;
        }
      }
      obs.groups.push_back(std::move(group));
    }
    mask.observers.push_back(std::move(obs));
  }
  return mask;
}

enum class PairSelection {
  PerFrame,     // nearest/furthest recomputed at every frame
  PerSequence,  // chosen once from distances averaged over the sequence
};

// Picks half/half of the nearest and furthest members of `group` under
// `distance`; takes the whole group when it has at most `pairs` members.
// Equal distances resolve to the lower sensor index.
template <class DistanceFn>
std::vector<int> selectFromGroup(const std::vector<int>& group, int pairs, DistanceFn&& distance) {
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(group.size());
  for (int j : group) ranked.emplace_back(distance(j), j);
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  if (static_cast<int>(ranked.size()) <= pairs) {
    for (const auto& r : ranked) out.push_back(r.second);
    return out;
  }
  const int half = pairs / 2;
  for (int i = 0; i < half; ++i) out.push_back(ranked[i].second);
  for (int i = static_cast<int>(ranked.size()) - half; i < static_cast<int>(ranked.size()); ++i) {
    out.push_back(ranked[i].second);
  }
  return out;
}

inline void checkPairCount(int pairs) {
  if (pairs < 2 || pairs % 2 != 0) throw InvalidSpec("pair count L must be even and at least 2");
}

// Targets chosen for every observer (mask.observers order) at frame t.
inline std::vector<std::vector<int>> selectPairs(const SensorTrajectory& traj, const InteractionMask& mask, int t,
                                                 int pairs) {
  checkPairCount(pairs);
  std::vector<std::vector<int>> out(mask.observers.size());
  for (std::size_t o = 0; o < mask.observers.size(); ++o) {
    const int k = mask.observers[o].sensor;
    const Vec3& pk = traj.position(t, k);
    for (const auto& group : mask.observers[o].groups) {
      auto picked = selectFromGroup(group, pairs, [&](int j) { return (traj.position(t, j) - pk).norm(); });
      out[o].insert(out[o].end(), picked.begin(), picked.end());
    }
  }
  return out;
}

inline std::vector<std::vector<int>> selectPairsPerSequence(const SensorTrajectory& traj, const InteractionMask& mask,
                                                            int pairs) {
  checkPairCount(pairs);
  std::vector<std::vector<int>> out(mask.observers.size());
  for (std::size_t o = 0; o < mask.observers.size(); ++o) {
    const int k = mask.observers[o].sensor;
    for (const auto& group : mask.observers[o].groups) {
      auto picked = selectFromGroup(group, pairs, [&](int j) {
        double sum = 0.0;
        for (int t = 0; t < traj.frames; ++t) sum += (traj.position(t, j) - traj.position(t, k)).norm();
        return sum / std::max(1, traj.frames);
      });
      out[o].insert(out[o].end(), picked.begin(), picked.end());
    }
  }
  return out;
}

// Position of sensor j in the tangent frame of sensor i. Tangents are
// rotations, so the inverse is the transpose.
inline Vec3 relativePosition(const Mat3& tangentI, const Vec3& positionI, const Vec3& positionJ) {
  return tangentI.transpose() * (positionJ - positionI);
}

struct DmiEntry {
  int observer = 0;  // sensor index k
  int target = 0;    // sensor index j
  Vec3 d = Vec3::Zero();
  bool valid = true;  // pair admissible on the evaluated character
};

struct DmiField {
  int frames = 0;
  int pairs = 0;  // L
  std::vector<SemanticCoordinate> coordinates;
  std::vector<std::vector<DmiEntry>> entries;  // per frame, grouped by observer

  std::size_t entryCount() const {
    std::size_t n = 0;
    for (const auto& f : entries) n += f.size();
    return n;
  }

  // (d, b_i, b_j, l_i, l_j, phi_i, phi_j)
  std::array<double, 9> feature(const DmiEntry& e) const {
    const auto& ci = coordinates[e.observer];
    const auto& cj = coordinates[e.target];
    return {e.d.x(), e.d.y(), e.d.z(), static_cast<double>(ci.bone), static_cast<double>(cj.bone),
            ci.l,    cj.l,    ci.phi,  cj.phi};
  }
};

inline DmiField computeDmiField(const SensorTrajectory& traj, const InteractionMask& mask,
                                std::span<const SemanticCoordinate> coordinates, int pairs,
                                PairSelection selection = PairSelection::PerFrame, unsigned threads = 1) {
  checkPairCount(pairs);
  DmiField field;
  field.frames = traj.frames;
  field.pairs = pairs;
  field.coordinates.assign(coordinates.begin(), coordinates.end());
  field.entries.resize(traj.frames);
  std::vector<std::vector<int>> fixed;
  if (selection == PairSelection::PerSequence) fixed = selectPairsPerSequence(traj, mask, pairs);
  parallelFor(traj.frames, threads, [&](std::size_t tt) {
    const int t = static_cast<int>(tt);
    const auto chosen = selection == PairSelection::PerFrame ? selectPairs(traj, mask, t, pairs) : fixed;
    auto& out = field.entries[t];
    for (std::size_t o = 0; o < mask.observers.size(); ++o) {
      const int k = mask.observers[o].sensor;
      for (int j : chosen[o]) {
        out.push_back({k, j, relativePosition(traj.tangent(t, k), traj.position(t, k), traj.position(t, j)), true});
      }
    }
  });
  return field;
}

// Evaluates the source field's (t, k, j) triples on another character's
// trajectory. Entries outside `targetMask` are kept for alignment, flagged
// invalid, and carry d = 0.
inline DmiField evaluateTargetDmi(const SensorTrajectory& traj, const DmiField& source,
                                  const InteractionMask& targetMask) {
  if (traj.frames != source.frames) throw DimensionMismatch("evaluateTargetDmi: frame count differs from source");
  if (traj.sensors != targetMask.sensorCount) {
    throw DimensionMismatch("evaluateTargetDmi: trajectory is not index-aligned with the mask");
  }
  DmiField out;
  out.frames = source.frames;
  out.pairs = source.pairs;
  out.coordinates = source.coordinates;
  out.entries.resize(source.frames);
  for (int t = 0; t < source.frames; ++t) {
    out.entries[t].reserve(source.entries[t].size());
    for (const DmiEntry& e : source.entries[t]) {
      DmiEntry m{e.observer, e.target, Vec3::Zero(), targetMask.contains(e.observer, e.target)};
      if (m.valid) m.d = relativePosition(traj.tangent(t, e.observer), traj.position(t, e.observer),
                                          traj.position(t, e.target));
      out.entries[t].push_back(m);
    }
  }
  return out;
}

}  // namespace dmr
