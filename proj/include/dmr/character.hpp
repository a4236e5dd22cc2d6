#pragma once

// Skinned characters and motion sequences.
//
// Conventions: +Y is up, the rest pose is a T-pose facing `forward`
// (default +Z), lengths are meters. Bone b is the edge
// (parent(child), child) where child is the b-th non-root joint in index
// order; the root joint owns no bone.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dmr/errors.hpp"
#include "dmr/rotation.hpp"

namespace dmr {

enum class BodyPart { Torso, Head, LeftArm, RightArm, LeftLeg, RightLeg };

inline constexpr std::array<BodyPart, 6> kAllBodyParts = {
    BodyPart::Torso, BodyPart::Head, BodyPart::LeftArm,
    BodyPart::RightArm, BodyPart::LeftLeg, BodyPart::RightLeg};

inline std::string_view toString(BodyPart p) {
  switch (p) {
    case BodyPart::Torso: return "Torso";
    case BodyPart::Head: return "Head";
    case BodyPart::LeftArm: return "LeftArm";
    case BodyPart::RightArm: return "RightArm";
    case BodyPart::LeftLeg: return "LeftLeg";
    case BodyPart::RightLeg: return "RightLeg";
  }
  return "Torso";
}

inline std::optional<BodyPart> bodyPartFromString(std::string_view s) {
  for (BodyPart p : kAllBodyParts) {
    if (toString(p) == s) return p;
  }
  return std::nullopt;
}

inline bool isArm(BodyPart p) { return p == BodyPart::LeftArm || p == BodyPart::RightArm; }
inline bool isLeg(BodyPart p) { return p == BodyPart::LeftLeg || p == BodyPart::RightLeg; }

struct SkinWeight {
  int joint = 0;
  double weight = 0.0;

  friend bool operator==(const SkinWeight&, const SkinWeight&) = default;
};

using Face = std::array<int, 3>;

struct SkinnedCharacter {
  std::string name;
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> joints;  // rest-pose joint positions
  std::vector<int> parents;  // -1 marks the root
  std::vector<std::string> jointNames;
  std::vector<std::vector<SkinWeight>> skinWeights;  // per vertex
  Vec3 forward = Vec3::UnitZ();
  std::vector<BodyPart> bodyParts;  // per joint

  int jointCount() const { return static_cast<int>(joints.size()); }
  int vertexCount() const { return static_cast<int>(vertices.size()); }

  int root() const {
    for (int i = 0; i < jointCount(); ++i) {
      if (parents[i] < 0) return i;
    }
    return -1;
  }

  std::optional<int> findJoint(std::string_view jointName) const {
    for (int i = 0; i < jointCount(); ++i) {
      if (jointNames[i] == jointName) return i;
    }
    return std::nullopt;
  }
};

struct Bone {
  int parent = 0;  // drives the bone segment; its vertices deform with it
  int child = 0;
};

inline std::vector<Bone> bones(const SkinnedCharacter& c) {
  std::vector<Bone> out;
  for (int j = 0; j < c.jointCount(); ++j) {
    if (c.parents[j] >= 0) out.push_back({c.parents[j], j});
  }
  return out;
}

inline int boneCount(const SkinnedCharacter& c) {
  return static_cast<int>(std::count_if(c.parents.begin(), c.parents.end(),
                                        [](int p) { return p >= 0; }));
}

// Joints ordered so every parent precedes its children.
inline std::vector<int> topologicalOrder(const std::vector<int>& parents) {
  const int n = static_cast<int>(parents.size());
  std::vector<std::vector<int>> children(n);
  std::vector<int> order;
  order.reserve(n);
  for (int j = 0; j < n; ++j) {
    if (parents[j] < 0) {
      order.push_back(j);
    } else if (parents[j] < n) {
      children[parents[j]].push_back(j);
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : children[order[i]]) order.push_back(c);
  }
  return order;
}

// Joint with the largest weight; ties go to the lowest joint index.
inline int dominantJoint(const std::vector<SkinWeight>& weights) {
  int best = -1;
  double bestWeight = -1.0;
  for (const SkinWeight& w : weights) {
    if (w.weight > bestWeight || (w.weight == bestWeight && w.joint < best)) {
      best = w.joint;
      bestWeight = w.weight;
    }
  }
  return best;
}

// Returns a human-readable description of every invariant the character
// breaks. Empty means valid.
inline std::vector<std::string> validateCharacter(const SkinnedCharacter& c) {
  std::vector<std::string> issues;
  auto report = [&](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    issues.push_back(os.str());
  };

  const int n = c.jointCount();
  const int v = c.vertexCount();
  if (n == 0) report("skeleton: no joints");
  if (static_cast<int>(c.parents.size()) != n) report("parents: expected ", n, " entries, got ", c.parents.size());
  if (static_cast<int>(c.jointNames.size()) != n) report("joint_names: expected ", n, " entries, got ", c.jointNames.size());
  if (static_cast<int>(c.bodyParts.size()) != n) report("body_parts: expected ", n, " entries, got ", c.bodyParts.size());
  if (static_cast<int>(c.skinWeights.size()) != v) report("skin_weights: expected ", v, " entries, got ", c.skinWeights.size());
  if (!issues.empty()) return issues;

  int roots = 0;
  for (int j = 0; j < n; ++j) {
    if (c.parents[j] < 0) {
      ++roots;
    } else if (c.parents[j] >= n) {
      report("parents[", j, "]: index ", c.parents[j], " out of range");
    } else if (c.parents[j] == j) {
      report("hierarchy cycle: joint ", j, " is its own parent");
    }
  }
  if (roots == 0) {
    report("hierarchy cycle: no root joint");
  } else if (roots > 1) {
    report("hierarchy: expected exactly one root, found ", roots);
  }
  if (issues.empty() && static_cast<int>(topologicalOrder(c.parents).size()) != n) {
    report("hierarchy cycle: not every joint is reachable from the root");
  }

  for (std::size_t f = 0; f < c.faces.size(); ++f) {
    const Face& face = c.faces[f];
    bool inRange = true;
    for (int idx : face) inRange = inRange && idx >= 0 && idx < v;
    if (!inRange) {
      report("faces[", f, "]: vertex index out of range");
    } else if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      report("faces[", f, "]: repeated vertex index");
    }
  }

  for (int i = 0; i < v; ++i) {
    double sum = 0.0;
    bool ok = true;
    for (const SkinWeight& w : c.skinWeights[i]) {
      if (w.joint < 0 || w.joint >= n) {
        report("skin_weights[", i, "]: joint index ", w.joint, " out of range");
        ok = false;
      }
      if (!(w.weight >= 0.0)) {
        report("skin_weights[", i, "]: negative weight on vertex ", i);
        ok = false;
      }
      sum += w.weight;
    }
    if (ok && std::abs(sum - 1.0) > 1e-6) {
      report("skin_weights[", i, "]: weights on vertex ", i, " sum to ", sum, ", expected 1");
    }
  }

  if (std::abs(c.forward.norm() - 1.0) > 1e-9) {
    report("forward: norm ", c.forward.norm(), " is not 1");
  }
  for (const Vec3& p : c.vertices) {
    if (!p.allFinite()) {
      report("vertices: non-finite coordinate");
      break;
    }
  }
  return issues;
}

inline void requireValid(const SkinnedCharacter& c) {
  auto issues = validateCharacter(c);
  if (!issues.empty()) throw InvariantViolation(issues.front());
}

// Rest-pose extent along +Y.
inline double characterHeight(const SkinnedCharacter& c) {
  if (c.vertices.empty()) throw EmptyMesh("characterHeight: character has no vertices");
  double lo = c.vertices.front().y();
  double hi = lo;
  for (const Vec3& p : c.vertices) {
    lo = std::min(lo, p.y());
    hi = std::max(hi, p.y());
  }
  return hi - lo;
}

inline bool sameTopology(const SkinnedCharacter& a, const SkinnedCharacter& b) {
  return a.parents == b.parents;
}

// Per-frame root translation (offset from the rest root position) and local
// joint rotations, frame-major.
struct MotionSequence {
  double fps = 30.0;
  int jointCount = 0;
  std::vector<std::string> jointNames;
  std::vector<Vec3> rootTranslation;  // T entries
  std::vector<Quat> rotations;        // T * jointCount entries

  int frames() const { return static_cast<int>(rootTranslation.size()); }

  const Quat& rotation(int t, int joint) const { return rotations[static_cast<std::size_t>(t) * jointCount + joint]; }
  Quat& rotation(int t, int joint) { return rotations[static_cast<std::size_t>(t) * jointCount + joint]; }

  std::vector<Mat3> frameMatrices(int t) const {
    std::vector<Mat3> out(jointCount);
    for (int j = 0; j < jointCount; ++j) out[j] = toMatrix(rotation(t, j));
    return out;
  }

  static MotionSequence identity(const SkinnedCharacter& c, int frames, double fps = 30.0) {
    MotionSequence m;
    m.fps = fps;
    m.jointCount = c.jointCount();
    m.jointNames = c.jointNames;
    m.rootTranslation.assign(frames, Vec3::Zero());
    m.rotations.assign(static_cast<std::size_t>(frames) * c.jointCount(), Quat::Identity());
    return m;
  }
};

inline std::vector<std::string> validateMotion(const MotionSequence& m) {
  std::vector<std::string> issues;
  if (m.frames() < 1) issues.push_back("motion: needs at least one frame");
  if (m.rotations.size() != static_cast<std::size_t>(m.frames()) * m.jointCount) {
    issues.push_back("motion: rotation count does not equal frames x joints");
    return issues;
  }
  if (!(m.fps > 0.0)) issues.push_back("motion: fps must be positive");
  for (std::size_t i = 0; i < m.rotations.size(); ++i) {
    if (std::abs(m.rotations[i].norm() - 1.0) > 1e-6) {
      std::ostringstream os;
      os << "rotations: quaternion at frame " << i / std::max(1, m.jointCount) << ", joint "
         << i % std::max(1, m.jointCount) << " is not unit norm";
      issues.push_back(os.str());
      break;
    }
  }
  for (const Vec3& x : m.rootTranslation) {
    if (!x.allFinite()) {
      issues.push_back("root_translation: non-finite value");
      break;
    }
  }
  return issues;
}

inline std::vector<std::string> validateBinding(const MotionSequence& m, const SkinnedCharacter& c) {
  std::vector<std::string> issues = validateMotion(m);
  if (m.jointCount != c.jointCount()) {
    std::ostringstream os;
    os << "motion: " << m.jointCount << " joints but character has " << c.jointCount();
    issues.push_back(os.str());
  } else if (!m.jointNames.empty() && m.jointNames != c.jointNames) {
    issues.push_back("motion: joint names do not match the character");
  }
  return issues;
}

}  // namespace dmr
