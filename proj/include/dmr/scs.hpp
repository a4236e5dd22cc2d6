#pragma once

// Semantically consistent sensors: surface points found by casting rays from
// a bone axis at a semantic coordinate (bone, l, phi). The same coordinate
// on two characters yields corresponding surface points, regardless of mesh
// topology.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/mesh.hpp"
#include "dmr/parallel.hpp"

namespace dmr {

struct SemanticCoordinate {
  int bone = 0;
  double l = 0.0;    // ray origin along the bone, [0, 1)
  double phi = 0.0;  // ray direction around the bone, [0, 2pi)

  friend bool operator==(const SemanticCoordinate&, const SemanticCoordinate&) = default;
};

struct SensorFeature {
  Vec3 position = Vec3::Zero();
  Mat3 tangent = Mat3::Zero();  // columns: along-bone tangent, bitangent, outward normal
  bool valid = false;
  std::vector<SkinWeight> skinWeights;
  SemanticCoordinate coordinate;
};

// Index-aligned across characters: sensor i on every character comes from
// coordinates[i].
struct SensorSet {
  std::vector<SemanticCoordinate> coordinates;
  std::vector<SensorFeature> features;
  std::vector<BodyPart> parts;

  int size() const { return static_cast<int>(features.size()); }

  int validCount() const {
    int n = 0;
    for (const auto& f : features) n += f.valid ? 1 : 0;
    return n;
  }
};

inline constexpr int kDefaultBodyBones = 18;

// Cartesian product {0..bones-1} x {k/originSteps} x {2 pi k/directionSteps},
// bone-major.
inline std::vector<SemanticCoordinate> coordinateGrid(int bodyBones, int originSteps = 4, int directionSteps = 4) {
  if (bodyBones < 1 || originSteps < 1 || directionSteps < 1) {
    throw InvalidSpec("coordinateGrid: every grid dimension must be at least 1");
  }
  std::vector<SemanticCoordinate> out;
  out.reserve(static_cast<std::size_t>(bodyBones) * originSteps * directionSteps);
  for (int b = 0; b < bodyBones; ++b) {
    for (int i = 0; i < originSteps; ++i) {
      for (int k = 0; k < directionSteps; ++k) {
        out.push_back({b, static_cast<double>(i) / originSteps, 2.0 * std::numbers::pi * k / directionSteps});
      }
    }
  }
  return out;
}

inline std::vector<SemanticCoordinate> defaultCoordinateGrid(int bodyBones = kDefaultBodyBones) {
  return coordinateGrid(bodyBones, 4, 4);
}

struct BoneMeshRule {
  enum class Mode { Argmax, Threshold };
  Mode mode = Mode::Argmax;
  double threshold = 0.4;
};

namespace detail {

inline double weightFor(const std::vector<SkinWeight>& weights, int joint) {
  double w = 0.0;
  for (const SkinWeight& s : weights) {
    if (s.joint == joint) w += s.weight;
  }
  return w;
}

}  // namespace detail

// Faces driven by the bone's parent joint: every vertex of the face must have
// that joint as its dominant influence (or weight >= threshold).
inline std::vector<Triangle> boneMesh(const SkinnedCharacter& c, int bone, const BoneMeshRule& rule = {}) {
  const auto bs = bones(c);
  if (bone < 0 || bone >= static_cast<int>(bs.size())) {
    throw EmptySubmesh("boneMesh: bone index out of range");
  }
  const int driver = bs[bone].parent;
  std::vector<char> vertexIn(c.vertexCount(), 0);
  for (int v = 0; v < c.vertexCount(); ++v) {
    vertexIn[v] = rule.mode == BoneMeshRule::Mode::Argmax ? dominantJoint(c.skinWeights[v]) == driver
                                                          : detail::weightFor(c.skinWeights[v], driver) >= rule.threshold;
  }
  std::vector<Triangle> out;
  for (std::size_t f = 0; f < c.faces.size(); ++f) {
    const Face& face = c.faces[f];
    if (vertexIn[face[0]] && vertexIn[face[1]] && vertexIn[face[2]]) {
      out.push_back({c.vertices[face[0]], c.vertices[face[1]], c.vertices[face[2]], static_cast<int>(f)});
    }
  }
  if (out.empty()) throw EmptySubmesh("boneMesh: no face is associated with bone " + std::to_string(bone));
  return out;
}

// Frame at a surface point: columns (u, v, n) where n is the face normal
// turned away from `rayOrigin`, u the bone direction projected onto the
// tangent plane and v = n x u. Falls back to the projected forward
// direction when the bone is parallel to the normal.
inline Mat3 tangentFrame(const Triangle& face, const Vec3& point, const Vec3& rayOrigin, const Vec3& boneDir,
                         const Vec3& forward) {
  Vec3 n = face.normal();
  if (n.dot(point - rayOrigin) < 0.0) n = -n;
  Vec3 u = boneDir - boneDir.dot(n) * n;
  if (u.norm() < 1e-9) u = forward - forward.dot(n) * n;
  if (u.norm() < 1e-9) u = n.unitOrthogonal();
  u.normalize();
  const Vec3 v = n.cross(u);
  Mat3 out;
  out.col(0) = u;
  out.col(1) = v;
  out.col(2) = n;
  return out;
}

struct SensorRay {
  Vec3 origin;
  Vec3 direction;
  Vec3 boneDir;
};

inline SensorRay sensorRay(const SkinnedCharacter& c, const SemanticCoordinate& coord) {
  const auto bs = bones(c);
  if (coord.bone < 0 || coord.bone >= static_cast<int>(bs.size())) {
    throw DimensionMismatch("sensorRay: bone index out of range");
  }
  const Vec3& xp = c.joints[bs[coord.bone].parent];
  const Vec3& xc = c.joints[bs[coord.bone].child];
  SensorRay ray;
  ray.origin = (1.0 - coord.l) * xp + coord.l * xc;
  ray.boneDir = (xc - xp).normalized();
  Vec3 fwd = c.forward;
  Vec3 other = fwd.cross(ray.boneDir);
  if (other.norm() < 1e-9) {
    // Bone along the facing direction; pick a reference that is not.
    const Vec3 ref = std::abs(ray.boneDir.dot(Vec3::UnitY())) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
    fwd = (ref - ref.dot(ray.boneDir) * ray.boneDir).normalized();
    other = fwd.cross(ray.boneDir);
  }
  other.normalize();
  ray.direction = (std::cos(coord.phi) * fwd + std::sin(coord.phi) * other).normalized();
  return ray;
}

namespace detail {

inline std::vector<SkinWeight> interpolateWeights(const SkinnedCharacter& c, const Face& face, const Vec3& bary) {
  std::map<int, double> acc;
  for (int k = 0; k < 3; ++k) {
    for (const SkinWeight& w : c.skinWeights[face[k]]) acc[w.joint] += bary(k) * w.weight;
  }
  std::vector<SkinWeight> out;
  double total = 0.0;
  for (const auto& [joint, w] : acc) {
    if (w > 0.0) {
      out.push_back({joint, w});
      total += w;
    }
  }
  for (auto& w : out) w.weight /= total;
  return out;
}

inline SensorFeature castSensor(const SkinnedCharacter& c, const SemanticCoordinate& coord,
                                std::span<const Triangle> submesh) {
  SensorFeature s;
  s.coordinate = coord;
  if (submesh.empty()) return s;
  const SensorRay ray = sensorRay(c, coord);
  const auto hit = rayMeshIntersection(submesh, ray.origin, ray.direction);
  if (!hit) return s;
  s.valid = true;
  s.position = hit->point;
  s.tangent = tangentFrame(submesh[hit->triangle], hit->point, ray.origin, ray.boneDir, c.forward);
  s.skinWeights = interpolateWeights(c, c.faces[hit->face], hit->barycentric);
  return s;
}

}  // namespace detail

// A miss or an empty bone mesh yields an invalid, all-zero sensor.
inline SensorFeature deriveSensor(const SkinnedCharacter& c, const SemanticCoordinate& coord,
                                  const BoneMeshRule& rule = {}) {
  std::vector<Triangle> submesh;
  try {
    submesh = boneMesh(c, coord.bone, rule);
  } catch (const EmptySubmesh&) {
    SensorFeature s;
    s.coordinate = coord;
    return s;
  }
  return detail::castSensor(c, coord, submesh);
}

inline SensorSet deriveSensors(const SkinnedCharacter& c, std::span<const SemanticCoordinate> coords,
                               const BoneMeshRule& rule = {}, unsigned threads = 1) {
  const auto bs = bones(c);
  std::map<int, std::vector<Triangle>> meshes;
  for (const auto& coord : coords) {
    if (coord.bone < 0 || coord.bone >= static_cast<int>(bs.size())) {
      throw DimensionMismatch("deriveSensors: coordinate references bone " + std::to_string(coord.bone) +
                              " but the character has " + std::to_string(bs.size()));
    }
    if (meshes.count(coord.bone)) continue;
    try {
      meshes[coord.bone] = boneMesh(c, coord.bone, rule);
    } catch (const EmptySubmesh&) {
      meshes[coord.bone] = {};
    }
  }
  SensorSet set;
  set.coordinates.assign(coords.begin(), coords.end());
  set.features.resize(coords.size());
  set.parts.resize(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) set.parts[i] = c.bodyParts[bs[coords[i].bone].parent];
  parallelFor(coords.size(), threads,
              [&](std::size_t i) { set.features[i] = detail::castSensor(c, coords[i], meshes.at(coords[i].bone)); });
  return set;
}

}  // namespace dmr
