#pragma once

// Parametric biped fixtures: box torso, sphere head, capsule limbs, hard
// skin weights, 18 body bones. Motions are built from wrist targets with
// two-bone IK so contacts happen where intended.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/rotation.hpp"

namespace dmr {

struct SyntheticSpec {
  // Multipliers relative to the default biped.
  double armLength = 1.0;
  double armWidth = 1.0;
  double legLength = 1.0;
  double legWidth = 1.0;
  double torsoWidth = 1.0;
  int frames = 24;
  double fps = 30.0;
  int segments = 16;  // facets around every limb

  void validate() const {
    for (double m : {armLength, armWidth, legLength, legWidth, torsoWidth}) {
      if (!(m > 0.0) || !std::isfinite(m)) throw InvalidSpec("synthetic spec: multipliers must be positive");
    }
    if (frames < 1) throw InvalidSpec("synthetic spec: frames must be at least 1");
    if (!(fps > 0.0)) throw InvalidSpec("synthetic spec: fps must be positive");
    if (segments < 3) throw InvalidSpec("synthetic spec: segments must be at least 3");
  }
};

// Joint indices of the synthetic biped.
namespace biped {
enum Joint : int {
  Hips, Spine, Chest, Head, HeadTop,
  LShoulder, LElbow, LWrist, LHandTip,
  RShoulder, RElbow, RWrist, RHandTip,
  LHip, LKnee, LAnkle,
  RHip, RKnee, RAnkle,
  Count
};
}  // namespace biped

// Geometry a motion builder needs to place contacts.
struct BipedLayout {
  double torsoHalfWidth = 0.17;
  double torsoHalfDepth = 0.10;
  double armRadius = 0.04;
  double handRadius = 0.035;
  double legRadius = 0.06;
  double headRadius = 0.12;
};

namespace detail {

class MeshBuilder {
 public:
  explicit MeshBuilder(SkinnedCharacter& c) : c_(c) {}

  int vertex(const Vec3& p, int joint) {
    c_.vertices.push_back(p);
    c_.skinWeights.push_back({{joint, 1.0}});
    return c_.vertexCount() - 1;
  }

  void triangle(int a, int b, int c) {
    if (a == b || b == c || a == c) return;
    c_.faces.push_back({a, b, c});
  }

  // Closed capsule around segment a->b (a == b gives a sphere around
  // `axisHint`). Outward winding.
  void capsule(const Vec3& a, const Vec3& b, double radius, int joint, int segments, int capRings,
               double ringSpacing, const Vec3& axisHint = Vec3::UnitY()) {
    const double len = (b - a).norm();
    const Vec3 w = len > 1e-12 ? Vec3((b - a) / len) : axisHint.normalized();
    const Vec3 e1 = w.unitOrthogonal();
    const Vec3 e2 = w.cross(e1);
    std::vector<std::pair<Vec3, double>> rings;  // center, ring radius
    for (int i = 1; i <= capRings; ++i) {
      const double th = 0.5 * std::numbers::pi * i / capRings;
      rings.emplace_back(a - radius * std::cos(th) * w, radius * std::sin(th));
    }
    const int inner = std::max(0, static_cast<int>(std::ceil(len / ringSpacing)) - 1);
    for (int i = 1; i <= inner; ++i) rings.emplace_back(a + (len * i / (inner + 1)) * w, radius);
    if (len > 1e-12) rings.emplace_back(b, radius);
    for (int i = capRings - 1; i >= 1; --i) {
      const double th = 0.5 * std::numbers::pi * i / capRings;
      rings.emplace_back(b + radius * std::cos(th) * w, radius * std::sin(th));
    }

    const int bottom = vertex(a - radius * w, joint);
    std::vector<std::vector<int>> ids;
    for (const auto& [center, r] : rings) {
      std::vector<int> ring;
      for (int k = 0; k < segments; ++k) {
        const double al = 2.0 * std::numbers::pi * k / segments;
        ring.push_back(vertex(center + r * (std::cos(al) * e1 + std::sin(al) * e2), joint));
      }
      ids.push_back(std::move(ring));
    }
    const int top = vertex(b + radius * w, joint);

    for (int k = 0; k < segments; ++k) {
      const int k1 = (k + 1) % segments;
      triangle(bottom, ids.front()[k1], ids.front()[k]);
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        triangle(ids[i][k], ids[i][k1], ids[i + 1][k1]);
        triangle(ids[i][k], ids[i + 1][k1], ids[i + 1][k]);
      }
      triangle(ids.back()[k], ids.back()[k1], top);
    }
  }

  // Axis-aligned closed box on a lattice. Faces are split into horizontal
  // bands; every band is skinned to one joint. `bands` holds (top y, joint)
  // in ascending order; seam vertices are duplicated per joint.
  void bandedBox(const Vec3& lo, const Vec3& hi, double step, const std::vector<std::pair<double, int>>& bands) {
    auto axis = [&](double a, double b, std::vector<double> breaks) {
      std::vector<double> out;
      breaks.push_back(b);
      double start = a;
      for (double end : breaks) {
        const int n = std::max(1, static_cast<int>(std::ceil((end - start) / step - 1e-9)));
        for (int i = 0; i < n; ++i) out.push_back(start + (end - start) * i / n);
        start = end;
      }
      out.push_back(b);
      return out;
    };
    std::vector<double> yBreaks;
    for (std::size_t i = 0; i + 1 < bands.size(); ++i) yBreaks.push_back(bands[i].first);
    const std::vector<double> xs = axis(lo.x(), hi.x(), {});
    const std::vector<double> ys = axis(lo.y(), hi.y(), yBreaks);
    const std::vector<double> zs = axis(lo.z(), hi.z(), {});
    auto jointAt = [&](double y) {
      for (const auto& [top, joint] : bands) {
        if (y < top) return joint;
      }
      return bands.back().second;
    };

    std::map<std::tuple<int, int, int, int>, int> lattice;
    auto at = [&](int ix, int iy, int iz, int joint) {
      const auto key = std::make_tuple(ix, iy, iz, joint);
      auto it = lattice.find(key);
      if (it != lattice.end()) return it->second;
      const int id = vertex(Vec3(xs[ix], ys[iy], zs[iz]), joint);
      lattice.emplace(key, id);
      return id;
    };
    // A face is a grid over two lattice axes (u, v) with u x v = outward normal.
    enum Axis { X, Y, Z };
    struct BoxFace {
      Axis fixed;
      int side;  // 0 = low, 1 = high
      Axis u;
      Axis v;
    };
    const BoxFace faces[] = {{X, 1, Y, Z}, {X, 0, Z, Y}, {Y, 1, Z, X}, {Y, 0, X, Z}, {Z, 1, X, Y}, {Z, 0, Y, X}};
    const std::vector<double>* lists[] = {&xs, &ys, &zs};
    for (const BoxFace& f : faces) {
      const int fixedIndex = f.side ? static_cast<int>(lists[f.fixed]->size()) - 1 : 0;
      const int nu = static_cast<int>(lists[f.u]->size());
      const int nv = static_cast<int>(lists[f.v]->size());
      for (int i = 0; i + 1 < nu; ++i) {
        for (int k = 0; k + 1 < nv; ++k) {
          auto index = [&](int du, int dv) {
            int idx[3];
            idx[f.fixed] = fixedIndex;
            idx[f.u] = i + du;
            idx[f.v] = k + dv;
            return std::array<int, 3>{idx[0], idx[1], idx[2]};
          };
          const auto c00 = index(0, 0);
          const auto c11 = index(1, 1);
          const int joint = jointAt(0.5 * (ys[c00[1]] + ys[c11[1]]));
          auto id = [&](int du, int dv) {
            const auto c = index(du, dv);
            return at(c[0], c[1], c[2], joint);
          };
          triangle(id(0, 0), id(1, 0), id(1, 1));
          triangle(id(0, 0), id(1, 1), id(0, 1));
        }
      }
    }
  }

 private:
  SkinnedCharacter& c_;
};

}  // namespace detail

inline BipedLayout bipedLayout(const SyntheticSpec& spec) {
  BipedLayout l;
  l.torsoHalfWidth *= spec.torsoWidth;
  l.armRadius *= spec.armWidth;
  l.handRadius *= spec.armWidth;
  l.legRadius *= spec.legWidth;
  return l;
}

inline SkinnedCharacter makeBiped(const SyntheticSpec& spec, std::string name = "synthetic_biped") {
  spec.validate();
  using namespace biped;
  const BipedLayout lay = bipedLayout(spec);

  const double ankleY = lay.legRadius + 0.02;
  const double shin = 0.42 * spec.legLength;
  const double thigh = 0.40 * spec.legLength;
  const double hipY = ankleY + shin + thigh;
  const double hipsY = hipY + 0.05;
  const double torsoBottom = hipsY - 0.07;
  const double spineY = hipsY + 0.17;
  const double chestY = hipsY + 0.33;
  const double headY = hipsY + 0.50;  // neck base, top of the torso box
  const double headCenter = headY + 0.11;
  const double hipX = std::max(0.09 * spec.torsoWidth, lay.legRadius + 0.02);
  const double shoulderX = lay.torsoHalfWidth + lay.armRadius + 0.01;
  const double shoulderY = headY - 0.05;
  const double upperArm = 0.28 * spec.armLength;
  const double forearm = 0.25 * spec.armLength;
  const double hand = 0.17 * spec.armLength;

  SkinnedCharacter c;
  c.name = std::move(name);
  c.forward = Vec3::UnitZ();
  c.joints.resize(Count);
  c.parents.resize(Count);
  c.jointNames.resize(Count);
  c.bodyParts.resize(Count);
  auto joint = [&](Joint j, const char* jname, int parent, const Vec3& p, BodyPart part) {
    c.joints[j] = p;
    c.parents[j] = parent;
    c.jointNames[j] = jname;
    c.bodyParts[j] = part;
  };
  joint(Hips, "hips", -1, {0, hipsY, 0}, BodyPart::Torso);
  joint(Spine, "spine", Hips, {0, spineY, 0}, BodyPart::Torso);
  joint(Chest, "chest", Spine, {0, chestY, 0}, BodyPart::Torso);
  joint(Head, "head", Chest, {0, headY, 0}, BodyPart::Head);
  joint(HeadTop, "head_top", Head, {0, headCenter + lay.headRadius, 0}, BodyPart::Head);
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const BodyPart arm = side == 0 ? BodyPart::LeftArm : BodyPart::RightArm;
    const BodyPart leg = side == 0 ? BodyPart::LeftLeg : BodyPart::RightLeg;
    const int o = side == 0 ? 0 : 4;
    const int lo = side == 0 ? 0 : 3;
    const std::string pre = side == 0 ? "l_" : "r_";
    joint(static_cast<Joint>(LShoulder + o), "", Chest, {sx * shoulderX, shoulderY, 0}, arm);
    joint(static_cast<Joint>(LElbow + o), "", LShoulder + o, {sx * (shoulderX + upperArm), shoulderY, 0}, arm);
    joint(static_cast<Joint>(LWrist + o), "", LElbow + o, {sx * (shoulderX + upperArm + forearm), shoulderY, 0}, arm);
    joint(static_cast<Joint>(LHandTip + o), "", LWrist + o,
          {sx * (shoulderX + upperArm + forearm + hand), shoulderY, 0}, arm);
    joint(static_cast<Joint>(LHip + lo), "", Hips, {sx * hipX, hipY, 0}, leg);
    joint(static_cast<Joint>(LKnee + lo), "", LHip + lo, {sx * hipX, hipY - thigh, 0}, leg);
    joint(static_cast<Joint>(LAnkle + lo), "", LKnee + lo, {sx * hipX, ankleY, 0}, leg);
    c.jointNames[LShoulder + o] = pre + "shoulder";
    c.jointNames[LElbow + o] = pre + "elbow";
    c.jointNames[LWrist + o] = pre + "wrist";
    c.jointNames[LHandTip + o] = pre + "hand_tip";
    c.jointNames[LHip + lo] = pre + "hip";
    c.jointNames[LKnee + lo] = pre + "knee";
    c.jointNames[LAnkle + lo] = pre + "ankle";
  }

  detail::MeshBuilder mb(c);
  const int segs = spec.segments;
  mb.bandedBox({-lay.torsoHalfWidth, torsoBottom, -lay.torsoHalfDepth},
               {lay.torsoHalfWidth, headY, lay.torsoHalfDepth}, 0.04,
               {{spineY, Hips}, {chestY, Spine}, {headY, Chest}});
  mb.capsule({0, headCenter, 0}, {0, headCenter, 0}, lay.headRadius, Head, segs, 6, 1.0);
  for (int side = 0; side < 2; ++side) {
    const int o = side == 0 ? 0 : 4;
    const int lo = side == 0 ? 0 : 3;
    mb.capsule(c.joints[LShoulder + o], c.joints[LElbow + o], lay.armRadius, LShoulder + o, segs, 4, 0.03);
    mb.capsule(c.joints[LElbow + o], c.joints[LWrist + o], lay.armRadius, LElbow + o, segs, 4, 0.03);
    mb.capsule(c.joints[LWrist + o], c.joints[LHandTip + o], lay.handRadius, LWrist + o, segs, 4, 0.03);
    mb.capsule(c.joints[LHip + lo], c.joints[LKnee + lo], lay.legRadius, LHip + lo, segs, 3, 0.08);
    mb.capsule(c.joints[LKnee + lo], c.joints[LAnkle + lo], lay.legRadius, LKnee + lo, segs, 3, 0.08);
  }
  return c;
}

namespace detail {

// Elbow position for a two-bone chain from `shoulder` reaching `wrist`,
// bending toward `pole`.
inline Vec3 solveElbow(const Vec3& shoulder, const Vec3& wrist, double upper, double lower, const Vec3& pole) {
  Vec3 axis = wrist - shoulder;
  double d = axis.norm();
  axis /= d;
  d = std::clamp(d, std::abs(upper - lower) + 1e-6, upper + lower - 1e-6);
  const double cosA = std::clamp((upper * upper + d * d - lower * lower) / (2.0 * upper * d), -1.0, 1.0);
  Vec3 bend = pole - pole.dot(axis) * axis;
  if (bend.norm() < 1e-9) bend = axis.unitOrthogonal();
  bend.normalize();
  return shoulder + upper * (cosA * axis + std::sqrt(1.0 - cosA * cosA) * bend);
}

inline Mat3 swing(const Vec3& from, const Vec3& to) {
  return Quat::FromTwoVectors(from, to).toRotationMatrix();
}

struct ArmTarget {
  Vec3 wrist;
  Vec3 pole;
  Vec3 handDir;
};

// Writes local rotations for one arm so that its segments follow the target.
inline void poseArm(const SkinnedCharacter& c, int shoulder, const ArmTarget& target, std::vector<Mat3>& local) {
  const int elbow = shoulder + 1;
  const int wrist = shoulder + 2;
  const int tip = shoulder + 3;
  const Vec3 s = c.joints[shoulder];  // torso stays at rest, so the shoulder does too
  const double upper = (c.joints[elbow] - c.joints[shoulder]).norm();
  const double lower = (c.joints[wrist] - c.joints[elbow]).norm();
  const Vec3 e = solveElbow(s, target.wrist, upper, lower, target.pole);
  const Vec3 reach = s + (e - s) + lower * (target.wrist - e).normalized();

  const Mat3 parent = Mat3::Identity();
  const Mat3 gShoulder = swing(parent * (c.joints[elbow] - c.joints[shoulder]).normalized(), (e - s).normalized()) * parent;
  const Mat3 gElbow = swing(gShoulder * (c.joints[wrist] - c.joints[elbow]).normalized(), (reach - e).normalized()) * gShoulder;
  const Mat3 gWrist = swing(gElbow * (c.joints[tip] - c.joints[wrist]).normalized(), target.handDir.normalized()) * gElbow;
  local[shoulder] = parent.transpose() * gShoulder;
  local[elbow] = gShoulder.transpose() * gElbow;
  local[wrist] = gElbow.transpose() * gWrist;
}

inline Vec3 mirror(const Vec3& v) { return {-v.x(), v.y(), v.z()}; }

inline Vec3 bezier(const Vec3& a, const Vec3& b, const Vec3& c, double s) {
  return (1 - s) * (1 - s) * a + 2 * (1 - s) * s * b + s * s * c;
}

inline double easeInOut(double s) { return 0.5 - 0.5 * std::cos(std::numbers::pi * std::clamp(s, 0.0, 1.0)); }

// Left arm hanging about 20 degrees away from the body, so the forearm stays
// more than an arm diameter from the torso.
inline ArmTarget restTarget(const SkinnedCharacter& c) {
  const Vec3 s = c.joints[biped::LShoulder];
  const double reach = (c.joints[biped::LWrist] - c.joints[biped::LShoulder]).norm();
  const Vec3 dir = Vec3(0.34, -0.94, 0.06).normalized();
  return {s + 0.97 * reach * dir, Vec3(0.2, 0.0, -1.0), dir};
}

template <class TargetAt>
MotionSequence buildArmMotion(const SkinnedCharacter& c, int frames, double fps, TargetAt&& leftAt) {
  MotionSequence m = MotionSequence::identity(c, frames, fps);
  for (int t = 0; t < frames; ++t) {
    std::vector<Mat3> local(c.jointCount(), Mat3::Identity());
    const auto [left, right] = leftAt(t);
    poseArm(c, biped::LShoulder, left, local);
    poseArm(c, biped::RShoulder, right, local);
    for (int j = 0; j < c.jointCount(); ++j) m.rotation(t, j) = toQuaternion(local[j]);
  }
  return m;
}

inline std::pair<ArmTarget, ArmTarget> mirrored(const ArmTarget& left) {
  return {left, {mirror(left.wrist), mirror(left.pole), mirror(left.handDir)}};
}

}  // namespace detail

// Hands travel forward and meet at the sternum, palms together and the backs
// of the hands against the chest, at frame T/2.
inline MotionSequence clapMotion(const SkinnedCharacter& c, const BipedLayout& lay, int frames, double fps = 30.0) {
  using namespace detail;
  const ArmTarget rest = restTarget(c);
  const double chestY = c.joints[biped::Chest].y();
  const Vec3 contact(lay.handRadius + 0.002, chestY - 0.08, lay.torsoHalfDepth + lay.armRadius + 0.003);
  const Vec3 via(c.joints[biped::LShoulder].x() + 0.05, chestY - 0.20, lay.torsoHalfDepth + 0.35);
  return buildArmMotion(c, frames, fps, [&](int t) {
    const double s = frames > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / frames) : 1.0;
    ArmTarget left;
    left.wrist = bezier(rest.wrist, via, contact, s);
    left.pole = (1 - s) * rest.pole + s * Vec3(1.0, -0.8, 0.5);
    left.handDir = Vec3(0, -std::cos(std::numbers::pi * s), std::sin(std::numbers::pi * s));
    if (left.handDir.norm() < 1e-9) left.handDir = Vec3::UnitZ();
    return mirrored(left);
  });
}

// Palms pressed together in front of the chest, held through the middle half.
inline MotionSequence prayMotion(const SkinnedCharacter& c, const BipedLayout& lay, int frames, double fps = 30.0) {
  using namespace detail;
  const ArmTarget rest = restTarget(c);
  const double chestY = c.joints[biped::Chest].y();
  const Vec3 hold(lay.handRadius + 0.002, chestY - 0.06, lay.torsoHalfDepth + 0.22);
  const Vec3 via(c.joints[biped::LShoulder].x() + 0.05, chestY - 0.20, lay.torsoHalfDepth + 0.35);
  return buildArmMotion(c, frames, fps, [&](int t) {
    const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.5;
    const double s = easeInOut(std::min({1.0, 4.0 * u, 4.0 * (1.0 - u)}));
    ArmTarget left;
    left.wrist = bezier(rest.wrist, via, hold, s);
    left.pole = (1 - s) * rest.pole + s * Vec3(1.0, -1.0, 0.0);
    left.handDir = Vec3(0, -std::cos(std::numbers::pi * s), std::sin(std::numbers::pi * s));
    if (left.handDir.norm() < 1e-9) left.handDir = Vec3::UnitZ();
    return mirrored(left);
  });
}

// Forearms folded across the chest, left arm closer to the body.
inline MotionSequence crossArmsMotion(const SkinnedCharacter& c, const BipedLayout& lay, int frames,
                                      double fps = 30.0) {
  using namespace detail;
  const ArmTarget restL = restTarget(c);
  const auto [_, restR] = mirrored(restL);
  const double chestY = c.joints[biped::Chest].y();
  const double d = lay.torsoHalfDepth + lay.armRadius;
  const ArmTarget foldL{Vec3(-0.6 * lay.torsoHalfWidth, chestY - 0.10, d + 0.01), Vec3(1.0, -1.0, 0.3),
                        Vec3(-1.0, 0.3, 0.3)};
  const ArmTarget foldR{Vec3(0.6 * lay.torsoHalfWidth, chestY - 0.03, d + 0.09), Vec3(-1.0, -1.0, 0.5),
                        Vec3(1.0, 0.3, 0.3)};
  return buildArmMotion(c, frames, fps, [&](int t) {
    const double u = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.5;
    const double s = easeInOut(std::min({1.0, 3.0 * u, 3.0 * (1.0 - u)}));
    auto mix = [&](const ArmTarget& a, const ArmTarget& b) {
      const Vec3 via = 0.5 * (a.wrist + b.wrist) + Vec3(0, 0, 0.25);
      ArmTarget out;
      out.wrist = bezier(a.wrist, via, b.wrist, s);
      out.pole = (1 - s) * a.pole + s * b.pole;
      out.handDir = ((1 - s) * a.handDir + s * b.handDir).normalized();
      return out;
    };
    return std::make_pair(mix(restL, foldL), mix(restR, foldR));
  });
}

struct SyntheticSet {
  SkinnedCharacter source;
  SkinnedCharacter target;
  MotionSequence clap;
  MotionSequence pray;
  MotionSequence crossArms;
};

// Default biped as source, `spec` multipliers applied to the target; motions
// are authored on the source.
inline SyntheticSet generateSynthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticSpec base;
  base.frames = spec.frames;
  base.fps = spec.fps;
  base.segments = spec.segments;
  SyntheticSet out;
  out.source = makeBiped(base, "synthetic_source");
  out.target = makeBiped(spec, "synthetic_target");
  const BipedLayout lay = bipedLayout(base);
  out.clap = clapMotion(out.source, lay, spec.frames, spec.fps);
  out.pray = prayMotion(out.source, lay, spec.frames, spec.fps);
  out.crossArms = crossArmsMotion(out.source, lay, spec.frames, spec.fps);
  return out;
}

}  // namespace dmr
