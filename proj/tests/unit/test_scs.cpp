#include <gtest/gtest.h>

#include <numbers>

#include "fixtures.hpp"

namespace {

using dmr::Mat3;
using dmr::SemanticCoordinate;
using dmr::Vec3;

constexpr double kPi = std::numbers::pi;

TEST(CoordinateGrid, DefaultHas288Coordinates) { EXPECT_EQ(dmr::defaultCoordinateGrid(18).size(), 288u); }

TEST(CoordinateGrid, SingleBoneHas16) { EXPECT_EQ(dmr::coordinateGrid(1).size(), 16u); }

TEST(CoordinateGrid, CornersAppearExactlyOnce) {
  const auto grid = dmr::defaultCoordinateGrid(18);
  EXPECT_EQ(std::count(grid.begin(), grid.end(), SemanticCoordinate{0, 0.0, 0.0}), 1);
  EXPECT_EQ(std::count(grid.begin(), grid.end(), SemanticCoordinate{17, 0.75, 1.5 * kPi}), 1);
}

TEST(CoordinateGrid, RejectsEmptyDimensions) { EXPECT_THROW(dmr::coordinateGrid(0), dmr::InvalidSpec); }

TEST(BoneMesh, SingleBoneCylinderIsWholeMesh) {
  const auto c = fixtures::cylinderCharacter(0.1, 16);
  EXPECT_EQ(dmr::boneMesh(c, 0).size(), c.faces.size());
}

TEST(BoneMesh, HardSplitCapsulesGiveEachBoneItsHalf) {
  dmr::SkinnedCharacter c;
  c.joints = {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 2, 0)};
  c.parents = {-1, 0, 1};
  c.jointNames = {"a", "b", "c"};
  c.bodyParts = {dmr::BodyPart::LeftArm, dmr::BodyPart::LeftArm, dmr::BodyPart::LeftArm};
  c.forward = Vec3::UnitZ();
  dmr::detail::MeshBuilder mb(c);
  mb.capsule(c.joints[0], c.joints[1], 0.1, 0, 12, 3, 0.2);
  const std::size_t lower = c.faces.size();
  mb.capsule(c.joints[1], c.joints[2], 0.1, 1, 12, 3, 0.2);
  const auto first = dmr::boneMesh(c, 0);
  const auto second = dmr::boneMesh(c, 1);
  ASSERT_EQ(first.size(), lower);
  ASSERT_EQ(second.size(), c.faces.size() - lower);
  for (const auto& t : first) EXPECT_LT(static_cast<std::size_t>(t.face), lower);
  for (const auto& t : second) EXPECT_GE(static_cast<std::size_t>(t.face), lower);
}

TEST(BoneMesh, BipedForearmMatchesExhaustiveScan) {
  const auto c = dmr::makeBiped({});
  const int elbow = *c.findJoint("l_elbow");
  const auto bs = dmr::bones(c);
  int bone = -1;
  for (int b = 0; b < static_cast<int>(bs.size()); ++b) {
    if (bs[b].parent == elbow) bone = b;
  }
  ASSERT_GE(bone, 0);
  std::size_t expected = 0;
  for (const auto& f : c.faces) {
    bool all = true;
    for (int v : f) {
      double best = -1;
      int arg = -1;
      for (const auto& w : c.skinWeights[v]) {
        if (w.weight > best) {
          best = w.weight;
          arg = w.joint;
        }
      }
      all = all && arg == elbow;
    }
    expected += all ? 1 : 0;
  }
  EXPECT_GT(expected, 0u);
  EXPECT_EQ(dmr::boneMesh(c, bone).size(), expected);
}

TEST(BoneMesh, ThresholdRuleUsesWeightFloor) {
  auto c = fixtures::fiveBoneCharacter();
  dmr::BoneMeshRule rule;
  rule.mode = dmr::BoneMeshRule::Mode::Threshold;
  rule.threshold = 0.4;
  const auto threshold = dmr::boneMesh(c, 0, rule);
  const auto argmax = dmr::boneMesh(c, 0);
  EXPECT_GE(threshold.size(), argmax.size());
}

TEST(BoneMesh, EmptyBoneThrows) {
  auto c = fixtures::cylinderCharacter(0.1, 8);
  c.joints.push_back(Vec3(0, 2, 0));
  c.parents.push_back(1);
  c.jointNames.push_back("extra");
  c.bodyParts.push_back(dmr::BodyPart::Torso);
  EXPECT_THROW(dmr::boneMesh(c, 1), dmr::EmptySubmesh);
}

TEST(DeriveSensor, CylinderFrontAndBack) {
  const auto c = fixtures::cylinderCharacter(0.1, 64);
  const auto front = dmr::deriveSensor(c, {0, 0.5, 0.0});
  ASSERT_TRUE(front.valid);
  EXPECT_LT((front.position - Vec3(0, 0.5, 0.1)).norm(), 1e-12);
  const auto back = dmr::deriveSensor(c, {0, 0.5, kPi});
  ASSERT_TRUE(back.valid);
  EXPECT_LT((back.position - Vec3(0, 0.5, -0.1)).norm(), 1e-12);
}

TEST(DeriveSensor, CylinderGridMatchesAnalyticPoints) {
  const double r = 0.1;
  const auto c = fixtures::cylinderCharacter(r, 64);
  const auto coords = dmr::coordinateGrid(1, 8, 32);
  const auto set = dmr::deriveSensors(c, coords);
  for (int i = 0; i < set.size(); ++i) {
    const auto& coord = set.coordinates[i];
    // forward x bone = z x y = -x
    const Vec3 expected(-r * std::sin(coord.phi), coord.l, r * std::cos(coord.phi));
    ASSERT_TRUE(set.features[i].valid);
    EXPECT_LT((set.features[i].position - expected).norm(), 1e-3);
  }
}

TEST(DeriveSensor, EmptyBoneGivesZeroInvalidSensor) {
  auto c = fixtures::cylinderCharacter(0.1, 8);
  c.joints.push_back(Vec3(0, 2, 0));
  c.parents.push_back(1);
  c.jointNames.push_back("extra");
  c.bodyParts.push_back(dmr::BodyPart::Torso);
  const auto s = dmr::deriveSensor(c, {1, 0.5, 0.0});
  EXPECT_FALSE(s.valid);
  EXPECT_TRUE(s.position.isZero(0.0));
  EXPECT_TRUE(s.tangent.isZero(0.0));
  EXPECT_TRUE(s.skinWeights.empty());
}

TEST(TangentFrame, AxisAlignedFace) {
  const dmr::Triangle face{Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1), 0};
  const Mat3 t = dmr::tangentFrame(face, Vec3(0.2, 0.2, 1), Vec3::Zero(), Vec3::UnitY(), Vec3::UnitZ());
  EXPECT_LT((t.col(0) - Vec3(0, 1, 0)).norm(), 1e-15);
  EXPECT_LT((t.col(1) - Vec3(-1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((t.col(2) - Vec3(0, 0, 1)).norm(), 1e-15);
}

TEST(TangentFrame, NormalPointsAwayFromRayOrigin) {
  // Same face wound the other way: normal still ends up +Z.
  const dmr::Triangle face{Vec3(0, 0, 1), Vec3(0, 1, 1), Vec3(1, 0, 1), 0};
  const Mat3 t = dmr::tangentFrame(face, Vec3(0.2, 0.2, 1), Vec3::Zero(), Vec3::UnitY(), Vec3::UnitZ());
  EXPECT_GT(t.col(2).z(), 0.99);
}

TEST(TangentFrame, DegenerateBoneFallsBackToOrthonormalFrame) {
  const dmr::Triangle face{Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1), 0};
  const Mat3 t = dmr::tangentFrame(face, Vec3(0.2, 0.2, 1), Vec3::Zero(), Vec3::UnitZ(), Vec3::UnitY());
  EXPECT_LT((t.transpose() * t - Mat3::Identity()).norm(), 1e-12);
  EXPECT_NEAR(t.determinant(), 1.0, 1e-12);
}

class BipedSensors : public ::testing::Test {
 protected:
  void SetUp() override {
    biped = dmr::makeBiped({});
    coords = dmr::defaultCoordinateGrid();
    sensors = dmr::deriveSensors(biped, coords);
  }
  dmr::SkinnedCharacter biped;
  std::vector<SemanticCoordinate> coords;
  dmr::SensorSet sensors;
};

TEST_F(BipedSensors, ValidSensorsAreOrthonormalConvexAndOnSurface) {
  const auto mesh = dmr::trianglesOf(biped.vertices, biped.faces);
  const double h = dmr::characterHeight(biped);
  EXPECT_GT(sensors.validCount(), 250);
  for (const auto& s : sensors.features) {
    if (!s.valid) continue;
    EXPECT_LT((s.tangent.transpose() * s.tangent - Mat3::Identity()).norm(), 1e-9);
    EXPECT_NEAR(s.tangent.determinant(), 1.0, 1e-6);
    double sum = 0;
    for (const auto& w : s.skinWeights) {
      EXPECT_GE(w.weight, 0.0);
      sum += w.weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_LT(dmr::distanceToMesh(mesh, s.position), 1e-6 * h);
  }
}

TEST_F(BipedSensors, UniformScaleDoublesPositionsAndKeepsTangents) {
  const auto big = dmr::deriveSensors(fixtures::scaled(biped, 2.0), coords);
  ASSERT_EQ(big.size(), sensors.size());
  for (int i = 0; i < sensors.size(); ++i) {
    ASSERT_EQ(big.features[i].valid, sensors.features[i].valid);
    if (!sensors.features[i].valid) continue;
    EXPECT_LT((big.features[i].position - 2.0 * sensors.features[i].position).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((big.features[i].tangent - sensors.features[i].tangent).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST_F(BipedSensors, SameGridIsIndexAlignedAcrossCharacters) {
  dmr::SyntheticSpec spec;
  spec.armLength = 1.5;
  spec.legWidth = 1.3;
  const auto other = dmr::deriveSensors(dmr::makeBiped(spec), coords);
  ASSERT_EQ(other.size(), sensors.size());
  for (int i = 0; i < other.size(); ++i) {
    EXPECT_EQ(other.coordinates[i], sensors.coordinates[i]);
    EXPECT_EQ(other.features[i].coordinate, coords[i]);
  }
}

TEST_F(BipedSensors, ThreadCountDoesNotChangeOutput) {
  const auto threaded = dmr::deriveSensors(biped, coords, {}, 4);
  for (int i = 0; i < sensors.size(); ++i) {
    EXPECT_EQ(threaded.features[i].valid, sensors.features[i].valid);
    EXPECT_TRUE(threaded.features[i].position == sensors.features[i].position);
    EXPECT_TRUE(threaded.features[i].tangent == sensors.features[i].tangent);
  }
}

// Splits every face into four at edge midpoints.
dmr::SkinnedCharacter subdivide(const dmr::SkinnedCharacter& c) {
  dmr::SkinnedCharacter out = c;
  out.faces.clear();
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (auto it = mid.find(key); it != mid.end()) return it->second;
    out.vertices.push_back(0.5 * (c.vertices[a] + c.vertices[b]));
    std::map<int, double> w;
    for (const auto& s : c.skinWeights[a]) w[s.joint] += 0.5 * s.weight;
    for (const auto& s : c.skinWeights[b]) w[s.joint] += 0.5 * s.weight;
    std::vector<dmr::SkinWeight> ws;
    for (const auto& [j, x] : w) ws.push_back({j, x});
    out.skinWeights.push_back(ws);
    const int id = static_cast<int>(out.vertices.size()) - 1;
    mid.emplace(key, id);
    return id;
  };
  for (const auto& f : c.faces) {
    const int ab = midpoint(f[0], f[1]);
    const int bc = midpoint(f[1], f[2]);
    const int ca = midpoint(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({ab, f[1], bc});
    out.faces.push_back({ca, bc, f[2]});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

TEST(DeriveSensor, ValidityPersistsUnderSubdivision) {
  const auto c = fixtures::cylinderCharacter(0.1, 32);
  const auto fine = subdivide(c);
  const auto coords = dmr::coordinateGrid(1, 4, 16);
  const auto coarse = dmr::deriveSensors(c, coords);
  const auto refined = dmr::deriveSensors(fine, coords);
  const double chord = 0.1 * (1.0 - std::cos(kPi / 32));
  for (int i = 0; i < coarse.size(); ++i) {
    ASSERT_TRUE(coarse.features[i].valid);
    ASSERT_TRUE(refined.features[i].valid);
    EXPECT_LT((coarse.features[i].position - refined.features[i].position).norm(), chord + 1e-12);
  }
}

}  // namespace
