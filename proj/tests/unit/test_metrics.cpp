#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

namespace {

using dmr::Vec3;

// Torso -> shoulder -> elbow -> wrist -> tip along +Y, with a forearm tube
// of the given radius between elbow and wrist.
dmr::SkinnedCharacter armChain(double radius) {
  dmr::SkinnedCharacter c;
  c.name = "arm_chain";
  c.forward = Vec3::UnitZ();
  c.joints = {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 2, 0), Vec3(0, 3, 0), Vec3(0, 4, 0)};
  c.parents = {-1, 0, 1, 2, 3};
  c.jointNames = {"root", "shoulder", "elbow", "wrist", "tip"};
  c.bodyParts = {dmr::BodyPart::Torso, dmr::BodyPart::LeftArm, dmr::BodyPart::LeftArm, dmr::BodyPart::LeftArm,
                 dmr::BodyPart::LeftArm};
  const auto tube = fixtures::cylinderCharacter(radius, 64, 2.0, 3.0, 4);
  c.vertices = tube.vertices;
  c.faces = tube.faces;
  c.skinWeights.assign(c.vertices.size(), {{2, 1.0}});
  return c;
}

TEST(JointMse, IdenticalMotionsAreZero) {
  std::mt19937_64 rng(71);
  const auto c = dmr::makeBiped({});
  const auto m = fixtures::randomMotion(c, 5, rng, 0.5);
  const auto r = dmr::jointMse(m, m, c);
  EXPECT_EQ(r.global, 0.0);
  EXPECT_EQ(r.local, 0.0);
}

TEST(JointMse, GlobalOffsetOnlyAffectsGlobal) {
  std::mt19937_64 rng(72);
  const auto c = dmr::makeBiped({});
  const auto m = fixtures::randomMotion(c, 5, rng, 0.5);
  auto shifted = m;
  const Vec3 v(0.1, -0.2, 0.05);
  for (auto& x : shifted.rootTranslation) x += v;
  const auto r = dmr::jointMse(m, shifted, c);
  EXPECT_NEAR(r.local, 0.0, 1e-20);
  EXPECT_NEAR(r.global, v.squaredNorm() / dmr::characterHeight(c), 1e-12);
}

TEST(JointMse, MatchesAncestorProductOracle) {
  std::mt19937_64 rng(73);
  const auto c = fixtures::fiveBoneCharacter();
  const auto a = fixtures::randomMotion(c, 6, rng);
  const auto b = fixtures::randomMotion(c, 6, rng);
  const double h = dmr::characterHeight(c);
  double g = 0.0;
  double l = 0.0;
  for (int t = 0; t < a.frames(); ++t) {
    const auto la = a.frameMatrices(t);
    const auto lb = b.frameMatrices(t);
    const Vec3 ra = fixtures::ancestorProduct(c, la, a.rootTranslation[t], 0).topRightCorner<3, 1>();
    const Vec3 rb = fixtures::ancestorProduct(c, lb, b.rootTranslation[t], 0).topRightCorner<3, 1>();
    for (int j = 0; j < c.jointCount(); ++j) {
      const Vec3 pa = fixtures::ancestorProduct(c, la, a.rootTranslation[t], j).topRightCorner<3, 1>();
      const Vec3 pb = fixtures::ancestorProduct(c, lb, b.rootTranslation[t], j).topRightCorner<3, 1>();
      g += (pa - pb).squaredNorm();
      l += ((pa - ra) - (pb - rb)).squaredNorm();
    }
  }
  const double n = a.frames() * c.jointCount() * h;
  const auto r = dmr::jointMse(a, b, c);
  EXPECT_NEAR(r.global, g / n, 1e-12);
  EXPECT_NEAR(r.local, l / n, 1e-12);
}

TEST(ArmRadius, ForearmTubeAndScaledTube) {
  const auto c = armChain(0.05);
  const auto coords = dmr::coordinateGrid(dmr::boneCount(c));
  EXPECT_EQ(dmr::forearmBones(c), std::vector<int>{2});
  EXPECT_NEAR(dmr::armRadius(c, dmr::deriveSensors(c, coords)), 0.05, 1e-12);
  const auto big = fixtures::scaled(c, 2.0);
  EXPECT_NEAR(dmr::armRadius(big, dmr::deriveSensors(big, coords)), 0.1, 1e-12);
}

TEST(ArmRadius, SyntheticBipedForearm) {
  const auto c = dmr::makeBiped({});
  // Chord error of a 16-facet tube bounds the deviation.
  EXPECT_NEAR(dmr::armRadius(c, dmr::deriveSensors(c, dmr::defaultCoordinateGrid())), 0.04, 1e-3);
  EXPECT_EQ(dmr::forearmBones(c).size(), 2u);
}

TEST(ArmRadius, NoForearmThrows) {
  const auto c = fixtures::cylinderCharacter(0.1, 8);
  EXPECT_THROW(dmr::armRadius(c, dmr::deriveSensors(c, dmr::coordinateGrid(1))), dmr::NoForearmSensors);
}

TEST(ContactTerm, PenalizesOnlySeparation) {
  EXPECT_NEAR(dmr::contactTerm(0.5, 0.9), 0.16, 1e-15);
  EXPECT_EQ(dmr::contactTerm(0.9, 0.5), 0.0);
  EXPECT_EQ(dmr::contactTerm(0.5, 0.5), 0.0);
}

class ClapMetrics : public ::testing::Test {
 protected:
  void SetUp() override {
    set = dmr::generateSynthetic({});
    coords = dmr::defaultCoordinateGrid();
    sensors = dmr::deriveSensors(set.source, coords);
  }
  dmr::SyntheticSet set;
  std::vector<dmr::SemanticCoordinate> coords;
  dmr::SensorSet sensors;
};

TEST_F(ClapMetrics, PreservedMotionHasNoContactError) {
  const auto r = dmr::contactError(set.clap, set.source, sensors, set.clap, set.source, sensors);
  EXPECT_GT(r.contactPairs, 0);
  EXPECT_EQ(r.value, 0.0);
}

TEST_F(ClapMetrics, CopiedMotionOnLongerArmsLosesContact) {
  dmr::SyntheticSpec spec;
  spec.armLength = 1.5;
  const auto target = dmr::makeBiped(spec);
  const auto targetSensors = dmr::deriveSensors(target, coords);
  const auto r = dmr::contactError(set.clap, set.source, sensors, set.clap, target, targetSensors);
  EXPECT_GT(r.value, 0.0);
}

TEST_F(ClapMetrics, RestPoseHasNoPenetration) {
  const auto rest = dmr::MotionSequence::identity(set.source, 2);
  const auto r = dmr::penetrationRatio(set.source, rest);
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_GT(r.armVertexCount, 0);
}

TEST_F(ClapMetrics, ReportCombinesMetrics) {
  const auto r = dmr::evaluateMetrics(set.clap, set.source, sensors, set.clap, set.source, sensors, &set.clap);
  ASSERT_TRUE(r.mse.has_value());
  EXPECT_EQ(r.mse->global, 0.0);
  EXPECT_EQ(r.contactError, 0.0);
  EXPECT_EQ(r.contactPerFrame.size(), 24u);
  EXPECT_EQ(r.penetrationPerFrame.size(), 24u);
}

TEST(Penetration, ArmCapsuleInsideTorsoBoxMatchesContainmentOracle) {
  dmr::SkinnedCharacter c;
  c.name = "box_and_arm";
  c.forward = Vec3::UnitZ();
  c.joints = {Vec3(0, 0, 0), Vec3(0.3, 0.013, 0.007)};
  c.parents = {-1, 0};
  c.jointNames = {"torso", "arm"};
  c.bodyParts = {dmr::BodyPart::Torso, dmr::BodyPart::LeftArm};
  dmr::detail::MeshBuilder mb(c);
  const Vec3 lo(-0.5, -0.5, -0.5);
  const Vec3 hi(0.5, 0.5, 0.5);
  mb.bandedBox(lo, hi, 0.25, {{hi.y(), 0}});
  const std::size_t boxVertices = c.vertices.size();
  // Straddles the +X face of the box.
  mb.capsule(Vec3(0.3, 0.013, 0.007), Vec3(0.83, 0.013, 0.007), 0.1, 1, 16, 4, 0.05);
  const auto motion = dmr::MotionSequence::identity(c, 1);
  const auto r = dmr::penetrationRatio(c, motion);
  int inside = 0;
  int total = 0;
  for (std::size_t v = boxVertices; v < c.vertices.size(); ++v) {
    const Vec3& p = c.vertices[v];
    ++total;
    inside += (p.array() > lo.array()).all() && (p.array() < hi.array()).all() ? 1 : 0;
  }
  ASSERT_GT(inside, 0);
  ASSERT_LT(inside, total);
  EXPECT_EQ(r.armVertexCount, total);
  EXPECT_DOUBLE_EQ(r.mean, static_cast<double>(inside) / total);
}

TEST(Penetration, CharacterWithoutArmsThrows) {
  const auto c = fixtures::cylinderCharacter(0.1, 8);
  EXPECT_THROW(dmr::penetrationRatio(c, dmr::MotionSequence::identity(c, 1)), dmr::EmptyArmSet);
}

TEST(Jitter, StaticLinearAndSpike) {
  const auto c = dmr::makeBiped({});
  const int wrist = dmr::biped::LWrist;
  auto m = dmr::MotionSequence::identity(c, 12);
  const auto still = dmr::jitterTrace(m, c, wrist);
  EXPECT_EQ(still.maxDelta, 0.0);

  for (int t = 0; t < m.frames(); ++t) m.rootTranslation[t] = Vec3(0, 0.01 * t, 0);
  const auto linear = dmr::jitterTrace(m, c, wrist);
  for (std::size_t t = 1; t < linear.heights.size(); ++t) {
    EXPECT_NEAR(linear.heights[t] - linear.heights[t - 1], 0.01, 1e-12);
  }

  m.rootTranslation[7].y() += 0.2;
  const auto spike = dmr::jitterTrace(m, c, wrist);
  EXPECT_EQ(spike.maxDeltaFrame, 7);
  EXPECT_NEAR(spike.maxDelta, 0.21, 1e-12);
}

}  // namespace
