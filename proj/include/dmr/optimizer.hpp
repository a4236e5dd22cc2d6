#pragma once

// Per-sequence retargeting: Adam over the target's 6D joint rotations,
// starting from the copied source rotations.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dmr/character.hpp"
#include "dmr/dmi.hpp"
#include "dmr/objective.hpp"
#include "dmr/scs.hpp"

namespace dmr {

struct OptimizerSettings {
  int maxIterations = 300;
  double stepSize = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Relative change of the best total over `window` iterations below which
  // the run stops.
  double tolerance = 1e-6;
  int window = 10;
  // A best total at or below this is optimal for a sum of non-negative terms.
  double zeroLoss = 1e-12;
  std::uint64_t seed = 0;
  double initJitter = 0.0;  // stddev of seeded noise added to the copied rotations
  unsigned threads = 1;

  void validate() const {
    if (!(stepSize > 0.0)) throw InvalidSpec("optimizer: step size must be positive");
    if (maxIterations < 1) throw InvalidSpec("optimizer: maxIterations must be at least 1");
    if (window < 1) throw InvalidSpec("optimizer: window must be at least 1");
  }
};

struct RetargetResult {
  MotionSequence motion;
  std::vector<LossBreakdown> lossTrace;  // loss at every evaluated iterate
  std::vector<double> bestTotal;         // best-so-far total after each iterate
  LossBreakdown best;
  int iterations = 0;  // optimizer steps taken
  bool converged = false;
  bool nonFinite = false;
};

// Everything derived from the two characters and the source motion.
struct RetargetSetup {
  SensorSet sourceSensors;
  SensorSet targetSensors;
  InteractionMask sourceMask;
  InteractionMask targetMask;
  DmiField sourceField;
  MotionSequence initialMotion;  // copied rotations, height-scaled root
};

inline RetargetSetup prepareRetarget(const MotionSequence& motionA, const SkinnedCharacter& characterA,
                                     const SkinnedCharacter& characterB,
                                     std::span<const SemanticCoordinate> coordinates, const RetargetConfig& config,
                                     unsigned threads = 1) {
  if (!sameTopology(characterA, characterB)) {
    throw SkeletonMismatch("retarget: source and target skeletons differ in topology");
  }
  if (motionA.jointCount != characterA.jointCount()) {
    throw SkeletonMismatch("retarget: motion is not bound to the source character");
  }
  RetargetSetup setup;
  setup.sourceSensors = deriveSensors(characterA, coordinates, {}, threads);
  setup.targetSensors = deriveSensors(characterB, coordinates, {}, threads);
  setup.sourceMask = buildInteractionMask(setup.sourceSensors);
  setup.targetMask = buildInteractionMask(setup.sourceSensors, &setup.targetSensors);
  const auto traj = sensorForwardKinematics(characterA, setup.sourceSensors, motionA, threads);
  setup.sourceField =
      computeDmiField(traj, setup.sourceMask, setup.sourceSensors.coordinates, config.pairs, config.selection, threads);

  setup.initialMotion = motionA;
  setup.initialMotion.jointNames = characterB.jointNames;
  const double ratio = characterHeight(characterB) / characterHeight(characterA);
  for (Vec3& x : setup.initialMotion.rootTranslation) x *= ratio;
  return setup;
}

using IterationCallback = std::function<void(int iteration, const LossBreakdown&)>;

inline RetargetResult optimizeRetarget(const RetargetObjective& objective, const MotionSequence& initialMotion,
                                       const OptimizerSettings& settings, const IterationCallback& onIteration = {}) {
  settings.validate();
  MotionParams params = toParams(initialMotion);
  if (settings.initJitter > 0.0) {
    std::mt19937_64 rng(settings.seed);
    std::normal_distribution<double> noise(0.0, settings.initJitter);
    for (auto& v : params.values) {
      for (int k = 0; k < 6; ++k) v.cols(k) += noise(rng);
    }
  }

  RetargetResult result;
  MotionParams best = params;
  MotionParams gradient;
  std::vector<Eigen::Matrix<double, 6, 1>> m1(params.values.size(), Eigen::Matrix<double, 6, 1>::Zero());
  std::vector<Eigen::Matrix<double, 6, 1>> m2(params.values.size(), Eigen::Matrix<double, 6, 1>::Zero());
  double bestTotal = std::numeric_limits<double>::infinity();
  int bestIteration = -1;

  for (int it = 0;; ++it) {
    LossBreakdown loss;
    bool finite = true;
    try {
      loss = objective.evaluate(params, &gradient, settings.threads);
    } catch (const DegenerateInput&) {
      finite = false;
    }
    if (finite) {
      finite = std::isfinite(loss.total);
      for (const auto& g : gradient.values) finite = finite && g.cols.allFinite();
    }
    if (!finite) {
      result.nonFinite = true;
      break;
    }
    result.lossTrace.push_back(loss);
    if (onIteration) onIteration(it, loss);
    if (loss.total < bestTotal) {
      bestTotal = loss.total;
      best = params;
      bestIteration = it;
      result.best = loss;
    }
    result.bestTotal.push_back(bestTotal);

    if (bestTotal <= settings.zeroLoss) {
      result.converged = true;
      break;
    }
    const std::size_t n = result.bestTotal.size();
    if (n > static_cast<std::size_t>(settings.window)) {
      const double before = result.bestTotal[n - 1 - settings.window];
      if (std::abs(before - bestTotal) <= settings.tolerance * std::abs(before)) {
        result.converged = true;
        break;
      }
    }
    if (it >= settings.maxIterations) break;

    const double b1 = 1.0 - std::pow(settings.beta1, it + 1);
    const double b2 = 1.0 - std::pow(settings.beta2, it + 1);
    for (std::size_t i = 0; i < params.values.size(); ++i) {
      const auto& g = gradient.values[i].cols;
      m1[i] = settings.beta1 * m1[i] + (1.0 - settings.beta1) * g;
      m2[i] = settings.beta2 * m2[i] + (1.0 - settings.beta2) * g.cwiseAbs2();
      const auto mhat = m1[i] / b1;
      const auto vhat = m2[i] / b2;
      params.values[i].cols -= settings.stepSize * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + settings.epsilon).matrix());
    }
    ++result.iterations;
  }

  if (bestIteration == 0 && settings.initJitter == 0.0) {
    result.motion = initialMotion;
  } else {
    // Gram-Schmidt re-projection of the best iterate; quaternions come out unit.
    result.motion = fromParams(best, initialMotion);
  }
  return result;
}

inline RetargetResult retarget(const MotionSequence& motionA, const SkinnedCharacter& characterA,
                               const SkinnedCharacter& characterB, std::span<const SemanticCoordinate> coordinates,
                               const RetargetConfig& config = {}, const OptimizerSettings& settings = {},
                               const IterationCallback& onIteration = {}) {
  RetargetSetup setup = prepareRetarget(motionA, characterA, characterB, coordinates, config, settings.threads);
  RetargetObjective objective(characterB, setup.targetSensors, setup.sourceField, setup.targetMask,
                              toParams(motionA), setup.initialMotion.rootTranslation, config);
  return optimizeRetarget(objective, setup.initialMotion, settings, onIteration);
}

}  // namespace dmr
