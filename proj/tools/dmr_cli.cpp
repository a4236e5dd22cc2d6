// Command-line front end: sensor derivation, DMI fields, retargeting,
// metrics, synthetic fixtures and file validation.
//
// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "dmr/dmr.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int bones = 0;
  int origins = 4;
  int directions = 4;
};

// "NxLxPHI", e.g. "18x4x4".
GridSpec parseGrid(const std::string& text) {
  static const std::regex pattern(R"((\d+)x(\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw UsageError("--grid expects NxLxPHI, e.g. 18x4x4");
  GridSpec g{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
  if (g.bones < 1 || g.origins < 1 || g.directions < 1) throw UsageError("--grid dimensions must be positive");
  return g;
}

void checkPairs(int pairs) {
  if (pairs < 2 || pairs % 2 != 0) throw UsageError("--pairs must be an even number of at least 2");
}

std::vector<dmr::SemanticCoordinate> gridFor(const dmr::SkinnedCharacter& c, const std::string& grid) {
  GridSpec g{dmr::boneCount(c), 4, 4};
  if (!grid.empty()) g = parseGrid(grid);
  if (g.bones > dmr::boneCount(c)) {
    throw UsageError("--grid asks for " + std::to_string(g.bones) + " bones but the character has " +
                     std::to_string(dmr::boneCount(c)));
  }
  return dmr::coordinateGrid(g.bones, g.origins, g.directions);
}

dmr::MotionSequence loadBoundMotion(const std::string& path, const dmr::SkinnedCharacter& c) {
  std::vector<std::string> warnings;
  dmr::MotionSequence m = dmr::loadMotion(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (const auto issues = dmr::validateBinding(m, c); !issues.empty()) {
    throw dmr::InvariantViolation(path + ": " + issues.front());
  }
  return m;
}

struct ScsArgs {
  std::string character, out, grid;
  unsigned threads = dmr::defaultThreadCount();
};

int runScs(const ScsArgs& a) {
  const auto c = dmr::loadCharacter(a.character);
  const auto sensors = dmr::deriveSensors(c, gridFor(c, a.grid), {}, a.threads);
  dmr::saveSensors(a.out, sensors, c.name);
  std::cout << "sensors=" << sensors.size() << "\nvalid=" << sensors.validCount() << "\n";
  return kOk;
}

struct DmiArgs {
  std::string character, sensors, motion, out;
  int pairs = 20;
  unsigned threads = dmr::defaultThreadCount();
};

int runDmi(const DmiArgs& a) {
  checkPairs(a.pairs);
  const auto c = dmr::loadCharacter(a.character);
  const auto sensors = dmr::loadSensors(a.sensors);
  const auto motion = loadBoundMotion(a.motion, c);
  const auto mask = dmr::buildInteractionMask(sensors);
  const auto traj = dmr::sensorForwardKinematics(c, sensors, motion, a.threads);
  const auto field = dmr::computeDmiField(traj, mask, sensors.coordinates, a.pairs, dmr::PairSelection::PerFrame,
                                          a.threads);
  dmr::saveDmiField(a.out, field);
  std::cout << "frames=" << field.frames << "\nentries=" << field.entryCount() << "\n";
  return kOk;
}

struct RetargetArgs {
  std::string sourceChar, targetChar, motion, out, grid;
  dmr::RetargetConfig config;
  dmr::OptimizerSettings settings;
  bool quiet = false;
};

int runRetarget(RetargetArgs a) {
  checkPairs(a.config.pairs);
  const auto source = dmr::loadCharacter(a.sourceChar);
  const auto target = dmr::loadCharacter(a.targetChar);
  const auto motion = loadBoundMotion(a.motion, source);
  dmr::IterationCallback log;
  if (!a.quiet) log = [](int it, const dmr::LossBreakdown& l) { std::cout << dmr::formatLoss(it, l) << "\n"; };
  const auto result = dmr::retarget(motion, source, target, gridFor(source, a.grid), a.config, a.settings, log);
  if (result.nonFinite) {
    std::cerr << "error: objective became non-finite; best iterate written\n";
  }
  dmr::saveMotion(a.out, result.motion);
  std::cout << "best " << dmr::formatLoss(static_cast<int>(result.lossTrace.size()) - 1, result.best) << "\n";
  std::cout << "iterations=" << result.iterations << "\nconverged=" << (result.converged ? "true" : "false") << "\n";
  return result.nonFinite ? kFailure : kOk;
}

struct MetricsArgs {
  std::string sourceChar, targetChar, source, candidate, groundTruth, grid;
  unsigned threads = dmr::defaultThreadCount();
};

int runMetrics(const MetricsArgs& a) {
  const auto charA = dmr::loadCharacter(a.sourceChar);
  const auto charB = dmr::loadCharacter(a.targetChar);
  if (!dmr::sameTopology(charA, charB)) throw dmr::SkeletonMismatch("source and target skeletons differ in topology");
  const auto motionA = loadBoundMotion(a.source, charA);
  const auto candidate = loadBoundMotion(a.candidate, charB);
  std::optional<dmr::MotionSequence> truth;
  if (!a.groundTruth.empty()) truth = loadBoundMotion(a.groundTruth, charB);
  const auto coords = gridFor(charA, a.grid);
  const auto sensorsA = dmr::deriveSensors(charA, coords, {}, a.threads);
  const auto sensorsB = dmr::deriveSensors(charB, coords, {}, a.threads);
  const auto report = dmr::evaluateMetrics(motionA, charA, sensorsA, candidate, charB, sensorsB,
                                           truth ? &*truth : nullptr, a.threads);
  std::cout << dmr::formatMetricReport(report);
  return kOk;
}

struct SyntheticArgs {
  std::string spec, outDir;
};

int runGenSynthetic(const SyntheticArgs& a) {
  const auto spec = dmr::loadSyntheticSpec(a.spec);
  const auto set = dmr::generateSynthetic(spec);
  std::filesystem::create_directories(a.outDir);
  const std::filesystem::path dir(a.outDir);
  dmr::saveCharacter((dir / "source.json").string(), set.source);
  dmr::saveCharacter((dir / "target.json").string(), set.target);
  dmr::saveMotion((dir / "clap.json").string(), set.clap);
  dmr::saveMotion((dir / "pray.json").string(), set.pray);
  dmr::saveMotion((dir / "cross_arms.json").string(), set.crossArms);
  std::cout << "wrote source.json target.json clap.json pray.json cross_arms.json to " << a.outDir << "\n";
  return kOk;
}

struct ValidateArgs {
  std::string character, motion;
};

int runValidate(const ValidateArgs& a) {
  const auto c = dmr::loadCharacter(a.character);
  std::cout << "character ok: " << c.jointCount() << " joints, " << c.vertexCount() << " vertices, " << c.faces.size()
            << " faces\n";
  if (!a.motion.empty()) {
    const auto m = loadBoundMotion(a.motion, c);
    std::cout << "motion ok: " << m.frames() << " frames\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeletal motion retargeting with dense mesh interaction fields"};
  app.require_subcommand(1);

  ScsArgs scs;
  auto* scsCmd = app.add_subcommand("scs", "Derive sensors for a character");
  scsCmd->add_option("--character", scs.character, "Character file")->required();
  scsCmd->add_option("--out", scs.out, "Sensor output file")->required();
  scsCmd->add_option("--grid", scs.grid, "Coordinate grid NxLxPHI (default: all bones x 4 x 4)");
  scsCmd->add_option("--threads", scs.threads, "Worker threads")->check(CLI::PositiveNumber);

  DmiArgs dmi;
  auto* dmiCmd = app.add_subcommand("dmi", "Compute the DMI field of a motion");
  dmiCmd->add_option("--character", dmi.character, "Character file")->required();
  dmiCmd->add_option("--sensors", dmi.sensors, "Sensor file")->required();
  dmiCmd->add_option("--motion", dmi.motion, "Motion file")->required();
  dmiCmd->add_option("--pairs", dmi.pairs, "Pairs per observer and group (even)")->required();
  dmiCmd->add_option("--out", dmi.out, "Field output file")->required();
  dmiCmd->add_option("--threads", dmi.threads, "Worker threads")->check(CLI::PositiveNumber);

  RetargetArgs ret;
  auto* retCmd = app.add_subcommand("retarget", "Retarget a motion from one character to another");
  retCmd->add_option("--source-char", ret.sourceChar, "Source character file")->required();
  retCmd->add_option("--target-char", ret.targetChar, "Target character file")->required();
  retCmd->add_option("--motion", ret.motion, "Source motion file")->required();
  retCmd->add_option("--out", ret.out, "Retargeted motion output file")->required();
  retCmd->add_option("--lambda-rec", ret.config.lambdaRec, "Reconstruction weight")->check(CLI::NonNegativeNumber);
  retCmd->add_option("--lambda-dmi", ret.config.lambdaDmi, "DMI weight")->check(CLI::NonNegativeNumber);
  retCmd->add_option("--lambda-ef", ret.config.lambdaEf, "End-effector weight")->check(CLI::NonNegativeNumber);
  retCmd->add_option("--pairs", ret.config.pairs, "Pairs per observer and group (even)");
  retCmd->add_option("--iters", ret.settings.maxIterations, "Maximum optimizer iterations")->check(CLI::PositiveNumber);
  retCmd->add_option("--lr", ret.settings.stepSize, "Adam step size")->check(CLI::PositiveNumber);
  retCmd->add_option("--seed", ret.settings.seed, "Random seed");
  retCmd->add_option("--init-jitter", ret.settings.initJitter, "Stddev of seeded noise on the initial rotations")
      ->check(CLI::NonNegativeNumber);
  retCmd->add_option("--grid", ret.grid, "Coordinate grid NxLxPHI");
  ret.settings.threads = dmr::defaultThreadCount();
  retCmd->add_option("--threads", ret.settings.threads, "Worker threads")->check(CLI::PositiveNumber);
  retCmd->add_flag("--quiet", ret.quiet, "Do not print per-iteration losses");

  MetricsArgs met;
  auto* metCmd = app.add_subcommand("metrics", "Evaluate a retargeted motion");
  metCmd->add_option("--source-char", met.sourceChar, "Source character file")->required();
  metCmd->add_option("--target-char", met.targetChar, "Target character file")->required();
  metCmd->add_option("--source", met.source, "Source motion file")->required();
  metCmd->add_option("--candidate", met.candidate, "Candidate motion on the target")->required();
  metCmd->add_option("--ground-truth", met.groundTruth, "Ground-truth motion on the target");
  metCmd->add_option("--grid", met.grid, "Coordinate grid NxLxPHI");
  metCmd->add_option("--threads", met.threads, "Worker threads")->check(CLI::PositiveNumber);

  SyntheticArgs syn;
  auto* synCmd = app.add_subcommand("gen-synthetic", "Write synthetic biped characters and motions");
  synCmd->add_option("--spec", syn.spec, "Synthetic spec file")->required();
  synCmd->add_option("--out-dir", syn.outDir, "Output directory")->required();

  ValidateArgs val;
  auto* valCmd = app.add_subcommand("validate", "Check a character and optionally a motion");
  valCmd->add_option("--character", val.character, "Character file")->required();
  valCmd->add_option("--motion", val.motion, "Motion file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*scsCmd) return runScs(scs);
    if (*dmiCmd) return runDmi(dmi);
    if (*retCmd) return runRetarget(ret);
    if (*metCmd) return runMetrics(met);
    if (*synCmd) return runGenSynthetic(syn);
    if (*valCmd) return runValidate(val);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
