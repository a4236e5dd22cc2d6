#pragma once

// JSON file formats for characters, motions, sensors, DMI fields and
// synthetic specs. Numbers are written in shortest round-trip form, so
// load(save(x)) reproduces every double bit for bit.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmr/character.hpp"
#include "dmr/dmi.hpp"
#include "dmr/errors.hpp"
#include "dmr/metrics.hpp"
#include "dmr/objective.hpp"
#include "dmr/scs.hpp"
#include "dmr/synthetic.hpp"

namespace dmr {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

// Line (1-based) where the value at `pointer` starts in `text`, or 0.
inline int lineOfPointer(std::string_view text, const Json::json_pointer& pointer) {
  std::vector<std::string> target;
  for (Json::json_pointer p = pointer; !p.empty(); p = p.parent_pointer()) target.insert(target.begin(), p.back());

  struct Frame {
    bool array;
    int index;
    std::string key;
    bool wantKey;
  };
  std::vector<Frame> stack;
  int line = 1;
  std::size_t i = 0;
  auto atTarget = [&]() {
    if (stack.size() != target.size()) return false;
    for (std::size_t k = 0; k < stack.size(); ++k) {
      const std::string seg = stack[k].array ? std::to_string(stack[k].index) : stack[k].key;
      if (seg != target[k]) return false;
    }
    return true;
  };
  auto readString = [&]() {
    std::string s;
    ++i;
    while (i < text.size() && text[i] != '"') {
      if (text[i] == '\\' && i + 1 < text.size()) {
        s += text[i + 1];  // escapes only matter for key comparison
        i += 2;
        continue;
      }
      if (text[i] == '\n') ++line;
      s += text[i++];
    }
    ++i;
    return s;
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == ':') {
      ++i;
      continue;
    }
    if (ch == ',') {
      if (!stack.empty()) {
        if (stack.back().array) ++stack.back().index;
        else stack.back().wantKey = true;
      }
      ++i;
      continue;
    }
    if (ch == '}' || ch == ']') {
      if (!stack.empty()) stack.pop_back();
      ++i;
      continue;
    }
    if (!stack.empty() && !stack.back().array && stack.back().wantKey) {
      if (ch != '"') return 0;
      stack.back().key = readString();
      stack.back().wantKey = false;
      continue;
    }
    if (atTarget()) return line;
    if (ch == '{') {
      stack.push_back({false, 0, {}, true});
      ++i;
    } else if (ch == '[') {
      stack.push_back({true, 0, {}, false});
      ++i;
    } else if (ch == '"') {
      readString();
    } else {
      while (i < text.size() && std::string_view(",]} \t\r\n").find(text[i]) == std::string_view::npos) ++i;
    }
  }
  return 0;
}

// Reads typed fields out of a parsed document, turning every shape error
// into a ParseError anchored at the offending line.
class Reader {
 public:
  Reader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  Json parse() const {
    try {
      return Json::parse(text_);
    } catch (const Json::parse_error& e) {
      const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text_.size());
      int line = 1;
      std::size_t lineStart = 0;
      for (std::size_t k = 0; k < byte; ++k) {
        if (text_[k] == '\n') {
          ++line;
          lineStart = k + 1;
        }
      }
      std::ostringstream os;
      os << source_ << ":" << line << ":" << (byte - lineStart + 1) << ": malformed JSON";
      throw ParseError(os.str());
    }
  }

  [[noreturn]] void fail(const Json::json_pointer& at, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (const int line = lineOfPointer(text_, at); line > 0) os << ":" << line;
    os << ": " << message << " (at " << (at.empty() ? std::string("/") : at.to_string()) << ")";
    throw ParseError(os.str());
  }

  const Json& field(const Json& obj, const Json::json_pointer& at, const std::string& key) const {
    if (!obj.is_object()) fail(at, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(at, "missing field '" + key + "'");
    return *it;
  }

  const Json& array(const Json& v, const Json::json_pointer& at, std::optional<std::size_t> size = {}) const {
    if (!v.is_array()) fail(at, "expected an array");
    if (size && v.size() != *size) fail(at, "expected " + std::to_string(*size) + " elements");
    return v;
  }

  double number(const Json& v, const Json::json_pointer& at) const {
    if (!v.is_number()) fail(at, "expected a number");
    return v.get<double>();
  }

  int integer(const Json& v, const Json::json_pointer& at) const {
    if (!v.is_number_integer()) fail(at, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const Json& v, const Json::json_pointer& at) const {
    if (!v.is_boolean()) fail(at, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const Json& v, const Json::json_pointer& at) const {
    if (!v.is_string()) fail(at, "expected a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const Json& v, const Json::json_pointer& at) const {
    array(v, at, 3);
    return {number(v[0], at / 0), number(v[1], at / 1), number(v[2], at / 2)};
  }

  void header(const Json& doc, const std::string& schema) const {
    const Json::json_pointer root;
    if (!doc.is_object()) fail(root, "expected an object");
    const std::string found = string(field(doc, root, "schema"), root / "schema");
    if (found != schema) fail(root / "schema", "expected schema '" + schema + "', found '" + found + "'");
    const int version = integer(field(doc, root, "version"), root / "version");
    if (version != kSchemaVersion) fail(root / "version", "unsupported version " + std::to_string(version));
  }

  // Prefixes an invariant message with the line of the field it names
  // ("skin_weights[3]: ..." points at /skin_weights/3).
  std::string anchor(const std::string& issue) const {
    const std::size_t stop = issue.find_first_of("[:");
    if (stop == std::string::npos) return source_ + ": " + issue;
    std::string key = issue.substr(0, stop);
    if (key == "hierarchy cycle" || key == "hierarchy" || key == "skeleton") key = "parents";
    Json::json_pointer at = Json::json_pointer() / key;
    if (issue[stop] == '[') {
      const std::size_t close = issue.find(']', stop);
      if (close != std::string::npos) at /= issue.substr(stop + 1, close - stop - 1);
    }
    const int line = lineOfPointer(text_, at);
    return source_ + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + issue;
  }

 private:
  std::string_view text_;
  std::string source_;
};

inline Json vec3Json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

// Pretty-printer: scalar arrays stay on one line, and so does an array
// element made of scalar arrays, so a vertex or a frame is one line.
inline bool isFlat(const Json& v, bool insideArray) {
  if (!v.is_array()) return !v.is_object();
  for (const auto& e : v) {
    if (e.is_object()) return false;
    if (e.is_array()) {
      if (!insideArray) return false;
      for (const auto& x : e) {
        if (x.is_structured()) return false;
      }
    }
  }
  return true;
}

inline void emit(std::ostream& os, const Json& v, int indent, bool insideArray = false) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (isFlat(v, insideArray) || v.empty()) {
    os << v.dump();
    return;
  }
  if (v.is_object()) {
    os << "{\n";
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << inner << Json(it.key()).dump() << ": ";
      emit(os, it.value(), indent + 1);
    }
    os << "\n" << pad << "}";
    return;
  }
  os << "[\n";
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) os << ",\n";
    os << inner;
    emit(os, v[k], indent + 1, true);
  }
  os << "\n" << pad << "]";
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void writeFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

}  // namespace detail

inline std::string toText(const Json& doc) {
  std::ostringstream os;
  detail::emit(os, doc, 0);
  os << "\n";
  return os.str();
}

// ---- characters ------------------------------------------------------------

inline Json characterToJson(const SkinnedCharacter& c) {
  Json vertices = Json::array();
  for (const Vec3& p : c.vertices) vertices.push_back(detail::vec3Json(p));
  Json faces = Json::array();
  for (const Face& f : c.faces) faces.push_back(Json::array({f[0], f[1], f[2]}));
  Json joints = Json::array();
  for (const Vec3& p : c.joints) joints.push_back(detail::vec3Json(p));
  Json weights = Json::array();
  for (const auto& vw : c.skinWeights) {
    Json row = Json::array();
    for (const SkinWeight& w : vw) row.push_back(Json::array({w.joint, w.weight}));
    weights.push_back(std::move(row));
  }
  Json parts = Json::array();
  for (BodyPart p : c.bodyParts) parts.push_back(std::string(toString(p)));
  return Json{{"schema", "dmr.character"}, {"version", kSchemaVersion}, {"units", "meters"},
              {"name", c.name},              {"forward", detail::vec3Json(c.forward)},
              {"joints", joints},            {"parents", c.parents},
              {"joint_names", c.jointNames}, {"body_parts", parts},
              {"vertices", vertices},        {"faces", faces},
              {"skin_weights", weights}};
}

inline SkinnedCharacter readCharacter(std::string_view text, const std::string& source = "<character>") {
  using Ptr = Json::json_pointer;
  const detail::Reader r(text, source);
  const Json doc = r.parse();
  r.header(doc, "dmr.character");
  const Ptr root;
  const std::string units = r.string(r.field(doc, root, "units"), root / "units");
  if (units != "meters") r.fail(root / "units", "units must be 'meters'");

  SkinnedCharacter c;
  if (doc.contains("name")) c.name = r.string(doc["name"], root / "name");
  c.forward = r.vec3(r.field(doc, root, "forward"), root / "forward");

  const Json& joints = r.array(r.field(doc, root, "joints"), root / "joints");
  for (std::size_t i = 0; i < joints.size(); ++i) c.joints.push_back(r.vec3(joints[i], root / "joints" / i));
  const Json& parents = r.array(r.field(doc, root, "parents"), root / "parents");
  for (std::size_t i = 0; i < parents.size(); ++i) c.parents.push_back(r.integer(parents[i], root / "parents" / i));
  const Json& names = r.array(r.field(doc, root, "joint_names"), root / "joint_names");
  for (std::size_t i = 0; i < names.size(); ++i) c.jointNames.push_back(r.string(names[i], root / "joint_names" / i));
  const Json& parts = r.array(r.field(doc, root, "body_parts"), root / "body_parts");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string s = r.string(parts[i], root / "body_parts" / i);
    const auto part = bodyPartFromString(s);
    if (!part) r.fail(root / "body_parts" / i, "unknown body part '" + s + "'");
    c.bodyParts.push_back(*part);
  }

  const Json& vertices = r.array(r.field(doc, root, "vertices"), root / "vertices");
  for (std::size_t i = 0; i < vertices.size(); ++i) c.vertices.push_back(r.vec3(vertices[i], root / "vertices" / i));
  const Json& faces = r.array(r.field(doc, root, "faces"), root / "faces");
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Ptr at = root / "faces" / i;
    r.array(faces[i], at, 3);
    c.faces.push_back({r.integer(faces[i][0], at / 0), r.integer(faces[i][1], at / 1), r.integer(faces[i][2], at / 2)});
  }
  const Json& weights = r.array(r.field(doc, root, "skin_weights"), root / "skin_weights");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Ptr at = root / "skin_weights" / i;
    std::vector<SkinWeight> row;
    for (std::size_t k = 0; k < r.array(weights[i], at).size(); ++k) {
      r.array(weights[i][k], at / k, 2);
      row.push_back({r.integer(weights[i][k][0], at / k / 0), r.number(weights[i][k][1], at / k / 1)});
    }
    c.skinWeights.push_back(std::move(row));
  }

  if (const auto issues = validateCharacter(c); !issues.empty()) throw InvariantViolation(r.anchor(issues.front()));
  return c;
}

inline std::string writeCharacter(const SkinnedCharacter& c) { return toText(characterToJson(c)); }

inline SkinnedCharacter loadCharacter(const std::string& path) { return readCharacter(detail::readFile(path), path); }

inline void saveCharacter(const std::string& path, const SkinnedCharacter& c) {
  detail::writeFile(path, writeCharacter(c));
}

// ---- motions ---------------------------------------------------------------

// Rotations are stored per frame as [w, x, y, z] quaternions.
inline Json motionToJson(const MotionSequence& m) {
  Json roots = Json::array();
  for (const Vec3& x : m.rootTranslation) roots.push_back(detail::vec3Json(x));
  Json frames = Json::array();
  for (int t = 0; t < m.frames(); ++t) {
    Json row = Json::array();
    for (int j = 0; j < m.jointCount; ++j) {
      const Quat& q = m.rotation(t, j);
      row.push_back(Json::array({q.w(), q.x(), q.y(), q.z()}));
    }
    frames.push_back(std::move(row));
  }
  return Json{{"schema", "dmr.motion"},      {"version", kSchemaVersion}, {"units", "meters"},
              {"fps", m.fps},                {"joint_names", m.jointNames}, {"root_translation", roots},
              {"rotations", frames}};
}

inline constexpr double kQuaternionWarnTolerance = 1e-4;
inline constexpr double kQuaternionTolerance = 1e-6;

// Quaternions further than 1e-6 from unit norm are renormalized; beyond
// 1e-4 a warning is appended to `warnings`.
inline MotionSequence readMotion(std::string_view text, const std::string& source = "<motion>",
                                 std::vector<std::string>* warnings = nullptr) {
  using Ptr = Json::json_pointer;
  const detail::Reader r(text, source);
  const Json doc = r.parse();
  r.header(doc, "dmr.motion");
  const Ptr root;
  MotionSequence m;
  m.fps = r.number(r.field(doc, root, "fps"), root / "fps");
  const Json& names = r.array(r.field(doc, root, "joint_names"), root / "joint_names");
  for (std::size_t i = 0; i < names.size(); ++i) m.jointNames.push_back(r.string(names[i], root / "joint_names" / i));
  m.jointCount = static_cast<int>(m.jointNames.size());
  const Json& roots = r.array(r.field(doc, root, "root_translation"), root / "root_translation");
  const Json& frames = r.array(r.field(doc, root, "rotations"), root / "rotations", roots.size());
  for (std::size_t t = 0; t < roots.size(); ++t) {
    m.rootTranslation.push_back(r.vec3(roots[t], root / "root_translation" / t));
    const Ptr at = root / "rotations" / t;
    r.array(frames[t], at, static_cast<std::size_t>(m.jointCount));
    for (int j = 0; j < m.jointCount; ++j) {
      const Json& q = r.array(frames[t][j], at / j, 4);
      Quat rot(r.number(q[0], at / j / 0), r.number(q[1], at / j / 1), r.number(q[2], at / j / 2),
               r.number(q[3], at / j / 3));
      const double deviation = std::abs(rot.norm() - 1.0);
      if (!(rot.norm() > 0.0) || !std::isfinite(rot.norm())) r.fail(at / j, "quaternion has zero or non-finite norm");
      if (deviation > kQuaternionTolerance) {
        if (deviation > kQuaternionWarnTolerance && warnings) {
          std::ostringstream os;
          os << source << ": quaternion at frame " << t << ", joint " << j << " has norm " << rot.norm()
             << "; renormalized";
          warnings->push_back(os.str());
        }
        rot.normalize();
      }
      m.rotations.push_back(rot);
    }
  }
  if (const auto issues = validateMotion(m); !issues.empty()) throw InvariantViolation(r.anchor(issues.front()));
  return m;
}

inline std::string writeMotion(const MotionSequence& m) { return toText(motionToJson(m)); }

inline MotionSequence loadMotion(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  return readMotion(detail::readFile(path), path, warnings);
}

inline void saveMotion(const std::string& path, const MotionSequence& m) { detail::writeFile(path, writeMotion(m)); }

// ---- sensors ---------------------------------------------------------------

// One record per sensor: coordinate, validity, position, tangent frame
// (row-major 9 values), skin weights and body part.
inline Json sensorsToJson(const SensorSet& s, const std::string& character = {}) {
  Json records = Json::array();
  for (int i = 0; i < s.size(); ++i) {
    const SensorFeature& f = s.features[i];
    Json tangent = Json::array();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) tangent.push_back(f.tangent(r, k));
    }
    Json weights = Json::array();
    for (const SkinWeight& w : f.skinWeights) weights.push_back(Json::array({w.joint, w.weight}));
    records.push_back(Json{{"bone", s.coordinates[i].bone},
                           {"l", s.coordinates[i].l},
                           {"phi", s.coordinates[i].phi},
                           {"valid", f.valid},
                           {"part", std::string(toString(s.parts[i]))},
                           {"position", detail::vec3Json(f.position)},
                           {"tangent", tangent},
                           {"skin_weights", weights}});
  }
  return Json{{"schema", "dmr.sensors"}, {"version", kSchemaVersion}, {"character", character}, {"sensors", records}};
}

inline SensorSet readSensors(std::string_view text, const std::string& source = "<sensors>") {
  using Ptr = Json::json_pointer;
  const detail::Reader r(text, source);
  const Json doc = r.parse();
  r.header(doc, "dmr.sensors");
  const Ptr root;
  const Json& records = r.array(r.field(doc, root, "sensors"), root / "sensors");
  SensorSet s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Ptr at = root / "sensors" / i;
    const Json& rec = records[i];
    SemanticCoordinate coord{r.integer(r.field(rec, at, "bone"), at / "bone"), r.number(r.field(rec, at, "l"), at / "l"),
                             r.number(r.field(rec, at, "phi"), at / "phi")};
    SensorFeature f;
    f.coordinate = coord;
    f.valid = r.boolean(r.field(rec, at, "valid"), at / "valid");
    f.position = r.vec3(r.field(rec, at, "position"), at / "position");
    const Json& tangent = r.array(r.field(rec, at, "tangent"), at / "tangent", 9);
    for (int k = 0; k < 9; ++k) f.tangent(k / 3, k % 3) = r.number(tangent[k], at / "tangent" / k);
    const Json& weights = r.array(r.field(rec, at, "skin_weights"), at / "skin_weights");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const Ptr wat = at / "skin_weights" / k;
      r.array(weights[k], wat, 2);
      f.skinWeights.push_back({r.integer(weights[k][0], wat / 0), r.number(weights[k][1], wat / 1)});
    }
    const std::string part = r.string(r.field(rec, at, "part"), at / "part");
    const auto bp = bodyPartFromString(part);
    if (!bp) r.fail(at / "part", "unknown body part '" + part + "'");
    s.coordinates.push_back(coord);
    s.features.push_back(std::move(f));
    s.parts.push_back(*bp);
  }
  return s;
}

inline std::string writeSensors(const SensorSet& s, const std::string& character = {}) {
  return toText(sensorsToJson(s, character));
}

inline SensorSet loadSensors(const std::string& path) { return readSensors(detail::readFile(path), path); }

inline void saveSensors(const std::string& path, const SensorSet& s, const std::string& character = {}) {
  detail::writeFile(path, writeSensors(s, character));
}

// ---- DMI fields --------------------------------------------------------------

// Header with the coordinate table, then one record per entry:
// [t, k, j, valid, d_x, d_y, d_z].
inline Json dmiFieldToJson(const DmiField& f) {
  Json coords = Json::array();
  for (const auto& c : f.coordinates) coords.push_back(Json::array({c.bone, c.l, c.phi}));
  Json records = Json::array();
  for (int t = 0; t < f.frames; ++t) {
    for (const DmiEntry& e : f.entries[t]) {
      records.push_back(Json::array({t, e.observer, e.target, e.valid ? 1 : 0, e.d.x(), e.d.y(), e.d.z()}));
    }
  }
  return Json{{"schema", "dmr.dmi_field"}, {"version", kSchemaVersion}, {"frames", f.frames},
              {"pairs", f.pairs},           {"coordinates", coords},     {"records", records}};
}

inline DmiField readDmiField(std::string_view text, const std::string& source = "<dmi field>") {
  using Ptr = Json::json_pointer;
  const detail::Reader r(text, source);
  const Json doc = r.parse();
  r.header(doc, "dmr.dmi_field");
  const Ptr root;
  DmiField f;
  f.frames = r.integer(r.field(doc, root, "frames"), root / "frames");
  f.pairs = r.integer(r.field(doc, root, "pairs"), root / "pairs");
  if (f.frames < 0) r.fail(root / "frames", "frames must be non-negative");
  const Json& coords = r.array(r.field(doc, root, "coordinates"), root / "coordinates");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Ptr at = root / "coordinates" / i;
    r.array(coords[i], at, 3);
    f.coordinates.push_back({r.integer(coords[i][0], at / 0), r.number(coords[i][1], at / 1), r.number(coords[i][2], at / 2)});
  }
  f.entries.resize(f.frames);
  const Json& records = r.array(r.field(doc, root, "records"), root / "records");
  const int sensors = static_cast<int>(f.coordinates.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Ptr at = root / "records" / i;
    const Json& rec = r.array(records[i], at, 7);
    const int t = r.integer(rec[0], at / 0);
    DmiEntry e;
    e.observer = r.integer(rec[1], at / 1);
    e.target = r.integer(rec[2], at / 2);
    e.valid = r.integer(rec[3], at / 3) != 0;
    e.d = {r.number(rec[4], at / 4), r.number(rec[5], at / 5), r.number(rec[6], at / 6)};
    if (t < 0 || t >= f.frames) r.fail(at / 0, "frame index out of range");
    if (e.observer < 0 || e.observer >= sensors || e.target < 0 || e.target >= sensors) {
      r.fail(at, "sensor index out of range");
    }
    f.entries[t].push_back(e);
  }
  return f;
}

inline std::string writeDmiField(const DmiField& f) { return toText(dmiFieldToJson(f)); }

inline DmiField loadDmiField(const std::string& path) { return readDmiField(detail::readFile(path), path); }

inline void saveDmiField(const std::string& path, const DmiField& f) { detail::writeFile(path, writeDmiField(f)); }

// ---- synthetic spec ------------------------------------------------------------

// Every field is optional; absent fields keep the defaults.
inline SyntheticSpec readSyntheticSpec(std::string_view text, const std::string& source = "<spec>") {
  using Ptr = Json::json_pointer;
  const detail::Reader r(text, source);
  const Json doc = r.parse();
  const Ptr root;
  if (!doc.is_object()) r.fail(root, "expected an object");
  SyntheticSpec spec;
  const std::pair<const char*, double*> multipliers[] = {{"arm_length", &spec.armLength},
                                                        {"arm_width", &spec.armWidth},
                                                        {"leg_length", &spec.legLength},
                                                        {"leg_width", &spec.legWidth},
                                                        {"torso_width", &spec.torsoWidth},
                                                        {"fps", &spec.fps}};
  for (const auto& [key, slot] : multipliers) {
    if (doc.contains(key)) *slot = r.number(doc[key], root / key);
  }
  if (doc.contains("frames")) spec.frames = r.integer(doc["frames"], root / "frames");
  if (doc.contains("segments")) spec.segments = r.integer(doc["segments"], root / "segments");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::vector<std::string> known = {"arm_length", "arm_width",  "leg_length", "leg_width",
                                                   "torso_width", "fps",       "frames",     "segments"};
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      r.fail(root / it.key(), "unknown field '" + it.key() + "'");
    }
  }
  spec.validate();
  return spec;
}

inline SyntheticSpec loadSyntheticSpec(const std::string& path) {
  return readSyntheticSpec(detail::readFile(path), path);
}

// ---- metric reports --------------------------------------------------------------

inline std::string formatNumber(double v) { return Json(v).dump(); }

// key=value lines; per-frame series are space separated.
inline std::string formatMetricReport(const MetricReport& r) {
  std::ostringstream os;
  auto series = [&](const char* key, const std::vector<double>& xs) {
    os << key << "=";
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << formatNumber(xs[i]);
    os << "\n";
  };
  if (r.mse) {
    os << "mse_global=" << formatNumber(r.mse->global) << "\n";
    os << "mse_local=" << formatNumber(r.mse->local) << "\n";
  }
  os << "contact_error=" << formatNumber(r.contactError) << "\n";
  os << "contact_pairs=" << r.contactPairs << "\n";
  os << "penetration_ratio=" << formatNumber(r.penetrationRatio) << "\n";
  series("contact_error_per_frame", r.contactPerFrame);
  series("penetration_per_frame", r.penetrationPerFrame);
  if (r.mse) {
    series("mse_global_per_frame", r.mse->perFrameGlobal);
    series("mse_local_per_frame", r.mse->perFrameLocal);
  }
  return os.str();
}

inline std::string formatLoss(int iteration, const LossBreakdown& l) {
  std::ostringstream os;
  os << "iter=" << iteration << " total=" << formatNumber(l.total) << " dmi=" << formatNumber(l.dmi)
     << " rec=" << formatNumber(l.rec) << " ef=" << formatNumber(l.ef) << " valid_pairs=" << l.validPairCount;
  return os.str();
}

}  // namespace dmr
