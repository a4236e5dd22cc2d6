#pragma once

// Triangle queries: ray casting and generalized winding numbers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dmr/character.hpp"

namespace dmr {

struct Triangle {
  Vec3 a;
  Vec3 b;
  Vec3 c;
  int face = -1;  // index of the source face in the owning mesh

  Vec3 normal() const { return (b - a).cross(c - a).normalized(); }
};

struct RayHit {
  Vec3 point;
  double distance = 0.0;
  int face = -1;
  int triangle = -1;  // position within the queried span
  Vec3 barycentric;   // weights of (a, b, c)
};

inline constexpr double kRayEpsilon = 1e-6;

// Moller-Trumbore. Returns (t, u, v) with the hit at (1-u-v) a + u b + v c.
// Edge and vertex hits are included.
inline std::optional<Vec3> intersectTriangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  const double scale = e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - tri.a;
  const double u = inv * s.dot(h);
  constexpr double kSlack = 1e-12;
  if (u < -kSlack || u > 1.0 + kSlack) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = inv * dir.dot(q);
  if (v < -kSlack || u + v > 1.0 + kSlack) return std::nullopt;
  const double t = inv * e2.dot(q);
  return Vec3(t, u, v);
}

// Nearest hit with t > kRayEpsilon. Hits at equal distance resolve to the
// lowest face index.
inline std::optional<RayHit> rayMeshIntersection(std::span<const Triangle> mesh, const Vec3& origin,
                                                 const Vec3& direction) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto hit = intersectTriangle(origin, direction, mesh[i]);
    if (!hit || (*hit)(0) <= kRayEpsilon) continue;
    const double t = (*hit)(0);
    const double tol = 1e-12 * std::max(1.0, t);
    bool take = !best || t < best->distance - tol;
    if (!take && best && std::abs(t - best->distance) <= tol && mesh[i].face < best->face) take = true;
    if (!take) continue;
    const double u = std::clamp((*hit)(1), 0.0, 1.0);
    const double v = std::clamp((*hit)(2), 0.0, 1.0 - u);
    RayHit h;
    h.distance = t;
    h.face = mesh[i].face;
    h.triangle = static_cast<int>(i);
    h.barycentric = Vec3(1.0 - u - v, u, v);
    h.point = h.barycentric(0) * mesh[i].a + h.barycentric(1) * mesh[i].b + h.barycentric(2) * mesh[i].c;
    best = h;
  }
  return best;
}

inline std::vector<Triangle> trianglesOf(std::span<const Vec3> vertices, std::span<const Face> faces) {
  std::vector<Triangle> out;
  out.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    out.push_back({vertices[faces[f][0]], vertices[faces[f][1]], vertices[faces[f][2]], static_cast<int>(f)});
  }
  return out;
}

// Signed solid angle subtended by a triangle at q (Van Oosterom-Strackee).
inline double solidAngle(const Vec3& q, const Triangle& tri) {
  const Vec3 a = tri.a - q;
  const Vec3 b = tri.b - q;
  const Vec3 c = tri.c - q;
  const double la = a.norm();
  const double lb = b.norm();
  const double lc = c.norm();
  const double numer = a.dot(b.cross(c));
  const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  return 2.0 * std::atan2(numer, denom);
}

// Generalized winding number: ~1 inside a closed outward-oriented surface,
// ~0 outside, smooth across holes.
inline double windingNumber(std::span<const Triangle> mesh, const Vec3& q) {
  double total = 0.0;
  for (const Triangle& tri : mesh) total += solidAngle(q, tri);
  return total / (4.0 * std::numbers::pi);
}

inline Vec3 closestPointOnTriangle(const Vec3& p, const Triangle& tri) {
  // Ericson, Real-Time Collision Detection 5.1.5.
  const Vec3 ab = tri.b - tri.a;
  const Vec3 ac = tri.c - tri.a;
  const Vec3 ap = p - tri.a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return tri.a;
  const Vec3 bp = p - tri.b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return tri.b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return tri.a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - tri.c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return tri.c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return tri.a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return tri.b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (tri.c - tri.b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return tri.a + ab * (vb * denom) + ac * (vc * denom);
}

inline double distanceToMesh(std::span<const Triangle> mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Triangle& tri : mesh) best = std::min(best, (closestPointOnTriangle(p, tri) - p).norm());
  return best;
}

}  // namespace dmr
