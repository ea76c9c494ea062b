#include "povmscope/hull.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "povmscope/error.hpp"

namespace povmscope {
namespace {

[[noreturn]] void throw_degenerate(int r, const std::string& detail) {
  throw Error(ErrorKind::kDegenerateHull,
              "convex_hull: point cloud spans fewer than " + std::to_string(r) +
                  " affine dimensions (" + detail + "); reduce the rank r and retry");
}

double cloud_extent(const RealMatrix& pts) {
  const RealVector lo = pts.rowwise().minCoeff();
  const RealVector hi = pts.rowwise().maxCoeff();
  return (hi - lo).maxCoeff();
}

// Every point within eps of the hull surface (or outside it, which only
// happens through rounding) is a boundary point.
std::vector<std::size_t> boundary_points(const RealMatrix& pts, const RealMatrix& normals,
                                         const RealVector& offsets, double eps) {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const RealVector dist = normals.transpose() * pts.col(j) - offsets;
    if (dist.maxCoeff() >= -eps) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

HullResult hull_1d(const RealMatrix& pts, double eps) {
  const double lo = pts.row(0).minCoeff();
  const double hi = pts.row(0).maxCoeff();
  if (hi - lo <= eps) throw_degenerate(1, "all points coincide");
  HullResult res;
  res.dimension = 1;
  res.facet_normals = RealMatrix(1, 2);
  res.facet_normals << 1.0, -1.0;
  res.facet_offsets = RealVector(2);
  res.facet_offsets << hi, -lo;
  res.vertex_indices = boundary_points(pts, res.facet_normals, res.facet_offsets, eps);
  return res;
}

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

HullResult hull_2d(const RealMatrix& pts, double eps) {
  const Eigen::Index m = pts.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (pts(0, a) != pts(0, b)) return pts(0, a) < pts(0, b);
    return pts(1, a) < pts(1, b);
  });
  auto at = [&](Eigen::Index j) { return Eigen::Vector2d(pts(0, j), pts(1, j)); };

  // Andrew's monotone chain; collinear points are dropped from the chain and
  // recovered by the boundary pass below.
  std::vector<Eigen::Index> chain(2 * static_cast<std::size_t>(m));
  std::size_t k = 0;
  for (Eigen::Index idx : order) {
    while (k >= 2 && cross2(at(chain[k - 2]), at(chain[k - 1]), at(idx)) <= 0.0) --k;
    chain[k++] = idx;
  }
  for (std::size_t i = order.size() - 1, lower = k + 1; i-- > 0;) {
    const Eigen::Index idx = order[i];
    while (k >= lower && cross2(at(chain[k - 2]), at(chain[k - 1]), at(idx)) <= 0.0) --k;
    chain[k++] = idx;
  }
  chain.resize(k - 1);

  // Degeneracy: largest distance of any point from the line through the two
  // extreme chain points.
  double max_area = 0.0;
  const Eigen::Vector2d a = at(order.front());
  const Eigen::Vector2d b = at(order.back());
  const double base = (b - a).norm();
  if (base <= eps) throw_degenerate(2, "all points coincide");
  for (Eigen::Index j = 0; j < m; ++j) {
    max_area = std::max(max_area, std::abs(cross2(a, b, at(j))) / base);
  }
  if (max_area <= eps || chain.size() < 3) throw_degenerate(2, "points are collinear");

  HullResult res;
  res.dimension = 2;
  const auto facets = static_cast<Eigen::Index>(chain.size());
  res.facet_normals = RealMatrix(2, facets);
  res.facet_offsets = RealVector(facets);
  for (Eigen::Index f = 0; f < facets; ++f) {
    const Eigen::Vector2d p = at(chain[static_cast<std::size_t>(f)]);
    const Eigen::Vector2d q = at(chain[static_cast<std::size_t>((f + 1) % facets)]);
    // Counter-clockwise chain: outward normal points right of the edge.
    Eigen::Vector2d n(q.y() - p.y(), p.x() - q.x());
    n.normalize();
    res.facet_normals.col(f) = n;
    res.facet_offsets(f) = n.dot(p);
  }
  res.vertex_indices = boundary_points(pts, res.facet_normals, res.facet_offsets, eps);
  return res;
}

struct Face {
  std::array<Eigen::Index, 3> v;
  Eigen::Vector3d normal;
  double offset;
  bool alive = true;
};

HullResult hull_3d(const RealMatrix& pts, double eps) {
  const Eigen::Index m = pts.cols();
  auto at = [&](Eigen::Index j) -> Eigen::Vector3d { return pts.col(j); };

  // Initial simplex from extreme points.
  Eigen::Index i0 = 0;
  for (Eigen::Index j = 1; j < m; ++j) {
    if (pts(0, j) < pts(0, i0)) i0 = j;
  }
  Eigen::Index i1 = i0;
  double best = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double d = (at(j) - at(i0)).norm();
    if (d > best) best = d, i1 = j;
  }
  if (best <= eps) throw_degenerate(3, "all points coincide");
  const Eigen::Vector3d dir = (at(i1) - at(i0)).normalized();
  Eigen::Index i2 = i0;
  best = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Vector3d w = at(j) - at(i0);
    const double d = (w - w.dot(dir) * dir).norm();
    if (d > best) best = d, i2 = j;
  }
  if (best <= eps) throw_degenerate(3, "points are collinear");
  const Eigen::Vector3d plane_n = (at(i1) - at(i0)).cross(at(i2) - at(i0)).normalized();
  Eigen::Index i3 = i0;
  best = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double d = std::abs(plane_n.dot(at(j) - at(i0)));
    if (d > best) best = d, i3 = j;
  }
  if (best <= eps) throw_degenerate(3, "points are coplanar");

  const Eigen::Vector3d interior = 0.25 * (at(i0) + at(i1) + at(i2) + at(i3));
  std::vector<Face> faces;
  auto add_face = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    Face f{{a, b, c}, Eigen::Vector3d::Zero(), 0.0};
    Eigen::Vector3d n = (at(b) - at(a)).cross(at(c) - at(a));
    const double len = n.norm();
    if (len > 0.0) n /= len;
    if (n.dot(interior - at(a)) > 0.0) {
      std::swap(f.v[1], f.v[2]);
      n = -n;
    }
    f.normal = n;
    f.offset = n.dot(at(a));
    faces.push_back(f);
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  std::vector<std::size_t> visible;
  std::set<std::pair<Eigen::Index, Eigen::Index>> edges;
  for (Eigen::Index p = 0; p < m; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    const Eigen::Vector3d x = at(p);
    visible.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].normal.dot(x) - faces[f].offset > eps) visible.push_back(f);
    }
    if (visible.empty()) continue;
    edges.clear();
    for (std::size_t f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) edges.emplace(v[e], v[(e + 1) % 3]);
    }
    for (std::size_t f : visible) faces[f].alive = false;
    for (const auto& [a, b] : edges) {
      if (!edges.contains({b, a})) add_face(a, b, p);
    }
  }

  std::vector<const Face*> live;
  for (const Face& f : faces) {
    if (f.alive && f.normal.squaredNorm() > 0.0) live.push_back(&f);
  }
  HullResult res;
  res.dimension = 3;
  res.facet_normals = RealMatrix(3, static_cast<Eigen::Index>(live.size()));
  res.facet_offsets = RealVector(static_cast<Eigen::Index>(live.size()));
  for (std::size_t f = 0; f < live.size(); ++f) {
    res.facet_normals.col(static_cast<Eigen::Index>(f)) = live[f]->normal;
    res.facet_offsets(static_cast<Eigen::Index>(f)) = live[f]->offset;
  }
  res.vertex_indices = boundary_points(pts, res.facet_normals, res.facet_offsets, eps);
  return res;
}

}  // namespace

HullResult convex_hull(const RealMatrix& points, double tolerance) {
  require_finite(points, "convex_hull");
  const auto r = static_cast<int>(points.rows());
  if (r < 1 || r > 3) {
    throw Error(ErrorKind::kInvalidInput,
                "convex_hull: dimension must be 1, 2 or 3, got " + std::to_string(r));
  }
  if (points.cols() < r + 1) throw_degenerate(r, "too few points");
  const double eps = tolerance * std::max(cloud_extent(points), 1e-300);
  switch (r) {
    case 1: return hull_1d(points, eps);
    case 2: return hull_2d(points, eps);
    default: return hull_3d(points, eps);
  }
}

}  // namespace povmscope
