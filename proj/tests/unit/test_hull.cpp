#include <doctest.h>

#include <algorithm>
#include <set>

#include "povmscope/hull.hpp"
#include "povmscope/qdsc.hpp"
#include "support.hpp"

using namespace povmscope;

namespace {

// Brute-force supporting half-spaces of the cloud: every hyperplane through
// r affinely independent points that has the whole cloud on one side.
std::vector<std::pair<RealVector, double>> supporting_planes(const RealMatrix& pts, double eps) {
  const auto r = pts.rows();
  const auto m = pts.cols();
  std::vector<std::pair<RealVector, double>> planes;
  auto consider = [&](RealVector n) {
    if (n.norm() < 1e-12) return;
    n.normalize();
    for (double sign : {1.0, -1.0}) {
      const RealVector nn = sign * n;
      const RealVector proj = nn.transpose() * pts;
      const double off = proj.maxCoeff();
      if (proj.minCoeff() < off - 1e-12 && (proj.array() <= off + eps).all()) planes.emplace_back(nn, off);
    }
  };
  if (r == 1) {
    consider(RealVector::Ones(1));
  } else if (r == 2) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const RealVector d = pts.col(j) - pts.col(i);
        RealVector n(2);
        n << -d(1), d(0);
        const double off = n.dot(pts.col(i));
        const RealVector proj = n.transpose() * pts;
        if ((proj.array() <= off + eps * n.norm()).all() || (proj.array() >= off - eps * n.norm()).all())
          consider(n);
      }
  } else {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        for (Eigen::Index k = j + 1; k < m; ++k) {
          const Vector3 a = pts.col(i), b = pts.col(j), c = pts.col(k);
          const Vector3 n3 = (b - a).cross(c - a);
          if (n3.norm() < 1e-12) continue;
          const RealVector n = n3;
          const double off = n.dot(pts.col(i));
          const RealVector proj = n.transpose() * pts;
          if ((proj.array() <= off + eps * n.norm()).all() || (proj.array() >= off - eps * n.norm()).all())
            consider(n);
        }
  }
  return planes;
}

// Signed distance of p to hull(vertices): > 0 outside, <= 0 inside.
double hull_excess(const RealMatrix& vertices, const RealVector& p, double eps) {
  double worst = -1e300;
  for (const auto& [n, off] : supporting_planes(vertices, eps)) worst = std::max(worst, n.dot(p) - off);
  return worst;
}

RealMatrix select(const RealMatrix& pts, const std::vector<std::size_t>& idx) {
  RealMatrix out(pts.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = pts.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

TEST_CASE("unit square corners plus center") {
  RealMatrix p(2, 5);
  p << 0, 1, 1, 0, 0.5, 0, 0, 1, 1, 0.5;
  const HullResult h = convex_hull(p);
  CHECK(h.dimension == 2);
  CHECK(h.vertex_indices == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("octahedron vertices plus origin") {
  RealMatrix p = RealMatrix::Zero(3, 7);
  for (int i = 0; i < 3; ++i) {
    p(i, 2 * i) = 1;
    p(i, 2 * i + 1) = -1;
  }
  const HullResult h = convex_hull(p);
  CHECK(h.dimension == 3);
  CHECK(h.vertex_indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("one-dimensional hull is the extremes") {
  RealMatrix p(1, 5);
  p << 0.3, -1.0, 0.2, 2.0, 0.0;
  CHECK(convex_hull(p).vertex_indices == std::vector<std::size_t>{1, 3});
}

TEST_CASE("all 50 noiseless reduced sic4 grid points lie on the hull") {
  const ReducedData rd = reduce(center_data(born_matrix(build_standard(StandardPovm::kSic4), probe_grid())));
  REQUIRE(rd.rank == 3);
  CHECK(convex_hull(rd.reduced).vertex_indices.size() == 50);
}

TEST_CASE("degenerate clouds ask for a lower rank") {
  RealMatrix p(3, 6);
  p << 0, 1, 0, 1, 0.5, 0.2,  //
      0, 0, 1, 1, 0.5, 0.7,   //
      0, 0, 0, 0, 0.0, 0.0;
  try {
    convex_hull(p);
    FAIL("expected degenerate hull");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateHull);
    CHECK(std::string(e.what()).find("rank") != std::string::npos);
  }
  RealMatrix line(2, 3);
  line << 0, 1, 2, 0, 1, 2;
  CHECK_THROWS_AS(convex_hull(line), Error);
}

TEST_CASE("hull is deterministic and duplicate-free") {
  std::mt19937_64 rng(4);
  const RealMatrix p = testing_support::random_matrix(3, 40, rng);
  const auto a = convex_hull(p).vertex_indices;
  const auto b = convex_hull(p).vertex_indices;
  CHECK(a == b);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
  CHECK(std::is_sorted(a.begin(), a.end()));
}

TEST_CASE("property: every point lies inside the hull of the returned vertices") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {2, 3}) {
    for (int rep = 0; rep < 8; ++rep) {
      const int m = 8 + 3 * rep;
      RealMatrix p(dim, m);
      for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
      // a few points placed on the sphere so the hull has many vertices
      for (int j = 0; j < m / 3; ++j) p.col(j) = p.col(j).normalized();
      const HullResult h = convex_hull(p);
      const RealMatrix verts = select(p, h.vertex_indices);
      for (Eigen::Index j = 0; j < m; ++j) CHECK(hull_excess(verts, p.col(j), 1e-9) <= 1e-9);
      // every extreme point (outside the hull of the others) is reported
      for (Eigen::Index j = 0; j < m; ++j) {
        std::vector<std::size_t> others;
        for (Eigen::Index i = 0; i < m; ++i)
          if (i != j) others.push_back(static_cast<std::size_t>(i));
        if (hull_excess(select(p, others), p.col(j), 1e-9) > 1e-7)
          CHECK(std::binary_search(h.vertex_indices.begin(), h.vertex_indices.end(), static_cast<std::size_t>(j)));
      }
    }
  }
}

TEST_CASE("interior points are not on the boundary") {
  std::mt19937_64 rng(2);
  RealMatrix p(3, 31);
  for (int j = 0; j < 30; ++j) p.col(j) = testing_support::random_unit(rng);
  p.col(30) = Vector3(0.01, -0.02, 0.0);
  const auto v = convex_hull(p).vertex_indices;
  CHECK(std::find(v.begin(), v.end(), 30u) == v.end());
  CHECK(v.size() == 30);
}
