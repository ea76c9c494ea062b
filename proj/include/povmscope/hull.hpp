#pragma once

#include <cstddef>
#include <vector>

#include "povmscope/linalg.hpp"

namespace povmscope {

// Points of an r-dimensional cloud (r = 1, 2 or 3) lying on the boundary of
// its convex hull. Indices refer to columns of the input, ascending and
// duplicate-free. Coincident copies of a hull vertex, and points lying on a
// hull facet, are reported as boundary points as well.
struct HullResult {
  std::vector<std::size_t> vertex_indices;
  int dimension = 0;
  // Outward facet half-spaces normal.dot(x) <= offset, one column per facet.
  RealMatrix facet_normals;
  RealVector facet_offsets;
};

// points: r x m, one point per column. tolerance is relative to the extent of
// the cloud. Throws ErrorKind::kDegenerateHull when the affine dimension of the
// cloud is below r.
HullResult convex_hull(const RealMatrix& points, double tolerance = 1e-9);

}  // namespace povmscope
