#pragma once
// Site coordinates and distance metrics.
//
// A PointSet stores one row per site. For the Euclidean metric the columns
// are planar (x, y); for Chordal and GreatCircle they are (lon, lat) in
// degrees on the unit sphere. Chordal distance is 2 sin(alpha/2) <= 2,
// great-circle distance is the central angle alpha <= pi.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fsbgl/common.hpp"

namespace fsbgl {

enum class Metric { Euclidean, Chordal, GreatCircle };

using PointSet = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Central angle between two (lon, lat) points given in degrees.
double central_angle(double lon1, double lat1, double lon2, double lat2);

double distance(const Eigen::RowVector2d& a, const Eigen::RowVector2d& b,
                Metric metric);

// Equally spaced cell-center grid on [0,1]^2: x_i = (i + 1/2) / nx.
// Cell centers keep the cosine basis columns numerically orthogonal.
PointSet grid_points(int nx, int ny);

// All unordered pairs (i < j) with distance(i, j) < radius, plus the
// distance. Uses cell binning for the Euclidean metric on larger sets,
// brute force otherwise. Deterministic output order (i, then j).
struct NeighborPair {
  int i, j;
  double d;
};
std::vector<NeighborPair> neighbor_pairs(const PointSet& pts, double radius,
                                         Metric metric);

}  // namespace fsbgl
