#include "fsbgl/points.hpp"

#include <algorithm>
#include <cmath>

namespace fsbgl {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

double central_angle(double lon1, double lat1, double lon2, double lat2) {
  // Haversine form: stable for small separations.
  const double phi1 = lat1 * kDegToRad, phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double sp = std::sin(0.5 * dphi), sl = std::sin(0.5 * dlam);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

double distance(const Eigen::RowVector2d& a, const Eigen::RowVector2d& b,
                Metric metric) {
  switch (metric) {
    case Metric::Euclidean:
      return (a - b).norm();
    case Metric::Chordal:
      return 2.0 * std::sin(0.5 * central_angle(a(0), a(1), b(0), b(1)));
    case Metric::GreatCircle:
      return central_angle(a(0), a(1), b(0), b(1));
  }
  throw domain_error("unknown metric");
}

PointSet grid_points(int nx, int ny) {
  if (nx <= 0 || ny <= 0) throw domain_error("grid dimensions must be positive");
  PointSet pts(static_cast<Eigen::Index>(nx) * ny, 2);
  Eigen::Index k = 0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix, ++k) {
      pts(k, 0) = (ix + 0.5) / nx;
      pts(k, 1) = (iy + 0.5) / ny;
    }
  return pts;
}

std::vector<NeighborPair> neighbor_pairs(const PointSet& pts, double radius,
                                         Metric metric) {
  const int n = static_cast<int>(pts.rows());
  std::vector<NeighborPair> out;
  if (radius <= 0.0 || n == 0) return out;

  if (metric != Metric::Euclidean || n <= 2048) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = distance(pts.row(i), pts.row(j), metric);
        if (d < radius) out.push_back({i, j, d});
      }
    return out;
  }

  // Uniform cell binning at the support radius.
  const double x0 = pts.col(0).minCoeff(), y0 = pts.col(1).minCoeff();
  const double x1 = pts.col(0).maxCoeff(), y1 = pts.col(1).maxCoeff();
  const int ncx = std::max(1, static_cast<int>((x1 - x0) / radius) + 1);
  const int ncy = std::max(1, static_cast<int>((y1 - y0) / radius) + 1);
  std::vector<std::vector<int>> cells(static_cast<size_t>(ncx) * ncy);
  auto cell_of = [&](int i) {
    int cx = std::min(ncx - 1, static_cast<int>((pts(i, 0) - x0) / radius));
    int cy = std::min(ncy - 1, static_cast<int>((pts(i, 1) - y0) / radius));
    return cy * ncx + cx;
  };
  for (int i = 0; i < n; ++i) cells[cell_of(i)].push_back(i);

  std::vector<int> cand;
  for (int i = 0; i < n; ++i) {
    const int ci = cell_of(i);
    const int cx = ci % ncx, cy = ci / ncx;
    cand.clear();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nxc = cx + dx, nyc = cy + dy;
        if (nxc < 0 || nxc >= ncx || nyc < 0 || nyc >= ncy) continue;
        for (int j : cells[static_cast<size_t>(nyc) * ncx + nxc])
          if (j > i) cand.push_back(j);
      }
    std::sort(cand.begin(), cand.end());
    for (int j : cand) {
      const double d = (pts.row(i) - pts.row(j)).norm();
      if (d < radius) out.push_back({i, j, d});
    }
  }
  return out;
}

}  // namespace fsbgl
