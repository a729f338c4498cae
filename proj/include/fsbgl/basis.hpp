#pragma once
// Basis evaluation matrices for the low-rank component.
//
// Column ordering is a stable public contract: cosine columns enumerate
// (m, n) row-major (column index = m*(m_max+1)+n); lattice columns run
// coarse to fine, nodes in row-major (iy, ix) order within a level.

#include <Eigen/Dense>
#include <string>

#include "fsbgl/points.hpp"

namespace fsbgl {

enum class BasisKind { CosineTensor, WendlandLattice };

std::string basis_kind_name(BasisKind kind);
BasisKind basis_kind_from_name(const std::string& name);

struct BasisSpec {
  BasisKind kind = BasisKind::CosineTensor;
  int m_max = 10;        // CosineTensor
  int levels = 1;        // WendlandLattice
  double overlap = 2.5;  // WendlandLattice: radius = overlap * node spacing

  int column_count() const;
  Eigen::MatrixXd evaluate(const PointSet& locations) const;
  std::string describe() const;
};

// Entry = 1/2 cos(2*pi*m*x) cos(2*pi*n*y); (m_max+1)^2 columns.
Eigen::MatrixXd cosine_basis(const PointSet& locations, int m_max);

// Level l in 1..levels places Wendland bumps on a 2^l x 2^l cell-center
// lattice over [0,1]^2 with radius overlap * 2^-l.
Eigen::MatrixXd wendland_lattice_basis(const PointSet& locations, int levels,
                                       double overlap);

}  // namespace fsbgl
