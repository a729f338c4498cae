#include "fsbgl/basis.hpp"

#include <cmath>
#include <sstream>

#include "fsbgl/covkernels.hpp"

namespace fsbgl {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::string basis_kind_name(BasisKind kind) {
  switch (kind) {
    case BasisKind::CosineTensor: return "cosine_tensor";
    case BasisKind::WendlandLattice: return "wendland_lattice";
  }
  throw domain_error("unknown basis kind");
}

BasisKind basis_kind_from_name(const std::string& name) {
  if (name == "cosine_tensor") return BasisKind::CosineTensor;
  if (name == "wendland_lattice") return BasisKind::WendlandLattice;
  throw domain_error("unknown basis kind: " + name);
}

Eigen::MatrixXd cosine_basis(const PointSet& locations, int m_max) {
  if (m_max < 0) throw domain_error("cosine_basis: m_max must be >= 0");
  const Eigen::Index n = locations.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (locations(i, 0) < 0.0 || locations(i, 0) > 1.0 ||
        locations(i, 1) < 0.0 || locations(i, 1) > 1.0)
      throw domain_error("cosine_basis: locations must lie in [0,1]^2");

  const int k = m_max + 1;
  // Tensor structure: precompute cos(2 pi m x) and cos(2 pi n y) tables.
  Eigen::MatrixXd cx(n, k), cy(n, k);
  for (int m = 0; m < k; ++m)
    for (Eigen::Index i = 0; i < n; ++i) {
      cx(i, m) = std::cos(kTwoPi * m * locations(i, 0));
      cy(i, m) = std::cos(kTwoPi * m * locations(i, 1));
    }
  Eigen::MatrixXd Psi(n, static_cast<Eigen::Index>(k) * k);
  for (int m = 0; m < k; ++m)
    for (int nn = 0; nn < k; ++nn)
      Psi.col(static_cast<Eigen::Index>(m) * k + nn) =
          0.5 * cx.col(m).cwiseProduct(cy.col(nn));
  return Psi;
}

Eigen::MatrixXd wendland_lattice_basis(const PointSet& locations, int levels,
                                       double overlap) {
  if (levels < 1) throw domain_error("wendland_lattice_basis: levels must be >= 1");
  if (!(overlap > 0.0))
    throw domain_error("wendland_lattice_basis: overlap must be positive");
  const Eigen::Index n = locations.rows();
  Eigen::Index cols = 0;
  for (int l = 1; l <= levels; ++l)
    cols += static_cast<Eigen::Index>(1) << (2 * l);
  Eigen::MatrixXd Psi(n, cols);
  Eigen::Index col = 0;
  for (int l = 1; l <= levels; ++l) {
    const int side = 1 << l;
    const double spacing = 1.0 / side;
    const double radius = overlap * spacing;
    for (int iy = 0; iy < side; ++iy)
      for (int ix = 0; ix < side; ++ix, ++col) {
        const double cxn = (ix + 0.5) * spacing;
        const double cyn = (iy + 0.5) * spacing;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double dx = locations(i, 0) - cxn;
          const double dy = locations(i, 1) - cyn;
          Psi(i, col) = wendland(std::sqrt(dx * dx + dy * dy), radius);
        }
      }
  }
  return Psi;
}

int BasisSpec::column_count() const {
  if (kind == BasisKind::CosineTensor) return (m_max + 1) * (m_max + 1);
  int cols = 0;
  for (int l = 1; l <= levels; ++l) cols += 1 << (2 * l);
  return cols;
}

Eigen::MatrixXd BasisSpec::evaluate(const PointSet& locations) const {
  return kind == BasisKind::CosineTensor
             ? cosine_basis(locations, m_max)
             : wendland_lattice_basis(locations, levels, overlap);
}

std::string BasisSpec::describe() const {
  std::ostringstream os;
  if (kind == BasisKind::CosineTensor)
    os << "cosine_tensor(m_max=" << m_max << ")";
  else
    os << "wendland_lattice(levels=" << levels << ", overlap=" << overlap << ")";
  return os.str();
}

}  // namespace fsbgl
