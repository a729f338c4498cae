#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "fsbgl/basis.hpp"
#include "fsbgl/common.hpp"
#include "fsbgl/covkernels.hpp"
#include "fsbgl/points.hpp"

using namespace fsbgl;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TEST_SUITE("basis") {

TEST_CASE("column counts") {
  BasisSpec cos_spec;
  cos_spec.kind = BasisKind::CosineTensor;
  cos_spec.m_max = 10;
  CHECK(cos_spec.column_count() == 121);
  cos_spec.m_max = 3;
  CHECK(cos_spec.column_count() == 16);

  BasisSpec lat;
  lat.kind = BasisKind::WendlandLattice;
  lat.levels = 1;
  CHECK(lat.column_count() == 4);
  lat.levels = 2;
  CHECK(lat.column_count() == 20);
  lat.levels = 3;
  CHECK(lat.column_count() == 84);
}

TEST_CASE("cosine entries follow the tensor formula and ordering") {
  BasisSpec spec;
  spec.kind = BasisKind::CosineTensor;
  spec.m_max = 4;
  PointSet pts(3, 2);
  pts << 0.13, 0.71, 0.0, 1.0, 0.5, 0.25;
  const Eigen::MatrixXd Psi = spec.evaluate(pts);
  REQUIRE(Psi.rows() == 3);
  REQUIRE(Psi.cols() == 25);
  const int k = spec.m_max + 1;
  for (int m = 0; m <= spec.m_max; ++m) {
    for (int nn = 0; nn <= spec.m_max; ++nn) {
      for (int i = 0; i < 3; ++i) {
        const double expect = 0.5 * std::cos(kTwoPi * m * pts(i, 0)) *
                              std::cos(kTwoPi * nn * pts(i, 1));
        CHECK(Psi(i, m * k + nn) == doctest::Approx(expect).epsilon(1e-14));
      }
    }
  }
  // Constant column is identically 1/2.
  CHECK((Psi.col(0).array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("cosine basis rejects points outside the unit square") {
  BasisSpec spec;
  spec.kind = BasisKind::CosineTensor;
  PointSet pts(1, 2);
  pts << 1.2, 0.5;
  CHECK_THROWS_AS(spec.evaluate(pts), domain_error);
  pts << 0.5, -0.01;
  CHECK_THROWS_AS(spec.evaluate(pts), domain_error);
}

TEST_CASE("cosine columns are orthogonal on a cell-center grid") {
  BasisSpec spec;
  spec.kind = BasisKind::CosineTensor;
  spec.m_max = 3;
  const int N = 20;
  const PointSet pts = grid_points(N, N);
  const Eigen::MatrixXd Psi = spec.evaluate(pts);
  const Eigen::MatrixXd G = Psi.transpose() * Psi;
  const int k = spec.m_max + 1;
  for (int a = 0; a < k * k; ++a) {
    for (int b = 0; b < k * k; ++b) {
      if (a == b) {
        const int m = a / k, nn = a % k;
        const double cm = (m == 0) ? N : N / 2.0;
        const double cn = (nn == 0) ? N : N / 2.0;
        CHECK(G(a, a) == doctest::Approx(0.25 * cm * cn).epsilon(1e-10));
      } else {
        CHECK(std::abs(G(a, b)) < 1e-8);
      }
    }
  }
}

TEST_CASE("lattice entries are wendland bumps at cell centers") {
  BasisSpec spec;
  spec.kind = BasisKind::WendlandLattice;
  spec.levels = 2;
  spec.overlap = 2.5;
  PointSet pts(4, 2);
  pts << 0.25, 0.25, 0.9, 0.1, 0.5, 0.5, 0.0, 0.0;
  const Eigen::MatrixXd Psi = spec.evaluate(pts);
  REQUIRE(Psi.cols() == 20);
  int col = 0;
  for (int l = 1; l <= 2; ++l) {
    const int side = 1 << l;
    const double spacing = 1.0 / side;
    const double radius = spec.overlap * spacing;
    for (int iy = 0; iy < side; ++iy) {
      for (int ix = 0; ix < side; ++ix, ++col) {
        const double cx = (ix + 0.5) * spacing;
        const double cy = (iy + 0.5) * spacing;
        for (int i = 0; i < 4; ++i) {
          const double d = std::hypot(pts(i, 0) - cx, pts(i, 1) - cy);
          CHECK(Psi(i, col) == doctest::Approx(wendland(d, radius)).epsilon(1e-14));
        }
      }
    }
  }
  // A point on a level-1 node sees that bump at full height.
  CHECK(Psi(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("lattice validation") {
  BasisSpec spec;
  spec.kind = BasisKind::WendlandLattice;
  spec.levels = 0;
  CHECK_THROWS_AS(spec.evaluate(grid_points(2, 2)), domain_error);
  spec.levels = 1;
  spec.overlap = 0.0;
  CHECK_THROWS_AS(spec.evaluate(grid_points(2, 2)), domain_error);
}

TEST_CASE("kind names round-trip") {
  CHECK(basis_kind_name(BasisKind::CosineTensor) == "cosine_tensor");
  CHECK(basis_kind_name(BasisKind::WendlandLattice) == "wendland_lattice");
  CHECK(basis_kind_from_name("cosine_tensor") == BasisKind::CosineTensor);
  CHECK(basis_kind_from_name("wendland_lattice") == BasisKind::WendlandLattice);
  CHECK_THROWS_AS(basis_kind_from_name("fourier"), domain_error);
}

}  // TEST_SUITE
