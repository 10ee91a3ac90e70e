#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wtn/trial_basis.hpp"

using namespace wtn;

namespace {

Eigen::MatrixX2d probe_points() {
  Eigen::MatrixX2d pts(5, 2);
  pts << 0.1, 0.2, 0.9, 0.8, 0.5, 0.5, 0.3, 0.7, 0.05, 0.95;
  return pts;
}

double fd_dx(const NeuralBasis& b, int col, const Vec2& p, double h) {
  Eigen::MatrixX2d pp(2, 2);
  pp << p.x + h, p.y, p.x - h, p.y;
  Eigen::MatrixXd v = b.eval(pp);
  return (v(0, col) - v(1, col)) / (2 * h);
}

double fd_dy(const NeuralBasis& b, int col, const Vec2& p, double h) {
  Eigen::MatrixX2d pp(2, 2);
  pp << p.x, p.y + h, p.x, p.y - h;
  Eigen::MatrixXd v = b.eval(pp);
  return (v(0, col) - v(1, col)) / (2 * h);
}

double fd_lap(const NeuralBasis& b, int col, const Vec2& p, double h) {
  Eigen::MatrixX2d pp(5, 2);
  pp << p.x + h, p.y, p.x - h, p.y, p.x, p.y + h, p.x, p.y - h, p.x, p.y;
  Eigen::MatrixXd v = b.eval(pp);
  return (v(0, col) + v(1, col) + v(2, col) + v(3, col) - 4.0 * v(4, col)) / (h * h);
}

void check_derivatives(const NeuralBasis& b, double grad_tol, double lap_tol) {
  const Eigen::MatrixX2d pts = probe_points();
  const BasisEval e = b.eval_all(pts, kEvalVal | kEvalGrad | kEvalLap);
  for (int i = 0; i < pts.rows(); ++i) {
    const Vec2 p{pts(i, 0), pts(i, 1)};
    for (int col : {0, 1, b.size() / 2, b.size() - 1}) {
      const double gx = fd_dx(b, col, p, 1e-6);
      const double gy = fd_dy(b, col, p, 1e-6);
      const double lp = fd_lap(b, col, p, 1e-5);
      CHECK(std::abs(e.gx(i, col) - gx) <= grad_tol * std::max(1.0, std::abs(gx)));
      CHECK(std::abs(e.gy(i, col) - gy) <= grad_tol * std::max(1.0, std::abs(gy)));
      CHECK(std::abs(e.lap(i, col) - lp) <= lap_tol * std::max(1.0, std::abs(lp)));
    }
  }
}

}  // namespace

TEST_CASE("feature values match a direct per-neuron recomputation", "[trial_basis]") {
  Domain d = Domain::rectangle({0.0, 0.0}, {1.0, 1.0});
  NeuralBasis b = build_transnet(20, 1.7, d, 99);
  REQUIRE(b.size() == 21);
  CHECK(b.center.x == 0.5);
  CHECK(b.center.y == 0.5);
  CHECK(b.radius == Catch::Approx(std::sqrt(0.5)).epsilon(1e-15));

  const Eigen::MatrixX2d pts = probe_points();
  const Eigen::MatrixXd V = b.eval(pts);
  for (int i = 0; i < pts.rows(); ++i) {
    CHECK(V(i, 0) == 1.0);
    for (int j = 0; j < b.features(); ++j) {
      const double zx = (pts(i, 0) - b.center.x) / b.radius;
      const double zy = (pts(i, 1) - b.center.y) / b.radius;
      const double expect = std::tanh(
          b.gammas[j] * (b.directions(j, 0) * zx + b.directions(j, 1) * zy + b.offsets[j]));
      CHECK(V(i, j + 1) == Catch::Approx(expect).margin(1e-15));
    }
  }
}

TEST_CASE("construction draws are valid and deterministic", "[trial_basis]") {
  Domain d = Domain::rectangle({-1.0, -1.0}, {1.0, 1.0});
  NeuralBasis a = build_transnet(300, 2.0, d, 5);
  NeuralBasis b = build_transnet(300, 2.0, d, 5);
  NeuralBasis c = build_transnet(300, 2.0, d, 6);
  CHECK((a.directions - b.directions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.offsets - b.offsets).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.directions - c.directions).cwiseAbs().maxCoeff() > 0.0);
  for (int j = 0; j < a.features(); ++j) {
    CHECK(std::abs(a.directions.row(j).norm() - 1.0) <= 1e-14);
    CHECK(a.offsets[j] >= 0.0);
    CHECK(a.offsets[j] < 1.0);
  }
  CHECK_THROWS_AS(build_transnet(0, 1.0, d, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_transnet(10, -1.0, d, 1), std::invalid_argument);
}

TEST_CASE("hyperplanes are uniformly distributed over the covering ball", "[trial_basis]") {
  Domain d = Domain::rectangle({0.0, 0.0}, {2.0, 1.0});
  const int M = 10000;
  NeuralBasis b = build_transnet(M, 1.0, d, 2024);
  // Distance of feature j's zero hyperplane from the ball center is
  // offset_j * radius, so the fraction inside the half-radius disk should be
  // the uniform fraction 1/2 within 3 sigma binomial noise.
  int hits = 0;
  for (int j = 0; j < M; ++j) {
    const double dist = b.offsets[j] * b.radius;
    if (dist < 0.5 * b.radius) ++hits;
  }
  const double frac = static_cast<double>(hits) / M;
  CHECK(std::abs(frac - 0.5) <= 3.0 * std::sqrt(0.25 / M));

  // Directions cover all four quadrants roughly evenly.
  int quad[4] = {0, 0, 0, 0};
  for (int j = 0; j < M; ++j) {
    const int q = (b.directions(j, 0) >= 0 ? 0 : 1) + (b.directions(j, 1) >= 0 ? 0 : 2);
    ++quad[q];
  }
  for (int q = 0; q < 4; ++q)
    CHECK(std::abs(quad[q] / static_cast<double>(M) - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / M));
}

TEST_CASE("gradients and laplacians match finite differences", "[trial_basis]") {
  Domain d = Domain::rectangle({0.0, 0.0}, {1.0, 1.0});
  check_derivatives(build_transnet(12, 1.7, d, 7), 1e-6, 1e-4);

  Eigen::VectorXd gam(12);
  for (int j = 0; j < 12; ++j) gam[j] = 0.5 + 0.5 * j;
  check_derivatives(build_transnet(12, gam, d, 8), 1e-6, 1e-4);
}

TEST_CASE("fourier map lift has constant norm and exact derivatives", "[trial_basis]") {
  FourierMap map = build_fourier_map(64, {1.0, 3.0}, 31);
  REQUIRE(map.P() == 64);

  Eigen::MatrixX2d pts(3, 2);
  pts << 0.0, 0.0, 0.37, 0.81, -0.25, 0.6;
  const Eigen::MatrixXd Y = map.lift(pts);
  REQUIRE(Y.cols() == 128);
  for (int i = 0; i < pts.rows(); ++i)
    CHECK(Y.row(i).norm() == Catch::Approx(8.0).epsilon(1e-13));
  // At the origin the lift is [1, ..., 1, 0, ..., 0].
  for (int p = 0; p < 64; ++p) {
    CHECK(Y(0, p) == 1.0);
    CHECK(Y(0, 64 + p) == 0.0);
  }

  // Frequency mixture: the first half is sampled with unit deviation, the
  // second with deviation 3.
  double v1 = 0.0, v2 = 0.0;
  for (int p = 0; p < 32; ++p) v1 += map.B.row(p).squaredNorm();
  for (int p = 32; p < 64; ++p) v2 += map.B.row(p).squaredNorm();
  v1 /= 64.0;
  v2 /= 64.0;
  CHECK(v1 < 3.0);
  CHECK(v2 > 4.0);

  // lift_deriv against finite differences.
  const double h = 1e-7;
  for (int k = 0; k < 2; ++k) {
    Eigen::MatrixX2d pp = pts, pm = pts;
    pp.col(k).array() += h;
    pm.col(k).array() -= h;
    const Eigen::MatrixXd fd = (map.lift(pp) - map.lift(pm)) / (2 * h);
    const Eigen::MatrixXd an = map.lift_deriv(pts, k);
    CHECK((fd - an).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("fourier basis offsets live on the lifted sphere scale", "[trial_basis]") {
  FourierMap map = build_fourier_map(64, {1.0, 3.0}, 31);
  NeuralBasis b = build_fourier_basis(150, Eigen::VectorXd::Constant(150, 1.0), map, 1.0, 77);
  REQUIRE(b.directions.cols() == 128);
  for (int j = 0; j < b.features(); ++j) {
    CHECK(std::abs(b.directions.row(j).norm() - 1.0) <= 1e-13);
    CHECK(b.offsets[j] >= 0.0);
    CHECK(b.offsets[j] <= 9.0);
  }
  CHECK(b.offsets.maxCoeff() > 6.0);  // offsets actually use the [0, sqrt(P)+1] range
  check_derivatives(b, 1e-6, 1e-4);
}

TEST_CASE("bubble wrap vanishes on the boundary and obeys the product rule",
          "[trial_basis]") {
  Domain d = Domain::rectangle({0.0, 0.0}, {1.0, 1.0});
  NeuralBasis plain = build_transnet(15, 1.3, d, 3);
  NeuralBasis wrapped = with_bubble(plain, d);

  Eigen::MatrixX2d bnd(4, 2);
  bnd << 0.0, 0.4, 1.0, 0.7, 0.3, 0.0, 0.6, 1.0;
  const Eigen::MatrixXd V = wrapped.eval(bnd);
  CHECK(V.cwiseAbs().maxCoeff() == 0.0);

  // Interior values are h(x) times the unwrapped values, constant included.
  Eigen::MatrixX2d pts = probe_points();
  const Eigen::MatrixXd Vw = wrapped.eval(pts);
  const Eigen::MatrixXd Vp = plain.eval(pts);
  for (int i = 0; i < pts.rows(); ++i) {
    const double h = pts(i, 0) * (1.0 - pts(i, 0)) * pts(i, 1) * (1.0 - pts(i, 1));
    for (int j = 0; j < wrapped.size(); ++j)
      CHECK(Vw(i, j) == Catch::Approx(h * Vp(i, j)).margin(1e-15));
  }

  check_derivatives(wrapped, 1e-6, 1e-4);

  Domain lshape = Domain::rect_union({Box{{-1.0, 0.0}, {0.0, 1.0}},
                                      Box{{0.0, 0.0}, {1.0, 1.0}}});
  CHECK_THROWS_AS(with_bubble(plain, lshape), std::invalid_argument);
}

TEST_CASE("mixed gammas split features into equal thirds", "[trial_basis]") {
  Eigen::VectorXd g = mixed_gammas(200, {1.0, 5.0, 10.0});
  int c1 = 0, c5 = 0, c10 = 0;
  for (int j = 0; j < 200; ++j) {
    if (g[j] == 1.0) ++c1;
    if (g[j] == 5.0) ++c5;
    if (g[j] == 10.0) ++c10;
  }
  CHECK(c1 + c5 + c10 == 200);
  CHECK(std::abs(c1 - c5) <= 1);
  CHECK(std::abs(c5 - c10) <= 1);
  CHECK(g[0] == 1.0);
  CHECK(g[199] == 10.0);

  Eigen::VectorXd g6 = mixed_gammas(6, {1.0, 5.0, 10.0});
  CHECK(g6[0] == 1.0);
  CHECK(g6[1] == 1.0);
  CHECK(g6[2] == 5.0);
  CHECK(g6[3] == 5.0);
  CHECK(g6[4] == 10.0);
  CHECK(g6[5] == 10.0);
}

TEST_CASE("pou basis weights one-sided values by chi", "[trial_basis]") {
  PartitionLayout layout;
  layout.subdomains = {Domain::rectangle({0.0, 0.0}, {0.5, 1.0}),
                       Domain::rectangle({0.5, 0.0}, {1.0, 1.0})};
  layout.interfaces = {{{0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0}, 0, 1}};

  std::vector<NeuralBasis> locals;
  locals.push_back(build_transnet(8, 1.0, layout.subdomains[0], 11));
  locals.push_back(build_transnet(8, 1.0, layout.subdomains[1], 12));
  PoUBasis pou(layout, std::move(locals));
  REQUIRE(pou.size() == 18);
  CHECK(pou.column_offset(0) == 0);
  CHECK(pou.column_offset(1) == 9);

  // Interior of subdomain 0: left block equals the local basis, right block 0.
  Eigen::MatrixX2d pts(3, 2);
  pts << 0.2, 0.3, 0.8, 0.6, 0.5, 0.4;
  const Eigen::MatrixXd V = pou.eval(pts);
  const Eigen::MatrixXd L0 = pou.local(0).eval(pts);
  const Eigen::MatrixXd L1 = pou.local(1).eval(pts);
  for (int j = 0; j < 9; ++j) {
    CHECK(V(0, j) == L0(0, j));
    CHECK(V(0, 9 + j) == 0.0);
    CHECK(V(1, j) == 0.0);
    CHECK(V(1, 9 + j) == L1(1, j));
    // On the interface both sides contribute with weight 1/2.
    CHECK(V(2, j) == 0.5 * L0(2, j));
    CHECK(V(2, 9 + j) == 0.5 * L1(2, j));
  }

  CHECK_THROWS_AS(PoUBasis(layout, {build_transnet(8, 1.0, layout.subdomains[0], 1)}),
                  std::invalid_argument);
}
