#include <doctest.h>

#include <random>

#include "imcabs/errors.hpp"
#include "imcabs/geometry.hpp"

using namespace imcabs;

TEST_CASE("partition_domain tiles the domain row-major") {
  const Box unit{{0, 1}, {0, 1}};
  SUBCASE("single cell") {
    const std::size_t res[] = {1, 1};
    const auto p = partition_domain(unit, res);
    REQUIRE(p.cell_count() == 1);
    CHECK(p.cells()[0] == unit);
    CHECK(p.unsafe_index() == 1);
    CHECK(p.state_count() == 2);
  }
  SUBCASE("2x2") {
    const std::size_t res[] = {2, 2};
    const auto p = partition_domain(unit, res);
    REQUIRE(p.cell_count() == 4);
    for (const auto& c : p.cells()) CHECK(c.volume() == doctest::Approx(0.25));
    CHECK(p.cells()[1] == Box{{0, 0.5}, {0.5, 1}});
    CHECK(p.cells()[2] == Box{{0.5, 1}, {0, 0.5}});
  }
  SUBCASE("[-2,2]^2 at 4x4 gives unit cells with integer corners") {
    const std::size_t res[] = {4, 4};
    const auto p = partition_domain(Box{{-2, 2}, {-2, 2}}, res);
    REQUIRE(p.cell_count() == 16);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const Box& c = p.cells()[i * 4 + j];
        CHECK(c[0] == Interval(-2.0 + i, -1.0 + i));
        CHECK(c[1] == Interval(-2.0 + j, -1.0 + j));
      }
    }
  }
}

TEST_CASE("partition_domain rejects zero resolution and is deterministic") {
  const Box d{{0, 3}, {1, 2}};
  const std::size_t bad[] = {0, 2};
  CHECK_THROWS_AS(partition_domain(d, bad), InvalidArgument);
  CHECK_THROWS_AS(Box({Interval(1.0, 0.0)}), InvalidArgument);
  const std::size_t res[] = {7, 3};
  const auto a = partition_domain(d, res);
  const auto b = partition_domain(d, res);
  CHECK(a.cells() == b.cells());
  double vol = 0.0;
  for (const auto& c : a.cells()) vol += c.volume();
  CHECK(std::abs(vol - d.volume()) <= 1e-9 * d.volume());
}

TEST_CASE("neighbouring grid cells share faces exactly") {
  const std::size_t res[] = {13};
  const auto p = partition_domain(Box{{0.1, 2.1}}, res);
  for (std::size_t i = 1; i < p.cell_count(); ++i) CHECK(p.cells()[i - 1][0].hi == p.cells()[i][0].lo);
  CHECK(p.cells().back()[0].hi == 2.1);
}

TEST_CASE("box_contains uses closed inclusion") {
  CHECK(box_contains(Box{{0, 1}}, Box{{0.2, 0.8}}));
  CHECK(box_contains(Box{{0, 1}}, Box{{0, 1}}));
  CHECK_FALSE(box_contains(Box{{0, 1}, {0, 1}}, Box{{0.5, 1.5}, {0, 1}}));
  CHECK_THROWS_AS(box_contains(Box{{0, 1}}, Box{{0, 1}, {0, 1}}), InvalidArgument);
}

TEST_CASE("box_intersects counts boundary contact") {
  CHECK(box_intersects(Box{{0, 1}}, Box{{1, 2}}));
  CHECK_FALSE(box_intersects(Box{{0, 1}}, Box{{2, 3}}));
  CHECK(box_intersects(Box{{0, 1}, {0, 1}}, Box{{0.5, 2}, {0.9, 3}}));
  CHECK_FALSE(box_interiors_intersect(Box{{0, 1}}, Box{{1, 2}}));
  CHECK_THROWS_AS(box_intersects(Box{{0, 1}}, Box{{0, 1}, {0, 1}}), InvalidArgument);
}

TEST_CASE("property: containment implies intersection") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 2000; ++t) {
    std::vector<Interval> a, b;
    for (int d = 0; d < 2; ++d) {
      double x = u(rng), y = u(rng), z = u(rng), w = u(rng);
      a.emplace_back(std::min(x, y), std::max(x, y));
      b.emplace_back(std::min(z, w), std::max(z, w));
    }
    const Box A(a), B(b);
    if (box_contains(A, B)) CHECK(box_intersects(A, B));
  }
}

TEST_CASE("locate finds the containing grid cell") {
  const std::size_t res[] = {4, 2};
  const auto p = partition_domain(Box{{0, 4}, {0, 2}}, res);
  Eigen::VectorXd x(2);
  x << 2.5, 0.5;
  REQUIRE(p.locate(x).has_value());
  CHECK(p.cells()[*p.locate(x)].contains_point(x));
  x << 4.5, 0.5;
  CHECK_FALSE(p.locate(x).has_value());
}

TEST_CASE("external partitions must cover the domain") {
  CHECK_NOTHROW(StatePartition(Box{{0, 2}}, {Box{{0, 1}}, Box{{1, 2}}}));
  CHECK_THROWS(StatePartition(Box{{0, 2}}, {Box{{0, 1}}}));
  CHECK_THROWS(StatePartition(Box{{0, 2}}, {Box{{0, 1}}, Box{{1, 3}}}));
}
