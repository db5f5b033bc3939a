#include <doctest.h>

#include <cmath>

#include "geoda/search.hpp"

using namespace geoda;

namespace {

// 1-D step function flipping at `at`.
LinearOracle step_at(double at) { return LinearOracle(Point{1.0}, -at); }

}  // namespace

TEST_CASE("bisect_to_boundary on a step function") {
  const auto oracle = step_at(0.5);
  QuerySession s(oracle, Point{0.0});
  SearchConfig cfg;
  cfg.tol = std::ldexp(1.0, -10);
  const auto before = s.counts().total();
  const Point b = bisect_to_boundary(s, Point{0.0}, Point{1.0}, cfg);
  CHECK(s.counts().total() - before == 10);
  CHECK(b[0] >= 0.5);
  CHECK(b[0] <= 0.5 + cfg.tol);
  // Bracketing witnesses.
  CHECK(s.is_adversarial(b, Phase::binary_search));
  CHECK_FALSE(s.is_adversarial(Point{b[0] - cfg.tol}, Phase::binary_search));
}

TEST_CASE("bisect_to_boundary query count is ceil(log2(1/tol))") {
  const auto oracle = step_at(0.3);
  for (double tol : {0.1, 0.01, 1e-4, 3e-7}) {
    QuerySession s(oracle, Point{0.0});
    SearchConfig cfg;
    cfg.tol = tol;
    (void)bisect_to_boundary(s, Point{0.0}, Point{1.0}, cfg);
    CHECK(s.counts()[Phase::binary_search] - 1 ==
          static_cast<std::uint64_t>(std::ceil(std::log2(1.0 / tol))));
  }
}

TEST_CASE("bisect_to_boundary returns x_adv when already within tol") {
  const auto oracle = step_at(0.5);
  QuerySession s(oracle, Point{0.0});
  SearchConfig cfg;
  cfg.tol = 1e-3;
  const Point adv{0.5 + 1e-4};
  CHECK(bisect_to_boundary(s, Point{0.5 - 1e-4}, adv, cfg) == adv);
  CHECK(s.counts().total() == 1);
}

TEST_CASE("bisect_to_boundary along a radial segment of a ball") {
  BallOracle ball(Point{0.0, 0.0}, 10.0);
  QuerySession s(ball, Point{3.0, 4.0});
  SearchConfig cfg;
  cfg.tol = 1e-6;
  const Point far{9.0, 12.0};  // radius 15
  const Point b = bisect_to_boundary(s, Point{3.0, 4.0}, far, cfg);
  const double seglen = 10.0;
  CHECK(l2_norm(b) >= 10.0);
  CHECK(l2_norm(b) <= 10.0 + cfg.tol * seglen);
}

TEST_CASE("initial boundary point on a ball") {
  BallOracle ball(Point{0.0, 0.0}, 1.0);
  QuerySession s(ball, Point{0.5, 0.0});
  RandomSource rng(11);
  SearchConfig cfg;
  cfg.tol = 1e-6;
  const Point x0 = find_initial_boundary_point(s, rng, cfg);
  CHECK(std::abs(l2_norm(x0) - 1.0) < 1e-5);
  CHECK(s.is_adversarial(x0, Phase::binary_search));
  CHECK(s.counts()[Phase::estimation] == 0);
  CHECK(s.counts()[Phase::line_search] == 0);
}

TEST_CASE("initial boundary point on a hyperplane") {
  LinearOracle lin(Point{1.0, 0.0}, -1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QuerySession s(lin, Point{0.0, 0.0});
    RandomSource rng(seed);
    SearchConfig cfg;
    cfg.tol = 1e-6;
    const Point x0 = find_initial_boundary_point(s, rng, cfg);
    CHECK(x0[0] >= 1.0);
    // The crossing sits tol away along the walk, at most tol in x0[0].
    CHECK(x0[0] <= 1.0 + cfg.tol);
  }
}

TEST_CASE("initial boundary point when x is within tol of the boundary") {
  const auto oracle = step_at(1.0);
  SearchConfig cfg;
  cfg.tol = 1e-3;
  const Point x{1.0 - 0.5e-3};
  QuerySession s(oracle, x);
  RandomSource rng(1);
  const Point x0 = find_initial_boundary_point(s, rng, cfg);
  CHECK(std::abs(x0[0] - x[0]) <= 2 * cfg.tol);
  CHECK(s.is_adversarial(x0, Phase::binary_search));
}

TEST_CASE("initial boundary point fails when nothing flips") {
  BallOracle huge(Point{0.0, 0.0}, 1e12);
  QuerySession s(huge, Point{1.0, 1.0});
  RandomSource rng(1);
  SearchConfig cfg;
  cfg.max_steps = 10;
  cfg.max_restarts = 3;
  try {
    (void)find_initial_boundary_point(s, rng, cfg);
    FAIL("expected NoAdversarialFound");
  } catch (const GeodaError& e) {
    CHECK(e.code() == ErrorCode::no_adversarial_found);
  }
  // Two probes per radius, max_steps radii, max_restarts directions, +1 label.
  CHECK(s.counts().total() == 1 + 2 * 10 * 3);
}

TEST_CASE("line search radius") {
  SearchConfig cfg;
  cfg.tol = 1e-6;

  SUBCASE("axis-aligned crossing") {
    LinearOracle lin(Point{0.0, 1.0}, -1.0);
    QuerySession s(lin, Point{0.0, 0.0});
    for (double hint : {0.01, 1.0, 37.0}) {
      const double r = line_search_radius(s, Point{0.0, 1.0}, hint, cfg);
      CHECK(r >= 1.0);
      CHECK(r <= 1.0 + 1e-6 * r);
    }
    CHECK(s.counts()[Phase::estimation] == 0);
    CHECK(s.counts()[Phase::line_search] > 0);
  }
  SUBCASE("ball, radial direction") {
    BallOracle ball(Point{0.0, 0.0}, 10.0);
    QuerySession s(ball, Point{9.0, 0.0});
    const auto br = line_search_bracket(s, Point{1.0, 0.0}, 3.0, cfg);
    CHECK(br.adversarial == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(br.adversarial - br.clean <= cfg.tol * br.adversarial);
    CHECK(s.is_adversarial(Point{9.0 + br.adversarial, 0.0}, Phase::line_search));
    CHECK_FALSE(s.is_adversarial(Point{9.0 + br.clean, 0.0}, Phase::line_search));
  }
  SUBCASE("pointing away from the boundary") {
    LinearOracle lin(Point{0.0, 1.0}, -1.0);
    QuerySession s(lin, Point{0.0, 0.0});
    try {
      (void)line_search_radius(s, Point{0.0, -1.0}, 1.0, cfg);
      FAIL("expected NoCrossingFound");
    } catch (const GeodaError& e) {
      CHECK(e.code() == ErrorCode::no_crossing_found);
    }
    CHECK(s.counts()[Phase::line_search] == static_cast<std::uint64_t>(1 + cfg.max_steps));
  }
  SUBCASE("bad hint") {
    LinearOracle lin(Point{0.0, 1.0}, -1.0);
    QuerySession s(lin, Point{0.0, 0.0});
    CHECK_THROWS_AS(line_search_radius(s, Point{0.0, 1.0}, 0.0, cfg), GeodaError);
  }
}

TEST_CASE("search config validation") {
  SearchConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), GeodaError);
  cfg = {};
  cfg.init_radius_growth = 1.0;
  CHECK_THROWS_AS(cfg.validate(), GeodaError);
  cfg = {};
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), GeodaError);
}
