#include <doctest.h>

#include <thread>

#include "geoda/oracle.hpp"

using namespace geoda;

TEST_CASE("linear oracle labels and the tie rule") {
  LinearOracle lin(Point{2.0, 0.0}, -2.0);  // x0 > 1 is outside
  CHECK(lin.normal() == Point{1.0, 0.0});
  CHECK(lin.offset() == doctest::Approx(-1.0));
  CHECK(lin.top1(Point{0.0, 5.0}).id == 0);
  CHECK(lin.top1(Point{1.5, 0.0}).id == 1);
  CHECK(lin.top1(Point{1.0, 3.0}).id == 0);  // on the hyperplane
  CHECK_THROWS_AS(lin.top1(Point{1.0}), GeodaError);
  CHECK_THROWS_AS(LinearOracle(Point{0.0, 0.0}, 1.0), GeodaError);
}

TEST_CASE("ball oracle includes its surface") {
  BallOracle ball(Point{0.0, 0.0}, 1.0, Label{3}, Label{8});
  CHECK(ball.top1(Point{0.5, 0.0}).id == 3);
  CHECK(ball.top1(Point{1.0, 0.0}).id == 3);
  CHECK(ball.top1(Point{1.0, 0.1}).id == 8);
  CHECK_THROWS_AS(BallOracle(Point{0.0}, -1.0), GeodaError);
}

TEST_CASE("session charges every query to its phase") {
  LinearOracle lin(Point{1.0, 0.0}, -1.0);
  CountingOracle counted(lin);
  QuerySession s(counted, Point{0.0, 0.0});
  CHECK(s.original_label().id == 0);
  CHECK(s.counts()[Phase::binary_search] == 1);

  CHECK(s.is_adversarial(Point{2.0, 0.0}, Phase::line_search));
  CHECK_FALSE(s.is_adversarial(Point{0.5, 0.0}, Phase::estimation));
  const std::vector<Point> batch{Point{2.0, 0.0}, Point{0.0, 1.0}, Point{3.0, 3.0}};
  const auto flags = s.is_adversarial_batch(batch, Phase::sparse_search);
  CHECK(flags == std::vector<char>{1, 0, 1});

  const QueryCounts c = s.counts();
  CHECK(c[Phase::estimation] == 1);
  CHECK(c[Phase::binary_search] == 1);
  CHECK(c[Phase::line_search] == 1);
  CHECK(c[Phase::sparse_search] == 3);
  CHECK(c.total() == 6);
  CHECK(counted.calls() == c.total());
}

TEST_CASE("estimation limit stops queries before they reach the oracle") {
  LinearOracle lin(Point{1.0}, -1.0);
  CountingOracle counted(lin);
  QuerySession s(counted, Point{0.0});
  s.set_estimation_limit(2);
  (void)s.top1(Point{0.1}, Phase::estimation);
  const std::vector<Point> two{Point{0.2}, Point{0.3}};
  try {
    (void)s.top1_batch(two, Phase::estimation);
    FAIL("expected BudgetExhausted");
  } catch (const GeodaError& e) {
    CHECK(e.code() == ErrorCode::budget_exhausted);
  }
  CHECK(s.counts()[Phase::estimation] == 1);
  CHECK(counted.calls() == 2);
  // Other phases are not limited.
  (void)s.top1(Point{0.4}, Phase::line_search);
  (void)s.top1(Point{0.5}, Phase::estimation);
  CHECK(counted.calls() == s.counts().total());
}

TEST_CASE("session rejects a mismatched original") {
  LinearOracle lin(Point{1.0, 0.0}, 0.0);
  CHECK_THROWS_AS(QuerySession(lin, Point{1.0}), GeodaError);
}

TEST_CASE("counter is safe under concurrent use") {
  QueryCounter counter;
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&] {
      for (int i = 0; i < 10000; ++i) counter.add(Phase::estimation);
    });
  }
  for (auto& t : pool) t.join();
  CHECK(counter.total() == 80000);
}

TEST_CASE("analytic minimal perturbations") {
  LinearOracle lin(Point{3.0, 4.0}, -10.0);  // distance from 0 is 2
  auto a = min_perturbation_analytic(lin, Point{0.0, 0.0});
  CHECK(a.distance == doctest::Approx(2.0));
  CHECK(a.direction[0] == doctest::Approx(0.6));
  CHECK(a.direction[1] == doctest::Approx(0.8));

  BallOracle ball(Point{0.0, 0.0}, 10.0);
  auto inside = min_perturbation_analytic(ball, Point{9.0, 0.0});
  CHECK(inside.distance == doctest::Approx(1.0));
  CHECK(inside.direction[0] == doctest::Approx(1.0));
  auto outside = min_perturbation_analytic(ball, Point{0.0, 11.0});
  CHECK(outside.distance == doctest::Approx(1.0));
  CHECK(outside.direction[1] == doctest::Approx(-1.0));
  auto centre = min_perturbation_analytic(ball, Point{0.0, 0.0});
  CHECK(centre.distance == doctest::Approx(10.0));

  CountingOracle wrapped(lin);
  try {
    (void)min_perturbation_analytic(wrapped, Point{0.0, 0.0});
    FAIL("expected UnsupportedOracle");
  } catch (const GeodaError& e) {
    CHECK(e.code() == ErrorCode::unsupported_oracle);
  }
}
