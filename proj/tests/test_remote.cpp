// Wire-protocol tests against an in-process HTTP model.
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <json.hpp>
#include <thread>

#include "geoda/attack.hpp"
#include "geoda/oracle.hpp"

using namespace geoda;
using nlohmann::json;

namespace {

// Serves a half-space classifier on C x H x W inputs: label 1 iff
// mean(x) > 0.6. Also exposes misbehaving variants under path prefixes.
class FakeModel {
 public:
  explicit FakeModel(ImageShape shape) : shape_(shape) {
    server_.Post("/predict", [this](const auto& req, auto& res) { single(req, res); });
    server_.Post("/predict_batch", [this](const auto& req, auto& res) { batch(req, res); });
    server_.Post("/broken/predict", [](const auto&, auto& res) { res.status = 500; });
    server_.Post("/slow/predict", [this](const auto& req, auto& res) {
      if (slow_calls_.fetch_add(1) == 0) std::this_thread::sleep_for(std::chrono::milliseconds(600));
      single(req, res);
    });
    server_.Post("/flaky/predict", [this](const auto& req, auto& res) {
      if (answered_ >= flaky_limit_) {
        res.status = 503;
        return;
      }
      single(req, res);
    });
    server_.Post("/flaky/predict_batch", [this](const auto& req, auto& res) {
      if (answered_ >= flaky_limit_) {
        res.status = 503;
        return;
      }
      batch(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeModel() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  std::atomic<std::uint64_t> answered_{0};
  std::atomic<std::uint64_t> batch_requests_{0};
  std::atomic<std::uint64_t> slow_calls_{0};
  std::uint64_t flaky_limit_ = 0;
  double min_seen_ = 1e300, max_seen_ = -1e300;

 private:
  bool shape_ok(const json& body, std::size_t n) const {
    return body.at("shape") == json::array({shape_.channels, shape_.height, shape_.width}) &&
           n == shape_.size();
  }

  int classify(const json& x) {
    double sum = 0;
    for (const auto& v : x) {
      const double d = v.get<double>();
      min_seen_ = std::min(min_seen_, d);
      max_seen_ = std::max(max_seen_, d);
      sum += d;
    }
    return sum / static_cast<double>(x.size()) > 0.6 ? 1 : 0;
  }

  void single(const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    if (!shape_ok(body, body.at("x").size())) {
      res.status = 400;
      res.set_content("bad shape", "text/plain");
      return;
    }
    res.set_content(json{{"label", classify(body.at("x"))}}.dump(), "application/json");
    ++answered_;
  }

  void batch(const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    json labels = json::array();
    for (const auto& x : body.at("xs")) {
      if (!shape_ok(body, x.size())) {
        res.status = 400;
        return;
      }
      labels.push_back(classify(x));
    }
    ++batch_requests_;
    answered_ += labels.size();
    res.set_content(json{{"labels", labels}}.dump(), "application/json");
  }

  ImageShape shape_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Point filled(std::size_t d, double v) { return Point(d, v); }

}  // namespace

TEST_CASE("remote single and batched predictions") {
  const ImageShape shape{1, 2, 2};
  FakeModel model(shape);
  RemoteOracle oracle(model.url(), shape, std::chrono::seconds(5), 3);
  CHECK(oracle.dimension() == 4);
  CHECK(oracle.top1(filled(4, 0.2)).id == 0);
  CHECK(oracle.top1(filled(4, 0.9)).id == 1);

  std::vector<Point> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(filled(4, i % 2 ? 0.9 : 0.1));
  const auto labels = oracle.top1_batch(xs);
  REQUIRE(labels.size() == 7);
  for (int i = 0; i < 7; ++i) CHECK(labels[i].id == static_cast<std::uint32_t>(i % 2));
  CHECK(model.batch_requests_ == 3);  // chunks of 3, 3, 1
  CHECK(model.answered_ == 9);
}

TEST_CASE("remote endpoint with a path prefix and trailing slash") {
  const ImageShape shape{1, 1, 2};
  FakeModel model(shape);
  RemoteOracle oracle(model.url("/flaky/"), shape, std::chrono::seconds(5));
  model.flaky_limit_ = 100;
  CHECK(oracle.top1(filled(2, 0.9)).id == 1);
}

TEST_CASE("session clips remote queries into the unit box") {
  const ImageShape shape{1, 1, 3};
  FakeModel model(shape);
  RemoteOracle oracle(model.url(), shape);
  QuerySession s(oracle, Point{0.1, 0.2, 0.3});
  (void)s.top1(Point{-2.0, 0.5, 7.0}, Phase::line_search);
  const std::vector<Point> batch{Point{-1.0, 3.0, 0.5}};
  (void)s.top1_batch(batch, Phase::estimation);
  CHECK(model.min_seen_ >= 0.0);
  CHECK(model.max_seen_ <= 1.0);
  CHECK(s.counts().total() == model.answered_);
}

TEST_CASE("remote error mapping") {
  const ImageShape shape{1, 2, 2};
  FakeModel model(shape);

  SUBCASE("HTTP 400 is a dimension mismatch") {
    RemoteOracle wrong(model.url(), ImageShape{1, 1, 5});
    try {
      (void)wrong.top1(filled(5, 0.5));
      FAIL("expected DimensionMismatch");
    } catch (const GeodaError& e) {
      CHECK(e.code() == ErrorCode::dimension_mismatch);
    }
  }
  SUBCASE("HTTP 500 is unavailable") {
    RemoteOracle broken(model.url("/broken"), shape);
    try {
      (void)broken.top1(filled(4, 0.5));
      FAIL("expected RemoteUnavailable");
    } catch (const GeodaError& e) {
      CHECK(e.code() == ErrorCode::remote_unavailable);
    }
  }
  SUBCASE("no listener is unavailable") {
    httplib::Server probe;
    const int port = probe.bind_to_any_port("127.0.0.1");
    probe.stop();
    RemoteOracle gone("http://127.0.0.1:" + std::to_string(port), shape,
                      std::chrono::milliseconds(300));
    try {
      (void)gone.top1(filled(4, 0.5));
      FAIL("expected RemoteUnavailable");
    } catch (const GeodaError& e) {
      CHECK(e.code() == ErrorCode::remote_unavailable);
    }
  }
  SUBCASE("wrong local dimension never reaches the wire") {
    RemoteOracle ok(model.url(), shape);
    CHECK_THROWS_AS(ok.top1(filled(3, 0.5)), GeodaError);
    CHECK(model.answered_ == 0);
  }
  SUBCASE("bad endpoints are configuration errors") {
    CHECK_THROWS_AS(RemoteOracle("ftp://x", shape), GeodaError);
    CHECK_THROWS_AS(RemoteOracle("localhost:80", shape), GeodaError);
  }
}

TEST_CASE("a timed-out request is retried once and counted once") {
  const ImageShape shape{1, 1, 2};
  FakeModel model(shape);
  RemoteOracle oracle(model.url("/slow"), shape, std::chrono::milliseconds(200));
  QuerySession s(oracle, filled(2, 0.9));
  CHECK(s.original_label().id == 1);
  CHECK(model.slow_calls_ == 2);
  CHECK(s.counts().total() == 1);
}

TEST_CASE("attack over the wire: accounting and clean abort") {
  const ImageShape shape{1, 2, 3};
  FakeModel model(shape);
  const Point x(6, 0.4);

  AttackConfig cfg;
  cfg.budget = 300;
  cfg.search.tol = 1e-5;

  SUBCASE("full run") {
    model.flaky_limit_ = 1000000;
    RemoteOracle oracle(model.url("/flaky"), shape);
    RandomSource rng(5);
    const AttackReport rep = geoda_attack(oracle, x, cfg, rng);
    CHECK(rep.converged);
    CHECK(rep.fooled);
    CHECK(rep.queries.total() == model.answered_);
    CHECK(rep.queries[Phase::estimation] == cfg.budget);
    // Analytic distance from x to the plane mean(x) = 0.6 is 0.2 * sqrt(6).
    CHECK(rep.final_lp() == doctest::Approx(0.2 * std::sqrt(6.0)).epsilon(0.02));
  }
  SUBCASE("model goes away mid-run") {
    model.flaky_limit_ = 150;
    RemoteOracle oracle(model.url("/flaky"), shape);
    RandomSource rng(5);
    const AttackReport rep = geoda_attack(oracle, x, cfg, rng);
    CHECK_FALSE(rep.converged);
    REQUIRE(rep.abort_code.has_value());
    CHECK(*rep.abort_code == ErrorCode::remote_unavailable);
    CHECK(rep.queries.total() == model.answered_);
  }
}
