#include "geoda/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>

namespace geoda {

using nlohmann::json;

std::size_t OracleSpec::dimension() const {
  switch (kind) {
    case OracleKind::linear: return normal.dim();
    case OracleKind::ball: return center.dim();
    case OracleKind::remote: return shape.size();
  }
  return 0;
}

namespace {

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw GeodaError(ErrorCode::config_error, where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) config_fail(where, "expected an object");
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  require_object(j, where);
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) config_fail(where, "unknown key \"" + k + "\"");
  }
}

template <typename T>
T read(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) config_fail(where, std::string("missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(where + "." + key, "wrong type");
  }
}

template <typename T>
T read_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return read<T>(j, key, where);
}

std::size_t read_count(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    config_fail(where + "." + key, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t read_count_or(const json& j, const char* key, const std::string& where,
                          std::size_t fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return read_count(j, key, where);
}

Point read_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_fail(where, "expected a non-empty array of numbers");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) config_fail(where, "expected numbers");
    v.push_back(e.get<double>());
  }
  try {
    return Point(std::move(v));
  } catch (const GeodaError& e) {
    config_fail(where, e.what());
  }
}

ImageShape read_shape(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) config_fail(where, "expected [channels, height, width]");
  ImageShape s;
  std::size_t* dims[3] = {&s.channels, &s.height, &s.width};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer() || j[i].get<long long>() <= 0) {
      config_fail(where, "shape entries must be positive integers");
    }
    *dims[i] = j[i].get<std::size_t>();
  }
  return s;
}

PNorm read_p(const json& j, const std::string& where) {
  try {
    if (j.is_string()) return PNorm::parse(j.get<std::string>());
    if (j.is_number()) return PNorm(j.get<double>());
  } catch (const GeodaError& e) {
    config_fail(where, e.what());
  }
  config_fail(where, "expected a number >= 1 or \"inf\"");
}

// A scalar (broadcast) or a point of dimension d.
Point read_bound(const json& j, std::size_t d, const std::string& where) {
  if (j.is_number()) return Point(d, j.get<double>());
  Point p = read_point(j, where);
  if (p.dim() != d) config_fail(where, "dimension does not match the oracle");
  return p;
}

OracleSpec parse_oracle(const json& j, const std::optional<std::string>& env_endpoint) {
  const std::string where = "oracle";
  require_object(j, where);
  const std::string kind = read<std::string>(j, "kind", where);
  OracleSpec o;
  if (kind == "linear") {
    allow_keys(j, where, {"kind", "normal", "offset"});
    o.kind = OracleKind::linear;
    o.normal = read_point(j.at("normal"), "oracle.normal");
    if (!(l2_norm(o.normal) > 0.0)) config_fail("oracle.normal", "must be non-zero");
    o.offset = read_or<double>(j, "offset", where, 0.0);
  } else if (kind == "ball") {
    allow_keys(j, where, {"kind", "center", "dim", "radius"});
    o.kind = OracleKind::ball;
    o.radius = read<double>(j, "radius", where);
    if (!(o.radius > 0.0)) config_fail("oracle.radius", "must be > 0");
    if (j.contains("center")) {
      o.center = read_point(j.at("center"), "oracle.center");
      if (j.contains("dim") && read_count(j, "dim", where) != o.center.dim()) {
        config_fail(where, "dim does not match center");
      }
    } else {
      if (!j.contains("dim")) config_fail(where, "ball needs \"center\" or \"dim\"");
      const std::size_t d = read_count(j, "dim", where);
      if (d == 0) config_fail("oracle.dim", "must be >= 1");
      o.center = Point(d, 0.0);
    }
  } else if (kind == "remote") {
    allow_keys(j, where, {"kind", "endpoint", "shape", "timeout_ms", "max_batch"});
    o.kind = OracleKind::remote;
    o.endpoint = env_endpoint.value_or(read_or<std::string>(j, "endpoint", where, ""));
    if (o.endpoint.empty()) {
      config_fail(where, std::string("remote oracle needs \"endpoint\" (or ") + kEndpointEnv + ")");
    }
    if (o.endpoint.rfind("http://", 0) != 0) {
      config_fail("oracle.endpoint", "must start with http://");
    }
    if (!j.contains("shape")) config_fail(where, "remote oracle needs \"shape\"");
    o.shape = read_shape(j.at("shape"), "oracle.shape");
    o.timeout_ms = static_cast<std::uint32_t>(read_count_or(j, "timeout_ms", where, 30000));
    o.max_batch = read_count_or(j, "max_batch", where, 64);
    if (o.timeout_ms == 0 || o.max_batch == 0) {
      config_fail(where, "timeout_ms and max_batch must be >= 1");
    }
  } else {
    config_fail("oracle.kind", "expected linear, ball or remote, got \"" + kind + "\"");
  }
  return o;
}

CovariancePrior parse_prior(const json& j, const OracleSpec& oracle) {
  const std::string where = "attack.prior";
  require_object(j, where);
  const std::string kind = read<std::string>(j, "kind", where);
  const std::size_t d = oracle.dimension();
  try {
    if (kind == "identity") {
      allow_keys(j, where, {"kind"});
      return CovariancePrior::identity();
    }
    if (kind == "subspace") {
      allow_keys(j, where, {"kind", "m", "shape"});
      ImageShape shape = oracle.kind == OracleKind::remote ? oracle.shape : ImageShape{1, 1, d};
      if (j.contains("shape")) shape = read_shape(j.at("shape"), where + ".shape");
      if (shape.size() != d) config_fail(where + ".shape", "does not match the oracle dimension");
      const std::size_t m = read_count(j, "m", where);
      return CovariancePrior::subspace(
          std::make_shared<DctBasis>(shape.height, shape.width, shape.channels, m));
    }
    if (kind == "transfer") {
      allow_keys(j, where, {"kind", "beta", "direction"});
      const Point g = read_point(j.at("direction"), where + ".direction");
      if (g.dim() != d) config_fail(where + ".direction", "dimension does not match the oracle");
      if (!(l2_norm(g) > 0.0)) config_fail(where + ".direction", "must be non-zero");
      return CovariancePrior::transfer(g, read<double>(j, "beta", where));
    }
  } catch (const GeodaError& e) {
    if (e.code() == ErrorCode::config_error) throw;
    config_fail(where, e.what());
  }
  config_fail(where + ".kind", "expected identity, subspace or transfer, got \"" + kind + "\"");
}

AttackConfig parse_attack(const json& j, const OracleSpec& oracle) {
  const std::string where = "attack";
  allow_keys(j, where,
             {"p", "budget", "lambda", "first_iter_floor", "iterations", "prior", "sigma",
              "momentum", "zeta", "lower", "upper", "ranking", "search", "calibration"});
  const std::size_t d = oracle.dimension();
  AttackConfig a;
  if (!j.contains("p")) config_fail(where, "missing \"p\"");
  a.p = read_p(j.at("p"), "attack.p");
  if (!j.contains("budget")) config_fail(where, "missing \"budget\"");
  a.budget = read_count(j, "budget", where);
  a.lambda = read_or<double>(j, "lambda", where, 0.6);
  a.first_iter_floor = read_count_or(j, "first_iter_floor", where, 70);
  if (j.contains("iterations") && !j.at("iterations").is_null()) {
    a.iterations = read_count(j, "iterations", where);
  }
  if (j.contains("prior")) a.prior = parse_prior(j.at("prior"), oracle);
  if (j.contains("sigma") && !j.at("sigma").is_null()) a.sigma = read<double>(j, "sigma", where);
  a.momentum = read_or<double>(j, "momentum", where, 0.0);
  a.zeta = read_or<double>(j, "zeta", where, 0.0);
  if (j.contains("lower")) a.lower = read_bound(j.at("lower"), d, "attack.lower");
  if (j.contains("upper")) a.upper = read_bound(j.at("upper"), d, "attack.upper");
  const std::string ranking = read_or<std::string>(j, "ranking", where, "gain");
  if (ranking == "gain") {
    a.ranking = SparseRanking::gain;
  } else if (ranking == "magnitude") {
    a.ranking = SparseRanking::magnitude;
  } else {
    config_fail("attack.ranking", "expected gain or magnitude");
  }
  if (j.contains("search")) {
    const json& s = j.at("search");
    allow_keys(s, "attack.search", {"tol", "max_steps", "growth", "max_restarts"});
    a.search.tol = read_or<double>(s, "tol", "attack.search", a.search.tol);
    a.search.max_steps =
        static_cast<int>(read_count_or(s, "max_steps", "attack.search", a.search.max_steps));
    a.search.init_radius_growth =
        read_or<double>(s, "growth", "attack.search", a.search.init_radius_growth);
    a.search.max_restarts = static_cast<int>(
        read_count_or(s, "max_restarts", "attack.search", a.search.max_restarts));
  }
  if (j.contains("calibration")) {
    const json& c = j.at("calibration");
    const std::string cw = "attack.calibration";
    allow_keys(c, cw, {"pilot_size", "low", "high", "max_rounds", "initial_sigma"});
    a.calibration.pilot_size = read_count_or(c, "pilot_size", cw, a.calibration.pilot_size);
    a.calibration.low = read_or<double>(c, "low", cw, a.calibration.low);
    a.calibration.high = read_or<double>(c, "high", cw, a.calibration.high);
    a.calibration.max_rounds = read_count_or(c, "max_rounds", cw, a.calibration.max_rounds);
    if (c.contains("initial_sigma") && !c.at("initial_sigma").is_null()) {
      a.calibration.initial_sigma = read<double>(c, "initial_sigma", cw);
    }
    if (a.calibration.pilot_size == 0 || a.calibration.max_rounds == 0 ||
        !(0.0 <= a.calibration.low && a.calibration.low <= a.calibration.high &&
          a.calibration.high <= 1.0)) {
      config_fail(cw, "need pilot_size, max_rounds >= 1 and 0 <= low <= high <= 1");
    }
  }
  try {
    a.validate(d);
  } catch (const GeodaError& e) {
    config_fail(where, e.what());
  }
  if (a.p.value() == 1.0) {
    const Point lo = a.lower.value_or(Point(d, 0.0));
    const Point hi = a.upper.value_or(Point(d, 1.0));
    for (std::size_t i = 0; i < d; ++i) {
      if (!(lo[i] <= hi[i])) config_fail(where, "lower must not exceed upper");
    }
  }
  return a;
}

DatasetSpec parse_dataset(const json& j, const OracleSpec& oracle) {
  const std::string where = "dataset";
  require_object(j, where);
  const std::string kind = read<std::string>(j, "kind", where);
  DatasetSpec ds;
  if (kind == "synthetic") {
    allow_keys(j, where, {"kind", "count", "distance", "seed"});
    ds.kind = DatasetKind::synthetic;
    ds.count = read_count_or(j, "count", where, 1);
    ds.distance = read_or<double>(j, "distance", where, 1.0);
    ds.seed = read_or<std::uint64_t>(j, "seed", where, 0);
    if (ds.count == 0) config_fail("dataset.count", "must be >= 1");
    if (oracle.kind == OracleKind::ball && !(oracle.radius - ds.distance >= 0.0)) {
      config_fail("dataset.distance", "must not exceed the ball radius");
    }
  } else if (kind == "directory") {
    allow_keys(j, where, {"kind", "path"});
    ds.kind = DatasetKind::directory;
    ds.path = read<std::string>(j, "path", where);
  } else if (kind == "inline") {
    allow_keys(j, where, {"kind", "points"});
    ds.kind = DatasetKind::inline_points;
    const json& pts = j.contains("points") ? j.at("points") : json();
    if (!pts.is_array() || pts.empty()) config_fail("dataset.points", "expected a list of points");
    for (const auto& p : pts) {
      ds.points.push_back(read_point(p, "dataset.points"));
      if (ds.points.back().dim() != oracle.dimension()) {
        config_fail("dataset.points", "dimension does not match the oracle");
      }
    }
  } else {
    config_fail("dataset.kind", "expected synthetic, directory or inline, got \"" + kind + "\"");
  }
  return ds;
}

}  // namespace

RunConfig parse_run_config(json doc, const std::optional<std::string>& env_endpoint) {
  allow_keys(doc, "config", {"oracle", "attack", "dataset", "seed", "workers", "output"});
  for (const char* key : {"oracle", "attack", "dataset"}) {
    if (!doc.contains(key)) config_fail("config", std::string("missing \"") + key + "\"");
  }
  RunConfig rc;
  rc.oracle = parse_oracle(doc.at("oracle"), env_endpoint);
  if (env_endpoint && rc.oracle.kind == OracleKind::remote) {
    doc["oracle"]["endpoint"] = *env_endpoint;
  }
  rc.attack = parse_attack(doc.at("attack"), rc.oracle);
  rc.dataset = parse_dataset(doc.at("dataset"), rc.oracle);
  rc.seed = read_or<std::uint64_t>(doc, "seed", "config", 0);
  rc.workers = read_count_or(doc, "workers", "config", 0);
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    allow_keys(o, "output", {"dir", "report", "csv"});
    rc.out_dir = read_or<std::string>(o, "dir", "output", rc.out_dir.string());
    rc.report_name = read_or<std::string>(o, "report", "output", rc.report_name);
    rc.csv_name = read_or<std::string>(o, "csv", "output", rc.csv_name);
  }
  rc.raw = std::move(doc);
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw GeodaError(ErrorCode::io_error, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    config_fail(path.string(), std::string("not valid JSON: ") + e.what());
  }
  require_object(doc, "config");
  auto section = [&](const char* key) -> json& {
    if (!doc.contains(key) || !doc[key].is_object()) doc[key] = json::object();
    return doc[key];
  };
  if (overrides.budget) section("attack")["budget"] = *overrides.budget;
  if (overrides.p) section("attack")["p"] = *overrides.p;
  if (overrides.lambda) section("attack")["lambda"] = *overrides.lambda;
  if (overrides.zeta) section("attack")["zeta"] = *overrides.zeta;
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.workers) doc["workers"] = *overrides.workers;
  if (overrides.out_dir) section("output")["dir"] = *overrides.out_dir;

  std::optional<std::string> endpoint = overrides.endpoint;
  if (!endpoint) {
    if (const char* env = std::getenv(kEndpointEnv); env && *env) endpoint = env;
  }
  return parse_run_config(std::move(doc), endpoint);
}

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec) {
  switch (spec.kind) {
    case OracleKind::linear:
      return std::make_unique<LinearOracle>(spec.normal, spec.offset);
    case OracleKind::ball:
      return std::make_unique<BallOracle>(spec.center, spec.radius);
    case OracleKind::remote:
      return std::make_unique<RemoteOracle>(spec.endpoint, spec.shape,
                                            std::chrono::milliseconds(spec.timeout_ms),
                                            spec.max_batch);
  }
  throw GeodaError(ErrorCode::config_error, "unknown oracle kind");
}

namespace {

std::vector<NamedImage> synthetic(const DatasetSpec& spec, const OracleSpec& oracle) {
  RandomSource rng(spec.seed);
  const std::size_t d = oracle.dimension();
  std::vector<NamedImage> out;
  for (std::size_t i = 0; i < spec.count; ++i) {
    Point x;
    switch (oracle.kind) {
      case OracleKind::linear: {
        const double norm = l2_norm(oracle.normal);
        const Point w = oracle.normal * (1.0 / norm);
        const double b = oracle.offset / norm;
        x = rng.gaussian_point(d);
        x.axpy(-(dot(w, x) + b) - spec.distance, w);
        break;
      }
      case OracleKind::ball:
        x = oracle.center;
        x.axpy(oracle.radius - spec.distance, rng.unit_direction(d));
        break;
      case OracleKind::remote:
        x = Point(d);
        for (double& v : x) v = rng.uniform();
        break;
    }
    out.push_back({"img" + std::to_string(i), std::move(x)});
  }
  return out;
}

std::vector<NamedImage> from_directory(const DatasetSpec& spec, std::size_t d) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(spec.path, ec)) {
    throw GeodaError(ErrorCode::io_error, "dataset directory not found: " + spec.path.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(spec.path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".f64") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw GeodaError(ErrorCode::io_error, "no .f64 files in " + spec.path.string());
  }
  std::vector<NamedImage> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw GeodaError(ErrorCode::io_error, "cannot read " + f.string());
    if (bytes.size() != d * sizeof(double)) {
      throw GeodaError(ErrorCode::io_error, f.string() + " holds " + std::to_string(bytes.size()) +
                                                " bytes, expected " +
                                                std::to_string(d * sizeof(double)));
    }
    std::vector<double> values(d);
    std::memcpy(values.data(), bytes.data(), bytes.size());
    try {
      out.push_back({f.stem().string(), Point(std::move(values))});
    } catch (const GeodaError&) {
      throw GeodaError(ErrorCode::io_error, f.string() + " contains non-finite values");
    }
  }
  return out;
}

}  // namespace

std::vector<NamedImage> load_dataset(const DatasetSpec& spec, const OracleSpec& oracle) {
  switch (spec.kind) {
    case DatasetKind::synthetic: return synthetic(spec, oracle);
    case DatasetKind::directory: return from_directory(spec, oracle.dimension());
    case DatasetKind::inline_points: {
      std::vector<NamedImage> out;
      for (std::size_t i = 0; i < spec.points.size(); ++i) {
        out.push_back({"img" + std::to_string(i), spec.points[i]});
      }
      return out;
    }
  }
  return {};
}

}  // namespace geoda
