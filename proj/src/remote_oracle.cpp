#include <httplib.h>

#include <json.hpp>

#include "geoda/oracle.hpp"

namespace geoda {

namespace {

using nlohmann::json;

json shape_json(const ImageShape& s) { return json::array({s.channels, s.height, s.width}); }

Label parse_label(const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw GeodaError(ErrorCode::remote_unavailable, "remote returned an invalid label");
  }
  return Label{v.get<std::uint32_t>()};
}

}  // namespace

RemoteOracle::RemoteOracle(std::string endpoint, ImageShape shape,
                           std::chrono::milliseconds timeout, std::size_t max_batch)
    : endpoint_(std::move(endpoint)), shape_(shape), timeout_(timeout),
      max_batch_(max_batch == 0 ? 1 : max_batch) {
  const auto scheme = endpoint_.find("://");
  if (scheme == std::string::npos || endpoint_.compare(0, scheme, "http") != 0) {
    throw GeodaError(ErrorCode::config_error,
                     "remote endpoint must look like http://host:port[/prefix]");
  }
  const auto path = endpoint_.find('/', scheme + 3);
  host_ = endpoint_.substr(0, path);
  base_path_ = path == std::string::npos ? "" : endpoint_.substr(path);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (shape_.size() == 0) {
    throw GeodaError(ErrorCode::config_error, "remote input shape must be non-empty");
  }
}

std::string RemoteOracle::post(const std::string& path, const std::string& body) const {
  httplib::Client client(host_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  httplib::Result res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    res = client.Post(base_path_ + path, body, "application/json");
    if (res) break;
  }
  if (!res) {
    throw GeodaError(ErrorCode::remote_unavailable,
                     "remote oracle unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status == 400) {
    throw GeodaError(ErrorCode::dimension_mismatch, "remote rejected input: " + res->body);
  }
  if (res->status != 200) {
    throw GeodaError(ErrorCode::remote_unavailable,
                     "remote oracle returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

Label RemoteOracle::top1(const Point& x) const {
  check_dim(x);
  const json req = {{"shape", shape_json(shape_)}, {"x", x.vec()}};
  json resp;
  try {
    resp = json::parse(post("/predict", req.dump()));
  } catch (const json::exception& e) {
    throw GeodaError(ErrorCode::remote_unavailable, std::string("bad response: ") + e.what());
  }
  if (!resp.is_object() || !resp.contains("label")) {
    throw GeodaError(ErrorCode::remote_unavailable, "response has no label");
  }
  return parse_label(resp["label"]);
}

std::vector<Label> RemoteOracle::top1_batch(std::span<const Point> xs) const {
  std::vector<Label> labels;
  labels.reserve(xs.size());
  for (std::size_t start = 0; start < xs.size(); start += max_batch_) {
    const std::size_t stop = std::min(xs.size(), start + max_batch_);
    json batch = json::array();
    for (std::size_t i = start; i < stop; ++i) {
      check_dim(xs[i]);
      batch.push_back(xs[i].vec());
    }
    const json req = {{"shape", shape_json(shape_)}, {"xs", std::move(batch)}};
    json resp;
    try {
      resp = json::parse(post("/predict_batch", req.dump()));
    } catch (const json::exception& e) {
      throw GeodaError(ErrorCode::remote_unavailable, std::string("bad response: ") + e.what());
    }
    if (!resp.is_object() || !resp.contains("labels") || !resp["labels"].is_array() ||
        resp["labels"].size() != stop - start) {
      throw GeodaError(ErrorCode::remote_unavailable, "batch response has wrong shape");
    }
    for (const auto& v : resp["labels"]) labels.push_back(parse_label(v));
  }
  return labels;
}

}  // namespace geoda
