#include "geoda/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace geoda {

using nlohmann::json;

double median(std::vector<double> values) {
  if (values.empty()) throw GeodaError(ErrorCode::empty_batch, "median of an empty batch");
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + n / 2);
  return 0.5 * (lower + upper);
}

double median_lp(const BatchResult& batch, PNorm p) {
  std::vector<double> norms;
  norms.reserve(batch.images.size());
  for (const auto& img : batch.images) {
    norms.push_back(lp_norm(img.report.adversarial - img.report.original, p));
  }
  return median(std::move(norms));
}

double fooling_rate(const BatchResult& batch) {
  if (batch.images.empty()) throw GeodaError(ErrorCode::empty_batch, "empty batch");
  const auto fooled = std::count_if(batch.images.begin(), batch.images.end(),
                                    [](const ImageResult& r) { return r.report.fooled; });
  return static_cast<double>(fooled) / static_cast<double>(batch.images.size());
}

std::size_t perturbed_coordinates(const Point& original, const Point& adversarial) {
  require_same_dim(original, adversarial, "perturbed_coordinates");
  std::size_t k = 0;
  for (std::size_t j = 0; j < original.dim(); ++j) {
    if (std::abs(adversarial[j] - original[j]) > 1e-12) ++k;
  }
  return k;
}

double sparsity(const AttackReport& report, std::size_t d) {
  if (report.p.value() != 1.0) {
    throw GeodaError(ErrorCode::not_sparse_report, "sparsity needs a sparse-attack report");
  }
  if (d == 0) throw GeodaError(ErrorCode::invalid_argument, "d must be >= 1");
  return 100.0 * static_cast<double>(perturbed_coordinates(report.original, report.adversarial)) /
         static_cast<double>(d);
}

ImageSummary summarize_image(const ImageResult& image) {
  const AttackReport& r = image.report;
  ImageSummary s;
  s.id = image.id;
  const Point delta = r.adversarial - r.original;
  s.final_lp = lp_norm(delta, r.p);
  s.final_l2 = l2_norm(delta);
  s.final_linf = lp_norm(delta, PNorm::infinity());
  if (r.p.value() == 1.0) s.sparsity = sparsity(r, r.original.dim());
  s.fooled = r.fooled;
  s.converged = r.converged;
  s.queries = r.queries;
  s.iterations = r.iterations;
  return s;
}

BatchSummary summarize(const std::vector<ImageSummary>& images) {
  if (images.empty()) throw GeodaError(ErrorCode::empty_batch, "empty batch");
  BatchSummary out;
  std::vector<double> l2, linf, sp;
  std::size_t fooled = 0;
  for (const auto& img : images) {
    l2.push_back(img.final_l2);
    linf.push_back(img.final_linf);
    if (img.sparsity) sp.push_back(*img.sparsity);
    if (img.fooled) ++fooled;
    out.total_queries += img.queries.total();
  }
  out.median_l2 = median(std::move(l2));
  out.median_linf = median(std::move(linf));
  out.fooling_rate = static_cast<double>(fooled) / static_cast<double>(images.size());
  if (!sp.empty()) out.median_sparsity = median(std::move(sp));
  out.images = images.size();
  return out;
}

BatchSummary summarize(const BatchResult& batch) {
  std::vector<ImageSummary> images;
  images.reserve(batch.images.size());
  for (const auto& img : batch.images) images.push_back(summarize_image(img));
  return summarize(images);
}

std::string format_summary(const BatchSummary& s) {
  std::ostringstream os;
  os << "images=" << s.images << " median_l2=" << s.median_l2
     << " median_linf=" << s.median_linf << " fooling_rate=" << s.fooling_rate;
  if (s.median_sparsity) os << " median_sparsity=" << *s.median_sparsity << "%";
  os << " total_queries=" << s.total_queries;
  return os.str();
}

namespace {

json queries_json(const QueryCounts& q) {
  json out = json::object();
  for (Phase p : kAllPhases) out[phase_name(p)] = q[p];
  out["total"] = q.total();
  return out;
}

QueryCounts queries_from(const json& j) {
  QueryCounts q;
  for (Phase p : kAllPhases) {
    q.by_phase[static_cast<std::size_t>(p)] = j.at(phase_name(p)).get<std::uint64_t>();
  }
  if (j.at("total").get<std::uint64_t>() != q.total()) {
    throw GeodaError(ErrorCode::io_error, "report query total does not match its phases");
  }
  return q;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json report_json(const BatchResult& batch) {
  json images = json::array();
  std::vector<ImageSummary> summaries;
  for (const auto& img : batch.images) {
    ImageSummary s = summarize_image(img);
    const AttackReport& r = img.report;
    json iters = json::array();
    for (const auto& it : r.iterations) {
      iters.push_back({{"t", it.t},
                       {"n_t", it.n_t},
                       {"r_hat", it.r_hat},
                       {"lp", it.lp},
                       {"l2", it.l2},
                       {"queries_cum", it.queries_cum},
                       {"wall_ms", it.wall_ms}});
    }
    json entry = {{"id", img.id},
                  {"p", r.p.to_string()},
                  {"final_lp", s.final_lp},
                  {"final_l2", s.final_l2},
                  {"final_linf", s.final_linf},
                  {"sparsity", optional_number(s.sparsity)},
                  {"sparse_k", r.sparse_k ? json(*r.sparse_k) : json(nullptr)},
                  {"queries", queries_json(r.queries)},
                  {"iterations", iters},
                  {"schedule", r.schedule.counts},
                  {"sigma", r.sigma},
                  {"converged", r.converged},
                  {"fooled", r.fooled}};
    if (r.abort_code) {
      entry["aborted"] = {{"code", to_string(*r.abort_code)}, {"message", r.abort_message}};
    }
    if (img.error) {
      entry["error"] = {{"code", to_string(*img.error)}, {"message", img.error_message}};
    }
    images.push_back(std::move(entry));
    summaries.push_back(std::move(s));
  }
  json summary = json::object();
  if (!summaries.empty()) {
    const BatchSummary s = summarize(summaries);
    summary = {{"median_l2", s.median_l2},
               {"median_linf", s.median_linf},
               {"fooling_rate", s.fooling_rate},
               {"median_sparsity", optional_number(s.median_sparsity)},
               {"total_queries", s.total_queries}};
  }
  return {{"schema", kReportSchema},
          {"dataset", batch.dataset},
          {"config", batch.config},
          {"images", images},
          {"summary", summary}};
}

void emit_report(const BatchResult& batch, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path) {
  const json doc = report_json(batch);
  std::ofstream js(json_path);
  if (!js) throw GeodaError(ErrorCode::io_error, "cannot write " + json_path.string());
  js << doc.dump(2) << '\n';
  js.close();
  if (!js) throw GeodaError(ErrorCode::io_error, "failed writing " + json_path.string());

  std::ofstream csv(csv_path);
  if (!csv) throw GeodaError(ErrorCode::io_error, "cannot write " + csv_path.string());
  csv << "image_id,t,queries_cum,lp_norm\n";
  csv.precision(17);
  for (const auto& img : batch.images) {
    for (const auto& it : img.report.iterations) {
      csv << img.id << ',' << it.t << ',' << it.queries_cum << ',' << it.lp << '\n';
    }
  }
  csv.close();
  if (!csv) throw GeodaError(ErrorCode::io_error, "failed writing " + csv_path.string());
}

ReportFile load_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw GeodaError(ErrorCode::io_error, "cannot read " + json_path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("schema") != kReportSchema) {
      throw GeodaError(ErrorCode::io_error, "unknown report schema in " + json_path.string());
    }
    ReportFile out;
    out.config = doc.at("config");
    for (const auto& e : doc.at("images")) {
      ImageSummary s;
      s.id = e.at("id").get<std::string>();
      s.final_lp = e.at("final_lp").get<double>();
      s.final_l2 = e.at("final_l2").get<double>();
      s.final_linf = e.at("final_linf").get<double>();
      if (!e.at("sparsity").is_null()) s.sparsity = e.at("sparsity").get<double>();
      s.fooled = e.at("fooled").get<bool>();
      s.converged = e.at("converged").get<bool>();
      s.queries = queries_from(e.at("queries"));
      for (const auto& it : e.at("iterations")) {
        IterationRecord rec;
        rec.t = it.at("t").get<std::size_t>();
        rec.n_t = it.at("n_t").get<std::size_t>();
        rec.r_hat = it.at("r_hat").get<double>();
        rec.lp = it.at("lp").get<double>();
        rec.l2 = it.at("l2").get<double>();
        rec.queries_cum = it.at("queries_cum").get<std::uint64_t>();
        rec.wall_ms = it.at("wall_ms").get<double>();
        s.iterations.push_back(rec);
      }
      out.images.push_back(std::move(s));
    }
    return out;
  } catch (const json::exception& e) {
    throw GeodaError(ErrorCode::io_error,
                     "malformed report " + json_path.string() + ": " + e.what());
  }
}

namespace {

bool per_image_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::no_adversarial_found:
    case ErrorCode::no_crossing_found:
    case ErrorCode::degenerate_mean:
    case ErrorCode::sparse_failed:
      return true;
    default:
      return false;
  }
}

}  // namespace

BatchResult run_batch(const Oracle& oracle, const std::vector<NamedImage>& images,
                      const AttackConfig& cfg, std::uint64_t seed, std::size_t workers) {
  BatchResult batch;
  batch.images.resize(images.size());
  RandomSource root(seed);
  std::vector<RandomSource> streams;
  streams.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) streams.push_back(root.split());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(images.size(), 1));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> fatal(images.size());
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < images.size(); i = next.fetch_add(1)) {
      ImageResult& out = batch.images[i];
      out.id = images[i].id;
      try {
        out.report = run_attack(oracle, images[i].x, cfg, streams[i]);
      } catch (const GeodaError& e) {
        if (!per_image_failure(e.code())) {
          fatal[i] = std::current_exception();
          continue;
        }
        out.error = e.code();
        out.error_message = e.what();
        out.report.p = cfg.p;
        out.report.original = images[i].x;
        out.report.adversarial = images[i].x;
      } catch (...) {
        fatal[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : fatal) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

}  // namespace geoda
