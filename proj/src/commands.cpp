#include "geoda/commands.hpp"

#include <ostream>

namespace geoda {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_budget:
    case ErrorCode::invalid_subspace_size:
    case ErrorCode::unsupported_p:
      return kExitConfig;
    case ErrorCode::remote_unavailable:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::unsupported_oracle:
      return kExitOracle;
    case ErrorCode::io_error:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const GeodaError& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [io_error]: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int cmd_attack(const std::filesystem::path& config_path, const ConfigOverrides& overrides,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_run_config(config_path, overrides);
    const auto oracle = make_oracle(rc.oracle);
    const std::vector<NamedImage> images = load_dataset(rc.dataset, rc.oracle);

    BatchResult batch = run_batch(*oracle, images, rc.attack, rc.seed, rc.workers);
    batch.dataset = rc.dataset.kind == DatasetKind::directory ? rc.dataset.path.string()
                    : rc.dataset.kind == DatasetKind::inline_points ? "inline"
                                                                    : "synthetic";
    batch.config = rc.raw;

    std::filesystem::create_directories(rc.out_dir);
    const auto json_path = rc.out_dir / rc.report_name;
    const auto csv_path = rc.out_dir / rc.csv_name;
    emit_report(batch, json_path, csv_path);

    const BatchSummary s = summarize(batch);
    out << format_summary(s) << '\n';
    out << "report: " << json_path.string() << "\ncsv: " << csv_path.string() << '\n';

    for (const auto& img : batch.images) {
      if (img.report.abort_code == ErrorCode::remote_unavailable) {
        err << "error [remote_unavailable]: " << img.id << ": " << img.report.abort_message
            << '\n';
        return int{kExitOracle};
      }
    }
    return int{kExitOk};
  });
}

int cmd_schedule(std::size_t budget, double lambda, std::optional<std::size_t> iterations,
                 std::size_t first_iter_floor, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const QuerySchedule s = iterations ? schedule_with_iterations(budget, lambda, *iterations)
                                       : optimal_schedule(budget, lambda, first_iter_floor);
    out << "T=" << s.iterations() << "\ncounts:";
    for (std::size_t c : s.counts) out << ' ' << c;
    out << "\nsum=" << s.total() << '\n';
    return int{kExitOk};
  });
}

int cmd_calibrate_sigma(const std::filesystem::path& config_path,
                        const ConfigOverrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig rc = load_run_config(config_path, overrides);
    const auto oracle = make_oracle(rc.oracle);
    const std::vector<NamedImage> images = load_dataset(rc.dataset, rc.oracle);
    if (images.empty()) throw GeodaError(ErrorCode::config_error, "dataset is empty");

    RandomSource rng = RandomSource(rc.seed).split();
    QuerySession session(*oracle, images.front().x);
    const Point x_b = find_initial_boundary_point(session, rng, rc.attack.search);
    CalibrationConfig cal = rc.attack.calibration;
    if (rc.attack.sigma && !cal.initial_sigma) cal.initial_sigma = rc.attack.sigma;
    const SigmaCalibration result = calibrate_sigma(session, x_b, rc.attack.prior, rng, cal);

    for (const auto& [sigma, fraction] : result.trace) {
      out << "round sigma=" << sigma << " adversarial_fraction=" << fraction << '\n';
    }
    out << "image=" << images.front().id << " sigma=" << result.sigma
        << " adversarial_fraction=" << result.adversarial_fraction
        << " rounds=" << result.rounds << " queries=" << session.counts().total() << '\n';
    return int{kExitOk};
  });
}

int cmd_report(const std::filesystem::path& report_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ReportFile report = load_report(report_path);
    out << format_summary(summarize(report.images)) << '\n';
    return int{kExitOk};
  });
}

}  // namespace geoda
