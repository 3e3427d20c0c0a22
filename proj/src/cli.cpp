#include "geomed/analysis.hpp"
#include "geomed/cli_io.hpp"
#include "geomed/simulate.hpp"
#include "geomed/static_solver.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace geomed {

namespace {

using Json = nlohmann::ordered_json;

// Output destination: a file when --out is given, else the provided stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

void emit(const Json& j, const std::string& out_path, std::ostream& out) {
  Sink sink(out_path, out);
  sink.stream() << j.dump(2) << '\n';
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::istringstream cs(cell);
    T v{};
    if (!(cs >> v) || !(cs >> std::ws).eof()) throw std::invalid_argument("cannot parse list item '" + cell + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty list");
  return values;
}

std::optional<std::filesystem::path> estimate_path_for(const std::string& explicit_path, const std::string& out_path) {
  if (!explicit_path.empty()) return std::filesystem::path(explicit_path);
  if (!out_path.empty()) return std::filesystem::path(out_path + ".estimate.gmed");
  return std::filesystem::path("geomed-estimate.gmed");
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

GaussianSpec spec_by_name(const std::string& name, std::size_t dim) {
  if (name == "reference") return reference_gaussian();
  if (name == "standard") return standard_gaussian(dim);
  throw std::invalid_argument("unknown spec '" + name + "' (expected reference or standard)");
}

// Mean distance to the mean over a rewindable source, two passes.
double pilot_c_gamma(ObservationSource& source) {
  Vector x;
  Vector sum;
  std::uint64_t n = 0;
  while (source.next(x)) {
    if (n == 0) sum = Vector::Zero(x.size());
    sum += x;
    ++n;
  }
  if (n == 0) throw DataError("empty input");
  const Vector centre = sum / static_cast<double>(n);
  source.rewind();
  double total = 0.0;
  while (source.next(x)) total += (x - centre).norm();
  source.rewind();
  const double c = total / static_cast<double>(n);
  return c > 0.0 ? c : 1.0;
}

struct FitOptions {
  std::string input;
  bool use_stdin = false;
  bool streaming = false;
  std::optional<double> c_gamma;
  double alpha = 0.75;
  std::size_t starts = 10;
  std::size_t epochs = 1;
  std::string quantile_v;
  std::uint64_t seed = 0;
  std::optional<double> init_cap;
  std::string out;
  std::string estimate_out;
};

int run_fit(const FitOptions& o, std::istream& in, std::ostream& out) {
  FitConfig config;
  config.num_starts = o.starts;
  config.epochs = o.epochs;
  config.seed = o.seed;
  if (!o.quantile_v.empty()) config.v = parse_vector(o.quantile_v);

  RunParameters params;
  params.alpha = o.alpha;
  params.epochs = o.epochs;
  params.seed = o.seed;
  if (config.v.size() != 0) params.quantile_v = std::vector<double>(config.v.data(), config.v.data() + config.v.size());

  EstimateReport result;
  if (o.use_stdin) {
    if (!o.c_gamma) throw CLI::ValidationError("--c-gamma", "required with --stdin (no pilot pass is possible)");
    if (o.epochs != 1) throw CLI::ValidationError("--epochs", "a stream from stdin can only be read once");
    config.schedule = StepSchedule(*o.c_gamma, o.alpha);
    config.init_cap = o.init_cap.value_or(1e9);
    CsvStreamSource source(in);
    result = fit_stream(source, config);
  } else if (o.streaming) {
    std::unique_ptr<ObservationSource> source;
    if (is_binary_path(o.input)) {
      source = std::make_unique<BinaryFileSource>(o.input);
    } else {
      throw CLI::ValidationError("--streaming", "requires a binary (.gmed/.bin) input file");
    }
    const double c = o.c_gamma ? *o.c_gamma : pilot_c_gamma(*source);
    config.schedule = StepSchedule(c, o.alpha);
    config.init_cap = o.init_cap.value_or(1e9);
    result = fit_stream(*source, config);
  } else {
    const Dataset data = read_dataset(o.input);
    config.schedule = StepSchedule(o.c_gamma ? *o.c_gamma : default_c_gamma(data), o.alpha);
    if (o.init_cap) config.init_cap = *o.init_cap;
    result = multi_start_fit(data, config);
    params.starts = o.starts;
  }
  params.c_gamma = config.schedule.c_gamma();

  const RunReport report = make_run_report(result, params, estimate_path_for(o.estimate_out, o.out));
  emit(to_json(report), o.out, out);
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online and static estimation of the geometric median", "geomed"};
  app.require_subcommand(1);

  // fit
  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Averaged stochastic gradient fit");
  auto* fit_input = fit_cmd->add_option("--input", fit.input, "CSV or binary (.gmed/.bin) data file");
  auto* fit_stdin = fit_cmd->add_flag("--stdin", fit.use_stdin, "Stream CSV rows from standard input");
  fit_input->excludes(fit_stdin);
  fit_stdin->excludes(fit_input);
  fit_cmd->add_flag("--streaming", fit.streaming, "Single chain over a binary file without loading it");
  fit_cmd->add_option("--c-gamma", fit.c_gamma, "Step constant (default: mean distance to the mean)");
  fit_cmd->add_option("--alpha", fit.alpha, "Step exponent in (1/2, 1)")->capture_default_str();
  fit_cmd->add_option("--starts", fit.starts, "Number of random starts")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--epochs", fit.epochs, "Passes over the data")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--quantile-v", fit.quantile_v, "Quantile direction as comma-separated values, ||v|| < 1");
  fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  fit_cmd->add_option("--init-cap", fit.init_cap, "Starting points with larger norm are replaced by 0");
  fit_cmd->add_option("--out", fit.out, "Report path (default: stdout)");
  fit_cmd->add_option("--estimate-out", fit.estimate_out, "Binary estimate path when d > 100");

  // fit-static
  std::string static_input;
  std::string static_out;
  std::string static_estimate_out;
  SolverConfig solver;
  auto* static_cmd = app.add_subcommand("fit-static", "Vardi-Zhang static solver");
  static_cmd->add_option("--input", static_input, "CSV or binary data file")->required();
  static_cmd->add_option("--tol", solver.tol, "Relative step tolerance")->capture_default_str();
  static_cmd->add_option("--max-iter", solver.max_iter, "Iteration cap")->capture_default_str();
  static_cmd->add_option("--out", static_out, "Report path (default: stdout)");
  static_cmd->add_option("--estimate-out", static_estimate_out, "Binary estimate path when d > 100");

  // table1
  std::size_t t1_reps = 1000;
  std::string t1_sizes = "250,500,2000";
  std::string t1_grid = "0.2,0.6,1,2,5,10,15,25,50,75";
  std::uint64_t t1_seed = 0;
  bool t1_no_vz = false;
  std::string t1_out;
  auto* t1_cmd = app.add_subcommand("table1", "Replication study of estimation errors on the 3-d Gaussian");
  t1_cmd->add_option("--reps", t1_reps, "Replications per sample size")->capture_default_str()->check(CLI::PositiveNumber);
  t1_cmd->add_option("--sizes", t1_sizes, "Comma-separated sample sizes")->capture_default_str();
  t1_cmd->add_option("--c-gamma-grid", t1_grid, "Comma-separated c_gamma values")->capture_default_str();
  t1_cmd->add_option("--seed", t1_seed, "Random seed")->capture_default_str();
  t1_cmd->add_flag("--no-vardi-zhang", t1_no_vz, "Skip the static solver row");
  t1_cmd->add_option("--out", t1_out, "Report path (default: stdout)");

  // bench-time
  double bench_budget_ms = 1000.0;
  std::size_t bench_trials = 1;
  double bench_c_gamma = 5.0;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench-time", "Sample sizes each method handles within a time budget");
  bench_cmd->add_option("--budget-ms", bench_budget_ms, "Wall-clock budget in milliseconds")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--trials", bench_trials, "Accuracy trials at the achieved sizes")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--c-gamma", bench_c_gamma, "Step constant for SGD")->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "Report path (default: stdout)");

  // clt
  std::size_t clt_n = 5000;
  std::size_t clt_reps = 2000;
  double clt_c_gamma = 5.0;
  std::string clt_spec = "reference";
  std::size_t clt_dim = 3;
  std::uint64_t clt_seed = 0;
  std::string clt_out;
  auto* clt_cmd = app.add_subcommand("clt", "Monte-Carlo covariance of the averaged estimator vs the sandwich");
  clt_cmd->add_option("--n", clt_n, "Observations per replication")->capture_default_str();
  clt_cmd->add_option("--reps", clt_reps, "Replications (>= 100)")->capture_default_str();
  clt_cmd->add_option("--c-gamma", clt_c_gamma, "Step constant")->capture_default_str();
  clt_cmd->add_option("--spec", clt_spec, "reference or standard")->capture_default_str();
  clt_cmd->add_option("--dim", clt_dim, "Dimension for --spec standard")->capture_default_str();
  clt_cmd->add_option("--seed", clt_seed, "Random seed")->capture_default_str();
  clt_cmd->add_option("--out", clt_out, "Report path (default: stdout)");

  // rate
  std::string rate_checkpoints = "1000,3000,10000,30000,100000,300000,1000000";
  std::size_t rate_reps = 100;
  double rate_c_gamma = 5.0;
  std::string rate_spec = "reference";
  std::size_t rate_dim = 3;
  std::uint64_t rate_seed = 0;
  std::string rate_out;
  std::string rate_curve;
  auto* rate_cmd = app.add_subcommand("rate", "Mean squared error decay of the raw and averaged iterates");
  rate_cmd->add_option("--checkpoints", rate_checkpoints, "Increasing step counts")->capture_default_str();
  rate_cmd->add_option("--reps", rate_reps, "Replications (>= 100)")->capture_default_str();
  rate_cmd->add_option("--c-gamma", rate_c_gamma, "Step constant")->capture_default_str();
  rate_cmd->add_option("--spec", rate_spec, "reference or standard")->capture_default_str();
  rate_cmd->add_option("--dim", rate_dim, "Dimension for --spec standard")->capture_default_str();
  rate_cmd->add_option("--seed", rate_seed, "Random seed")->capture_default_str();
  rate_cmd->add_option("--out", rate_out, "Report path (default: stdout)");
  rate_cmd->add_option("--curve-out", rate_curve, "CSV of per-checkpoint errors for plotting");

  // diagnose
  std::string diag_input;
  std::string diag_at;
  bool diag_allow_large = false;
  std::string diag_out;
  auto* diag_cmd = app.add_subcommand("diagnose", "Hessian, score covariance and sandwich at a point");
  diag_cmd->add_option("--input", diag_input, "CSV or binary data file")->required();
  diag_cmd->add_option("--at", diag_at, "Evaluation point (default: the Vardi-Zhang median)");
  diag_cmd->add_flag("--allow-large", diag_allow_large, "Permit d > 2000 (d x d output)");
  diag_cmd->add_option("--out", diag_out, "Report path (default: stdout)");

  // convert
  std::string conv_input;
  std::string conv_output;
  auto* conv_cmd = app.add_subcommand("convert", "Convert between CSV and binary by file extension");
  conv_cmd->add_option("--input", conv_input, "Source file")->required();
  conv_cmd->add_option("--output", conv_output, "Destination (.gmed/.bin for binary, else CSV)")->required();

  // generate
  std::size_t gen_n = 1000;
  std::string gen_spec = "reference";
  std::size_t gen_dim = 3;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("generate", "Draw a Gaussian sample (CSV to stdout or a file)");
  gen_cmd->add_option("--n", gen_n, "Number of draws")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--spec", gen_spec, "reference or standard")->capture_default_str();
  gen_cmd->add_option("--dim", gen_dim, "Dimension for --spec standard")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Destination (.gmed/.bin for binary, else CSV); default stdout");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("geomed");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (fit_cmd->parsed()) {
      if (fit.input.empty() && !fit.use_stdin) throw CLI::ValidationError("fit", "one of --input or --stdin is required");
      if (fit.streaming && fit.use_stdin) throw CLI::ValidationError("--streaming", "applies to --input only");
      return run_fit(fit, in, out);
    }

    if (static_cmd->parsed()) {
      const Dataset data = read_dataset(static_input);
      const EstimateReport result = vardi_zhang(data, solver);
      RunParameters params;
      params.tol = solver.tol;
      params.max_iter = solver.max_iter;
      emit(to_json(make_run_report(result, params, estimate_path_for(static_estimate_out, static_out))), static_out,
           out);
      return kExitOk;
    }

    if (t1_cmd->parsed()) {
      const auto grid = parse_list<double>(t1_grid);
      const auto sizes = parse_list<std::size_t>(t1_sizes);
      Table1Options options;
      options.include_vardi_zhang = !t1_no_vz;
      const auto rows = replicate_table1(grid, sizes, t1_reps, t1_seed, options);
      Json j;
      j["experiment"] = "table1";
      j["reps"] = t1_reps;
      j["seed"] = t1_seed;
      j["alpha"] = options.alpha;
      j["starts"] = options.num_starts;
      Json table = Json::array();
      for (const auto& r : rows) {
        table.push_back(Json{{"label", r.label}, {"n", r.n}, {"q1", r.q1}, {"median", r.median}, {"q3", r.q3}});
      }
      j["rows"] = std::move(table);
      emit(j, t1_out, out);
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      const auto report = timed_benchmark(std::chrono::duration<double>(bench_budget_ms / 1000.0),
                                          reference_gaussian(), bench_seed, bench_trials, bench_c_gamma);
      Json j;
      j["experiment"] = "bench-time";
      j["budget_ms"] = bench_budget_ms;
      j["trials"] = bench_trials;
      j["sgd_n"] = report.sgd_n;
      j["vz_n"] = report.vz_n;
      j["sgd_error"] = report.sgd_error;
      j["vz_error"] = report.vz_error;
      emit(j, bench_out, out);
      return kExitOk;
    }

    if (clt_cmd->parsed()) {
      const GaussianSpec spec = spec_by_name(clt_spec, clt_dim);
      FitConfig config;
      config.schedule = StepSchedule(clt_c_gamma, 0.75);
      const auto report = clt_experiment(spec, clt_n, clt_reps, config, clt_seed);
      Json j;
      j["experiment"] = "clt";
      j["n"] = clt_n;
      j["reps"] = clt_reps;
      j["c_gamma"] = clt_c_gamma;
      j["empirical_cov"] = matrix_json(report.empirical_cov.matrix());
      j["sandwich"] = matrix_json(report.sandwich.matrix());
      j["rel_frobenius_gap"] = report.rel_frobenius_gap;
      emit(j, clt_out, out);
      return kExitOk;
    }

    if (rate_cmd->parsed()) {
      const GaussianSpec spec = spec_by_name(rate_spec, rate_dim);
      FitConfig config;
      config.schedule = StepSchedule(rate_c_gamma, 0.75);
      const auto report = rate_experiment(spec, parse_list<std::uint64_t>(rate_checkpoints), rate_reps, config, rate_seed);
      Json j;
      j["experiment"] = "rate";
      j["reps"] = rate_reps;
      j["c_gamma"] = rate_c_gamma;
      j["checkpoints"] = report.checkpoints;
      j["mse_iterate"] = report.mse_iterate;
      j["mse_average"] = report.mse_average;
      j["slope"] = report.slope;
      j["averaged_slope"] = report.averaged_slope;
      emit(j, rate_out, out);
      if (!rate_curve.empty()) {
        std::ofstream curve(rate_curve);
        if (!curve) throw DataError("cannot write " + rate_curve);
        curve << "n,mse_iterate,mse_average\n";
        for (std::size_t k = 0; k < report.checkpoints.size(); ++k) {
          curve << report.checkpoints[k] << ',' << format_double(report.mse_iterate[k]) << ','
                << format_double(report.mse_average[k]) << '\n';
        }
      }
      return kExitOk;
    }

    if (diag_cmd->parsed()) {
      const Dataset data = read_dataset(diag_input);
      const Vector at = diag_at.empty() ? vardi_zhang(data).estimate : parse_vector(diag_at);
      require_same_dim(at.size(), static_cast<Eigen::Index>(data.dim()), "--at");
      if (at.size() > kMaxSandwichDim && !diag_allow_large) {
        throw CLI::ValidationError("diagnose", "d > 2000 needs --allow-large");
      }
      const SymOperator hessian = hessian_estimate(at, data);
      const SymOperator score = score_covariance(at, data);
      Json j;
      j["point"] = vector_json(at);
      j["empirical_loss"] = empirical_loss(at, data);
      j["subgradient"] = vector_json(empirical_subgradient(at, data));
      j["hessian"] = matrix_json(hessian.matrix());
      j["hessian_eigenvalues"] = vector_json(hessian.eigenvalues());
      j["score_covariance"] = matrix_json(score.matrix());
      try {
        j["sandwich"] = matrix_json(sandwich_covariance(data, at, diag_allow_large).matrix());
      } catch (const SingularOperatorError& e) {
        j["sandwich"] = nullptr;
        j["sandwich_error"] = e.what();
      }
      emit(j, diag_out, out);
      return kExitOk;
    }

    if (conv_cmd->parsed()) {
      const Dataset data = read_dataset(conv_input);
      if (is_binary_path(conv_output)) {
        write_binary(conv_output, data);
      } else {
        write_csv(std::filesystem::path(conv_output), data);
      }
      return kExitOk;
    }

    if (gen_cmd->parsed()) {
      const GaussianSpec spec = spec_by_name(gen_spec, gen_dim);
      if (!gen_out.empty() && is_binary_path(gen_out)) {
        write_binary(gen_out, sample_gaussian(spec, gen_n, gen_seed));
        return kExitOk;
      }
      // Row by row so large n never sits in memory.
      Sink sink(gen_out, out);
      auto& os = sink.stream();
      Rng rng(gen_seed);
      Vector x;
      for (std::size_t i = 0; i < gen_n; ++i) {
        spec.draw(rng, x);
        for (Eigen::Index j = 0; j < x.size(); ++j) {
          if (j > 0) os << ',';
          os << format_double(x[j]);
        }
        os << '\n';
      }
      return kExitOk;
    }
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SingularOperatorError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace geomed
