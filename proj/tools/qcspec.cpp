// qcspec: command-line front end.
//
//   qcspec qcser INPUT [--alphas SPEC] [-o OUT]
//   qcspec qacf INPUT --maxlag K [--alphas SPEC] [-o OUT]
//   qcspec spec {lw|ar|ars|sar} INPUT [flags] [-o OUT]
//   qcspec simulate --case C --n N --seed S [-o OUT]
//   qcspec truth --case C --n N [flags] [-o OUT]
//   qcspec eval EST TRUTH
//   qcspec plot GRID -o OUT.png [--cell PX]
//   qcspec montecarlo --case C --n N --runs R [flags]
//
// INPUT is a series file or a QCS file written by `qcser`. Output goes to
// stdout unless -o is given. Exit codes: 0 success, 1 unexpected failure,
// 2 input or usage error, 3 estimation error, 4 consistency error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcspec/error.hpp"
#include "qcspec/estimators.hpp"
#include "qcspec/evaluate.hpp"
#include "qcspec/grid_io.hpp"
#include "qcspec/heatmap.hpp"
#include "qcspec/series.hpp"
#include "qcspec/simulate.hpp"

using namespace qcspec;

namespace {

// "0.5", "0.1,0.5,0.9" or "lo:hi:step".
QuantileGrid parse_alphas(const std::string& text) {
  if (text.empty()) return QuantileGrid::standard();
  const auto number = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw_input("cannot parse quantile level '" + s + "'");
    return v;
  };
  std::vector<std::string> parts;
  char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  if (sep == ':') {
    if (parts.size() != 3) throw_input("range form of --alphas is lo:hi:step");
    return QuantileGrid::uniform(number(parts[0]), number(parts[1]), number(parts[2]));
  }
  std::vector<double> levels;
  for (const auto& p : parts) levels.push_back(number(p));
  return QuantileGrid(std::move(levels));
}

// Series file or QCS file.
QcsMatrix load_crossings(const std::string& path, const std::string& alphas) {
  if (is_qcs_file(path)) {
    if (!alphas.empty()) throw_input("--alphas cannot be applied to a QCS file");
    return read_qcs(path);
  }
  const TimeSeries y = read_series(path);
  y.require_estimable();
  return qcser(y, parse_alphas(alphas));
}

template <typename Writer>
void emit(const std::string& out, Writer&& write) {
  if (out.empty() || out == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw_input("cannot write '" + out + "'");
  write(f);
  if (!f) throw_input("write failed for '" + out + "'");
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SpecFlags {
  std::string input;
  std::string output;
  std::string alphas;
  std::optional<int> p;
  int pmax = 20;
  std::optional<int> bandwidth;
  std::optional<double> lambda;
  int knots = 14;
  bool normalized = false;
  std::string method = "ls";
  std::optional<std::uint64_t> seed;
};

void add_spec_flags(CLI::App* app, SpecFlags& f, bool lw) {
  app->add_option("input", f.input, "Series file or QCS file")->required();
  app->add_option("-o,--output", f.output, "Output grid file (default stdout)");
  app->add_option("--alphas", f.alphas, "Quantile levels: a, a,b,c or lo:hi:step (default 0.05:0.95:0.01)");
  app->add_flag("--normalized", f.normalized, "Divide by alpha(1-alpha)");
  app->add_option("--seed", f.seed, "Accepted and ignored; estimation is deterministic");
  if (lw) {
    app->add_option("--M", f.bandwidth, "Lag-window bandwidth")->required();
    return;
  }
  app->add_option("--p", f.p, "AR order (default: AIC selection)")->check(CLI::NonNegativeNumber);
  app->add_option("--pmax", f.pmax, "Largest order considered by AIC")->check(CLI::NonNegativeNumber);
  app->add_option("--method", f.method, "AR fitting method: ls or yw")->check(CLI::IsMember({"ls", "yw"}));
  app->add_option("--knots", f.knots, "Number of spline basis functions K")->check(CLI::PositiveNumber);
  app->add_option("--lambda", f.lambda, "Fixed SAR smoothing parameter (default: GCV)")
      ->check(CLI::NonNegativeNumber);
}

EstimatorConfig to_config(EstimatorKind kind, const SpecFlags& f) {
  EstimatorConfig c;
  c.kind = kind;
  c.p = f.p;
  c.pmax = f.pmax;
  c.bandwidth = f.bandwidth.value_or(0);
  c.lambda = f.lambda;
  c.knots = f.knots;
  c.method = f.method == "yw" ? ArMethod::yule_walker : ArMethod::least_squares;
  c.normalized = f.normalized;
  return c;
}

void print_report_header(std::ostream& os) {
  os << "estimator\tcase\tn\truns\tfailed\tkld_mean\tkld_se\trmse_mean\trmse_se\n";
}

void print_report(std::ostream& os, const EvalReport& r) {
  os << r.estimator << '\t' << r.case_id << '\t' << r.n << '\t' << r.runs << '\t' << r.failed << '\t'
     << format17(r.kld_mean) << '\t' << format17(r.kld_se) << '\t' << format17(r.rmse_mean) << '\t'
     << format17(r.rmse_se) << '\n';
}

void write_records(const std::string& path, const std::vector<EvalReport>& reports) {
  emit(path, [&](std::ostream& os) {
    os << "estimator\trun\tseed\tok\tkld\tmse\trmse\tfloored\terror\n";
    for (const auto& r : reports)
      for (const auto& rec : r.records)
        os << r.estimator << '\t' << rec.run << '\t' << rec.seed << '\t' << (rec.ok ? 1 : 0) << '\t'
           << format17(rec.kld) << '\t' << format17(rec.mse) << '\t' << format17(rec.rmse) << '\t' << rec.floored
           << '\t' << rec.error << '\n';
  });
}

std::vector<int> parse_int_range(const std::string& text) {
  // "a:b" inclusive or "a,b,c"
  std::vector<int> out;
  try {
    if (const auto colon = text.find(':'); colon != std::string::npos) {
      const int lo = std::stoi(text.substr(0, colon));
      const int hi = std::stoi(text.substr(colon + 1));
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoi(item));
    }
  } catch (const std::exception&) {
    throw_input("cannot parse sweep values '" + text + "'");
  }
  if (out.empty()) throw_input("empty sweep range");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-crossing spectrum estimation"};
  app.require_subcommand(1);

  // qcser
  std::string qcser_in, qcser_out, qcser_alphas;
  auto* qcser_cmd = app.add_subcommand("qcser", "Write the empirical quantile-crossing series of a series file");
  qcser_cmd->add_option("input", qcser_in, "Series file")->required();
  qcser_cmd->add_option("--alphas", qcser_alphas, "Quantile levels (default 0.05:0.95:0.01)");
  qcser_cmd->add_option("-o,--output", qcser_out, "Output QCS file (default stdout)");

  // qacf
  std::string acf_in, acf_out, acf_alphas;
  int acf_maxlag = 0;
  auto* acf_cmd = app.add_subcommand("qacf", "Print sample autocovariances of the crossing series");
  acf_cmd->add_option("input", acf_in, "Series file or QCS file")->required();
  acf_cmd->add_option("--maxlag", acf_maxlag, "Largest lag")->required()->check(CLI::NonNegativeNumber);
  acf_cmd->add_option("--alphas", acf_alphas, "Quantile levels");
  acf_cmd->add_option("-o,--output", acf_out, "Output file (default stdout)");

  // spec
  auto* spec_cmd = app.add_subcommand("spec", "Estimate the quantile-crossing spectrum");
  spec_cmd->require_subcommand(1);
  SpecFlags lw_f, ar_f, ars_f, sar_f;
  auto* lw_cmd = spec_cmd->add_subcommand("lw", "Tukey-Hanning lag-window estimate");
  add_spec_flags(lw_cmd, lw_f, true);
  auto* ar_cmd = spec_cmd->add_subcommand("ar", "Per-quantile AR estimate");
  add_spec_flags(ar_cmd, ar_f, false);
  auto* ars_cmd = spec_cmd->add_subcommand("ars", "AR estimate smoothed across quantiles");
  add_spec_flags(ars_cmd, ars_f, false);
  auto* sar_cmd = spec_cmd->add_subcommand("sar", "Spline autoregression estimate");
  add_spec_flags(sar_cmd, sar_f, false);

  // simulate
  int sim_case = 1;
  Eigen::Index sim_n = 512;
  std::uint64_t sim_seed = 0;
  Eigen::Index sim_burn = 1000;
  std::string sim_out;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a test series");
  sim_cmd->add_option("--case", sim_case, "Test process 1, 2 or 3")->required();
  sim_cmd->add_option("--n", sim_n, "Series length")->required();
  sim_cmd->add_option("--seed", sim_seed, "Random seed")->required();
  sim_cmd->add_option("--burn-in", sim_burn, "Discarded initial samples");
  sim_cmd->add_option("-o,--output", sim_out, "Output series file (default stdout)");

  // truth
  int truth_case = 1;
  Eigen::Index truth_n = 512;
  std::uint64_t truth_seed = 0;
  std::string truth_alphas, truth_out;
  bool truth_norm = false;
  bool truth_force_mc = false;
  McTruthOptions truth_mc_opts;
  int truth_bandwidth = kTruthBandwidth;
  int truth_maxlag = kTruthMaxlag;
  auto* truth_cmd = app.add_subcommand("truth", "Compute the true spectrum on the Fourier grid of n");
  truth_cmd->add_option("--case", truth_case, "Test process 1, 2 or 3")->required();
  truth_cmd->add_option("--n", truth_n, "Series length defining the frequency grid")->required();
  truth_cmd->add_option("--alphas", truth_alphas, "Quantile levels");
  truth_cmd->add_option("--seed", truth_seed, "Seed of the Monte Carlo truth");
  truth_cmd->add_option("--reps", truth_mc_opts.reps, "Monte Carlo realizations (>= 8)");
  truth_cmd->add_option("--n-long", truth_mc_opts.n_long, "Monte Carlo realization length (>= 2^17)");
  truth_cmd->add_option("--M", truth_bandwidth, "Monte Carlo lag-window bandwidth");
  truth_cmd->add_option("--maxlag", truth_maxlag, "Truncation lag of the semi-analytic truth");
  truth_cmd->add_flag("--mc", truth_force_mc, "Use the Monte Carlo oracle for case 1 as well");
  truth_cmd->add_flag("--normalized", truth_norm, "Divide by alpha(1-alpha)");
  truth_cmd->add_option("-o,--output", truth_out, "Output grid file (default stdout)");

  // eval
  std::string eval_est, eval_truth;
  auto* eval_cmd = app.add_subcommand("eval", "Print KLD and RMSE of an estimate against a truth grid");
  eval_cmd->add_option("estimate", eval_est, "Estimated grid file")->required();
  eval_cmd->add_option("truth", eval_truth, "Truth grid file")->required();

  // plot
  std::string plot_in, plot_out;
  int plot_cell = 4;
  auto* plot_cmd = app.add_subcommand("plot", "Render a grid file as a PNG heatmap");
  plot_cmd->add_option("grid", plot_in, "Grid file")->required();
  plot_cmd->add_option("-o,--output", plot_out, "Output PNG")->required();
  plot_cmd->add_option("--cell", plot_cell, "Pixels per grid cell")->check(CLI::PositiveNumber);

  // montecarlo
  MonteCarloSetup mc;
  std::string mc_estimators = "ar,ars,sar";
  std::string mc_alphas, mc_truth_file, mc_records, mc_sweep, mc_metric = "kld";
  std::uint64_t mc_truth_seed = 0;
  int mc_bandwidth = 0;
  bool mc_norm = false;
  auto* mc_cmd = app.add_subcommand("montecarlo", "Monte Carlo comparison of estimators against the truth");
  mc_cmd->add_option("--case", mc.case_id, "Test process 1, 2 or 3")->required();
  mc_cmd->add_option("--n", mc.n, "Series length")->required();
  mc_cmd->add_option("--runs", mc.runs, "Number of runs")->required()->check(CLI::PositiveNumber);
  mc_cmd->add_option("--seed", mc.seed, "Base seed; run r uses seed XOR r");
  mc_cmd->add_option("--estimators", mc_estimators, "Comma-separated list of lw, ar, ars, sar");
  mc_cmd->add_option("--alphas", mc_alphas, "Quantile levels");
  mc_cmd->add_option("--M", mc_bandwidth, "Lag-window bandwidth (required with lw)");
  mc_cmd->add_option("--truth", mc_truth_file, "Precomputed truth grid (default: computed)");
  mc_cmd->add_option("--truth-seed", mc_truth_seed, "Seed of the computed Monte Carlo truth");
  mc_cmd->add_option("--sweep", mc_sweep, "Sweep p (or M for lw) over a:b or a,b,c and report the minimizer");
  mc_cmd->add_option("--metric", mc_metric, "Sweep criterion")->check(CLI::IsMember({"kld", "rmse"}));
  mc_cmd->add_option("--records", mc_records, "Write per-run records to this file");
  mc_cmd->add_flag("--normalized", mc_norm, "Score normalized spectra");
  SpecFlags mc_f;
  mc_cmd->add_option("--p", mc_f.p, "Fixed AR order (default: AIC)");
  mc_cmd->add_option("--pmax", mc_f.pmax, "Largest order considered by AIC");
  mc_cmd->add_option("--knots", mc_f.knots, "Number of spline basis functions K");
  mc_cmd->add_option("--lambda", mc_f.lambda, "Fixed SAR smoothing parameter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::input);
  }

  try {
    if (*qcser_cmd) {
      const TimeSeries y = read_series(qcser_in);
      const QcsMatrix qcs = qcser(y, parse_alphas(qcser_alphas));
      emit(qcser_out, [&](std::ostream& os) { write_qcs(os, qcs); });
    } else if (*acf_cmd) {
      const QAcf acf = qacf(load_crossings(acf_in, acf_alphas), acf_maxlag);
      emit(acf_out, [&](std::ostream& os) {
        os << "# lag";
        for (double a : acf.alphas.levels()) os << ' ' << format17(a);
        os << '\n';
        for (int tau = 0; tau <= acf.maxlag; ++tau) {
          os << tau;
          for (Eigen::Index l = 0; l < acf.r.cols(); ++l) os << ' ' << format17(acf.r(tau, l));
          os << '\n';
        }
      });
    } else if (*spec_cmd) {
      const std::pair<CLI::App*, std::pair<EstimatorKind, SpecFlags*>> choices[] = {
          {lw_cmd, {EstimatorKind::lw, &lw_f}},
          {ar_cmd, {EstimatorKind::ar, &ar_f}},
          {ars_cmd, {EstimatorKind::ars, &ars_f}},
          {sar_cmd, {EstimatorKind::sar, &sar_f}}};
      for (const auto& [cmd, choice] : choices) {
        if (!*cmd) continue;
        const SpecFlags& f = *choice.second;
        const QcsMatrix qcs = load_crossings(f.input, f.alphas);
        SpectrumGrid g = estimate(qcs, to_config(choice.first, f));
        if (choice.first != EstimatorKind::lw) {
          if (choice.first != EstimatorKind::ar || f.method == "ls") g.set_meta("pmax", std::to_string(f.pmax));
          if (choice.first != EstimatorKind::ar) g.set_meta("knots", std::to_string(f.knots));
        }
        g.set_meta("source", f.input);
        emit(f.output, [&](std::ostream& os) { write_grid(os, g); });
      }
    } else if (*sim_cmd) {
      const TimeSeries y = generate(SimSpec{sim_case, sim_n, sim_seed, sim_burn});
      const std::string comment = "case " + std::to_string(sim_case) + " n " + std::to_string(sim_n) + " seed " +
                                  std::to_string(sim_seed) + " burn_in " + std::to_string(sim_burn);
      emit(sim_out, [&](std::ostream& os) { write_series(os, y, comment); });
    } else if (*truth_cmd) {
      const QuantileGrid alphas = parse_alphas(truth_alphas);
      TruthGrid t;
      const std::vector<double> freqs = fourier_frequencies(truth_n);
      if (truth_case == 1 && !truth_force_mc) {
        t = truth_gaussian(case1_coefficients(), alphas, truth_maxlag, freqs);
      } else {
        const SimSpec spec{truth_case, 64, truth_seed, 1000};
        spec.validate();
        t = truth_mc(spec, alphas, truth_bandwidth, freqs, truth_mc_opts);
      }
      t.grid.n = truth_n;
      t.grid.set_meta("case", std::to_string(truth_case));
      if (truth_norm) {
        normalize_columns(t.grid.s, alphas);
        if (t.se.size() > 0) normalize_columns(t.se, alphas);
        t.grid.normalized = true;
      }
      emit(truth_out, [&](std::ostream& os) { write_grid(os, t); });
    } else if (*eval_cmd) {
      const GridFile est = read_grid(eval_est);
      const GridFile truth = read_grid(eval_truth);
      const auto kind = est.grid.find_meta("estimator");
      double k = 0.0;
      if (kind && *kind == "lw") {
        const FlooredKld f = kld_floored(est.grid, truth.grid);
        k = f.value;
        std::cout << "KLD " << format17(k) << "\nRMSE " << format17(rmse(est.grid, truth.grid)) << "\nFLOORED "
                  << f.floored << '\n';
      } else {
        k = kld(est.grid, truth.grid);
        std::cout << "KLD " << format17(k) << "\nRMSE " << format17(rmse(est.grid, truth.grid)) << '\n';
      }
    } else if (*plot_cmd) {
      const GridFile g = read_grid(plot_in);
      write_png(plot_out, render_heatmap(g.grid, plot_cell));
    } else if (*mc_cmd) {
      mc.alphas = parse_alphas(mc_alphas);
      std::vector<EstimatorConfig> configs;
      {
        std::stringstream ss(mc_estimators);
        for (std::string item; std::getline(ss, item, ',');) {
          EstimatorConfig c = to_config(parse_estimator(item), mc_f);
          if (c.kind == EstimatorKind::lw) {
            if (mc_bandwidth <= 0 && mc_sweep.empty()) throw_input("--M is required with the lw estimator");
            c.bandwidth = mc_bandwidth;
          }
          configs.push_back(c);
        }
      }
      TruthGrid truth = mc_truth_file.empty() ? default_truth(mc.case_id, mc.n, mc.alphas, mc_truth_seed)
                                              : read_grid(mc_truth_file).to_truth();
      if (mc_norm && !truth.grid.normalized) {
        normalize_columns(truth.grid.s, truth.grid.alphas);
        truth.grid.normalized = true;
      }
      if (mc_sweep.empty()) {
        const std::vector<EvalReport> reports = run_monte_carlo(mc, configs, truth);
        print_report_header(std::cout);
        for (const auto& r : reports) print_report(std::cout, r);
        if (!mc_records.empty()) write_records(mc_records, reports);
      } else {
        const std::vector<int> values = parse_int_range(mc_sweep);
        const SweepMetric metric = mc_metric == "rmse" ? SweepMetric::rmse : SweepMetric::kld;
        std::vector<EvalReport> all;
        std::cout << "value\t";
        print_report_header(std::cout);
        for (const auto& c : configs) {
          const SweepResult s = sweep_parameter(mc, c, values, truth, metric);
          for (std::size_t i = 0; i < s.values.size(); ++i) {
            std::cout << s.values[i] << '\t';
            print_report(std::cout, s.reports[i]);
          }
          std::cout << "# best " << estimator_name(c.kind) << ' ' << (c.kind == EstimatorKind::lw ? "M" : "p") << ' '
                    << s.values[s.best] << '\n';
          all.insert(all.end(), s.reports.begin(), s.reports.end());
        }
        if (!mc_records.empty()) write_records(mc_records, all);
      }
    }
  } catch (const Error& e) {
    std::cerr << "qcspec: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qcspec: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
