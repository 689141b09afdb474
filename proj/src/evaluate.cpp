#include "qcspec/evaluate.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <algorithm>

#include "qcspec/error.hpp"

namespace qcspec {

void require_same_grid(const SpectrumGrid& a, const SpectrumGrid& b) {
  if (a.s.rows() != b.s.rows() || a.s.cols() != b.s.cols()) throw_consistency("grid mismatch: dimensions differ");
  if (a.freqs != b.freqs) throw_consistency("grid mismatch: frequencies differ");
  if (!(a.alphas == b.alphas)) throw_consistency("grid mismatch: quantile levels differ");
  if (a.normalized != b.normalized) throw_consistency("grid mismatch: normalization differs");
  if (a.s.size() == 0) throw_consistency("grid mismatch: empty grid");
}

namespace {

double kld_cells(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  double acc = 0.0;
  for (Eigen::Index l = 0; l < est.cols(); ++l)
    for (Eigen::Index k = 0; k < est.rows(); ++k) {
      const double r = est(k, l) / truth(k, l);
      acc += r - std::log(r) - 1.0;
    }
  return acc / static_cast<double>(est.size());
}

void require_positive(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!(m.data()[i] > 0.0)) throw_consistency(std::string("nonpositive ") + what + " cell in KLD");
}

}  // namespace

double kld(const SpectrumGrid& est, const SpectrumGrid& truth) {
  require_same_grid(est, truth);
  require_positive(truth.s, "truth");
  require_positive(est.s, "estimate");
  return kld_cells(est.s, truth.s);
}

FlooredKld kld_floored(const SpectrumGrid& est, const SpectrumGrid& truth) {
  require_same_grid(est, truth);
  require_positive(truth.s, "truth");
  Eigen::MatrixXd s = est.s;
  FlooredKld out;
  for (Eigen::Index l = 0; l < s.cols(); ++l) {
    const double a = est.alphas[l];
    const double floor = est.normalized ? 1e-8 : 1e-8 * a * (1.0 - a);
    for (Eigen::Index k = 0; k < s.rows(); ++k)
      if (!(s(k, l) >= floor)) {
        s(k, l) = floor;
        ++out.floored;
      }
  }
  out.value = kld_cells(s, truth.s);
  return out;
}

double mse(const SpectrumGrid& est, const SpectrumGrid& truth) {
  require_same_grid(est, truth);
  return (est.s - truth.s).squaredNorm() / static_cast<double>(est.s.size());
}

double rmse(const SpectrumGrid& est, const SpectrumGrid& truth) { return std::sqrt(mse(est, truth)); }

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::lw: return "lw";
    case EstimatorKind::ar: return "ar";
    case EstimatorKind::ars: return "ars";
    case EstimatorKind::sar: return "sar";
  }
  return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "lw") return EstimatorKind::lw;
  if (name == "ar") return EstimatorKind::ar;
  if (name == "ars") return EstimatorKind::ars;
  if (name == "sar") return EstimatorKind::sar;
  throw_input("unknown estimator '" + name + "'");
}

std::string EstimatorConfig::label() const {
  std::string s = estimator_name(kind);
  if (kind == EstimatorKind::lw) return s + "(M=" + std::to_string(bandwidth) + ")";
  if (p) s += "(p=" + std::to_string(*p) + ")";
  return s;
}

SpectrumGrid estimate(const QcsMatrix& qcs, const EstimatorConfig& config) {
  switch (config.kind) {
    case EstimatorKind::lw: {
      if (config.bandwidth <= 0) throw_input("lag-window estimate needs a bandwidth M > 0");
      if (config.bandwidth >= qcs.n()) throw_input("bandwidth M must be smaller than n");
      return spec_lw(qacf(qcs, config.bandwidth), config.bandwidth, config.normalized);
    }
    case EstimatorKind::ar: {
      ArOptions o;
      o.p = config.p;
      o.pmax = config.pmax;
      o.method = config.method;
      o.normalized = config.normalized;
      return spec_ar(qcs, o);
    }
    case EstimatorKind::ars: {
      ArsOptions o;
      o.p = config.p;
      o.pmax = config.pmax;
      o.num_basis = config.knots;
      o.normalized = config.normalized;
      return spec_ars(qcs, o);
    }
    case EstimatorKind::sar: {
      if (qcs.n() < 8) throw_input("series too short: need n >= 8");
      SarOptions o;
      o.p = config.p;
      o.pmax = config.pmax;
      o.lambda = config.lambda;
      const SplineBasis basis = SplineBasis::for_levels(qcs.alphas, config.knots);
      const SarModel model = sar_fit(qcs, basis, o);
      SpectrumGrid g = eval_spectrum(model, fourier_frequencies(qcs.n()), qcs.alphas, config.normalized);
      g.n = qcs.n();
      return g;
    }
  }
  throw_input("unknown estimator");
}

SpectrumGrid estimate(const TimeSeries& y, const QuantileGrid& alphas, const EstimatorConfig& config) {
  y.require_estimable();
  return estimate(qcser(y, alphas), config);
}

EvalReport summarize(const std::string& estimator, int case_id, Eigen::Index n, std::vector<RunRecord> records) {
  EvalReport rep;
  rep.estimator = estimator;
  rep.case_id = case_id;
  rep.n = n;
  rep.runs = static_cast<int>(records.size());
  double k_sum = 0.0, k_sq = 0.0, m_sum = 0.0, m_sq = 0.0;
  int ok = 0;
  for (const RunRecord& r : records) {
    if (!r.ok) {
      ++rep.failed;
      continue;
    }
    ++ok;
    k_sum += r.kld;
    k_sq += r.kld * r.kld;
    m_sum += r.mse;
    m_sq += r.mse * r.mse;
  }
  if (ok > 0) {
    rep.kld_mean = k_sum / ok;
    const double mse_mean = m_sum / ok;
    rep.rmse_mean = std::sqrt(mse_mean);
    if (ok > 1) {
      const double k_var = std::max(0.0, (k_sq - ok * rep.kld_mean * rep.kld_mean) / (ok - 1));
      const double m_var = std::max(0.0, (m_sq - ok * mse_mean * mse_mean) / (ok - 1));
      rep.kld_se = std::sqrt(k_var / ok);
      // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
      rep.rmse_se = rep.rmse_mean > 0.0 ? std::sqrt(m_var / ok) / (2.0 * rep.rmse_mean) : 0.0;
    }
  }
  rep.records = std::move(records);
  return rep;
}

std::vector<EvalReport> run_monte_carlo(const MonteCarloSetup& setup, const std::vector<EstimatorConfig>& estimators,
                                        const TruthGrid& truth) {
  if (setup.runs < 1) throw_input("need at least one Monte Carlo run");
  if (estimators.empty()) throw_input("no estimators given");
  const std::vector<double> freqs = fourier_frequencies(setup.n);
  if (truth.grid.freqs != freqs || !(truth.grid.alphas == setup.alphas))
    throw_consistency("grid mismatch: truth grid does not match the Monte Carlo setup");
  const std::size_t ne = estimators.size();
  std::vector<std::vector<RunRecord>> records(ne, std::vector<RunRecord>(static_cast<std::size_t>(setup.runs)));

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < setup.runs; ++r) {
    const std::uint64_t seed = setup.seed ^ static_cast<std::uint64_t>(r);
    std::optional<QcsMatrix> qcs;
    std::string sim_error;
    try {
      qcs = qcser(generate(SimSpec{setup.case_id, setup.n, seed, setup.burn_in}), setup.alphas);
    } catch (const std::exception& e) {
      sim_error = e.what();
    }
    for (std::size_t e = 0; e < ne; ++e) {
      RunRecord& rec = records[e][static_cast<std::size_t>(r)];
      rec.run = r;
      rec.seed = seed;
      if (!qcs) {
        rec.ok = false;
        rec.error = sim_error;
        continue;
      }
      try {
        EstimatorConfig cfg = estimators[e];
        cfg.normalized = truth.grid.normalized;
        const SpectrumGrid est = estimate(*qcs, cfg);
        if (cfg.kind == EstimatorKind::lw) {
          const FlooredKld f = kld_floored(est, truth.grid);
          rec.kld = f.value;
          rec.floored = f.floored;
        } else {
          rec.kld = kld(est, truth.grid);
        }
        rec.mse = mse(est, truth.grid);
        rec.rmse = std::sqrt(rec.mse);
      } catch (const std::exception& ex) {
        rec.ok = false;
        rec.error = ex.what();
      }
    }
  }

  std::vector<EvalReport> reports;
  for (std::size_t e = 0; e < ne; ++e)
    reports.push_back(summarize(estimators[e].label(), setup.case_id, setup.n, std::move(records[e])));
  return reports;
}

PairedGap paired_kld_gap(const EvalReport& a, const EvalReport& b) {
  if (a.records.size() != b.records.size()) throw_consistency("paired reports have different run counts");
  PairedGap g;
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (!a.records[i].ok || !b.records[i].ok) continue;
    const double d = b.records[i].kld - a.records[i].kld;
    sum += d;
    sq += d * d;
    ++g.runs;
  }
  if (g.runs == 0) return g;
  g.mean = sum / g.runs;
  if (g.runs > 1) g.se = std::sqrt(std::max(0.0, (sq - g.runs * g.mean * g.mean) / (g.runs - 1)) / g.runs);
  return g;
}

SweepResult sweep_parameter(const MonteCarloSetup& setup, const EstimatorConfig& base, const std::vector<int>& values,
                            const TruthGrid& truth, SweepMetric metric) {
  if (values.empty()) throw_input("sweep needs at least one value");
  std::vector<EstimatorConfig> configs;
  for (int v : values) {
    EstimatorConfig c = base;
    if (base.kind == EstimatorKind::lw)
      c.bandwidth = v;
    else
      c.p = v;
    configs.push_back(c);
  }
  SweepResult out;
  out.values = values;
  out.reports = run_monte_carlo(setup, configs, truth);
  const auto score = [metric](const EvalReport& r) {
    if (r.failed == r.runs) return std::numeric_limits<double>::infinity();
    return metric == SweepMetric::kld ? r.kld_mean : r.rmse_mean;
  };
  for (std::size_t i = 1; i < out.reports.size(); ++i)
    if (score(out.reports[i]) < score(out.reports[out.best])) out.best = i;
  return out;
}

}  // namespace qcspec
