#include "coastfpca/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coastfpca/rng.hpp"
#include "json.hpp"

namespace coastfpca {

namespace {

double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> w) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += w[j] * a[j] * b[j];
  return s;
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::string site_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "SYN%04d", index + 1);
  return buf;
}

}  // namespace

std::vector<std::vector<double>> orthonormalize(std::vector<std::vector<double>> basis,
                                                std::span<const double> weights) {
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].size() != weights.size())
      throw DimensionMismatch("basis row length != weight count");
    for (std::size_t j = 0; j < k; ++j) {
      const double proj = weighted_dot(basis[k], basis[j], weights);
      for (std::size_t i = 0; i < basis[k].size(); ++i) basis[k][i] -= proj * basis[j][i];
    }
    const double norm = std::sqrt(weighted_dot(basis[k], basis[k], weights));
    if (!(norm > 1e-12)) throw InvalidParams("basis functions are linearly dependent");
    for (double& v : basis[k]) v /= norm;
  }
  return basis;
}

std::pair<std::vector<WeeklySeries>, KlTruth> simulate_kl(const SimulateParams& params) {
  if (!(params.observe_prob > 0.0 && params.observe_prob <= 1.0))
    throw InvalidParams("observe_prob must lie in (0, 1]");
  if (params.n_sites < 1) throw InvalidParams("n_sites must be positive");
  if (params.sigma2 < 0.0) throw InvalidParams("sigma2 must be nonnegative");
  if (params.basis.size() != params.lambda.size())
    throw InvalidParams("basis and lambda sizes differ");
  if (!std::is_sorted(params.lambda.rbegin(), params.lambda.rend()))
    throw InvalidParams("lambda must be descending");
  for (double l : params.lambda)
    if (!(l > 0.0)) throw InvalidParams("lambda must be positive");

  KlTruth truth;
  for (int week = params.window.first; week <= params.window.last; ++week)
    truth.grid.push_back(week);
  const std::size_t j_count = truth.grid.size();
  truth.quad_weights = trapezoid_weights(j_count);
  truth.mu = params.mu.empty() ? std::vector<double>(j_count, 0.0) : params.mu;
  if (truth.mu.size() != j_count) throw InvalidParams("mu length != window length");
  truth.phi = orthonormalize(params.basis, truth.quad_weights);
  truth.lambda = params.lambda;
  truth.sigma2 = params.sigma2;
  const std::size_t k_count = truth.lambda.size();

  const double noise_sd = std::sqrt(params.sigma2);
  std::vector<WeeklySeries> series;
  series.reserve(params.n_sites);
  for (int i = 0; i < params.n_sites; ++i) {
    Rng rng = Rng::for_site(params.seed, std::uint64_t(i));
    // Whole-mask rejection keeps the per-week marginals clean.
    std::vector<bool> mask(j_count);
    bool ok = false;
    for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
      std::size_t observed = 0;
      for (std::size_t j = 0; j < j_count; ++j) {
        mask[j] = rng.uniform01() < params.observe_prob;
        if (mask[j]) ++observed;
      }
      if (observed == 0) continue;
      int run = 0;
      ok = true;
      for (std::size_t j = 0; j < j_count; ++j) {
        run = mask[j] ? 0 : run + 1;
        if (run >= params.max_gap) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) throw InvalidParams("could not draw a mask satisfying the gap constraint");

    std::vector<double> beta(k_count);
    for (std::size_t k = 0; k < k_count; ++k) beta[k] = rng.normal() * std::sqrt(truth.lambda[k]);

    WeeklySeries s;
    s.site_id = site_name(i);
    s.window = params.window;
    s.scale = SeriesScale::log10_count;
    for (std::size_t j = 0; j < j_count; ++j) {
      if (!mask[j]) continue;
      double v = truth.mu[j];
      for (std::size_t k = 0; k < k_count; ++k) v += beta[k] * truth.phi[k][j];
      if (noise_sd > 0.0) v += noise_sd * rng.normal();
      s.values[truth.grid[j]] = v;
    }
    truth.site_ids.push_back(s.site_id);
    truth.beta.push_back(std::move(beta));
    series.push_back(std::move(s));
  }
  return {std::move(series), std::move(truth)};
}

SimulateParams default_scenario(int n_sites, double observe_prob, double sigma2,
                                std::vector<double> lambda, std::uint64_t seed) {
  SimulateParams p;
  p.n_sites = n_sites;
  p.observe_prob = observe_prob;
  p.sigma2 = sigma2;
  p.lambda = std::move(lambda);
  p.seed = seed;
  p.window = {1, 52};
  const double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<double> constant(52, 1.0), sine(52);
  for (int j = 0; j < 52; ++j) {
    sine[j] = std::sin(two_pi * double(j + 1) / 52.0);
    p.mu.push_back(2.0 + sine[j]);
  }
  p.basis = {constant, sine};
  p.basis.resize(p.lambda.size());
  return p;
}

RecoveryReport recovery_report(const FpcaModel& model, const KlTruth& truth,
                               std::span<const std::vector<double>> fitted_beta) {
  if (model.grid != truth.grid) throw DimensionMismatch("model and truth grids differ");
  if (!fitted_beta.empty() && fitted_beta.size() != truth.beta.size())
    throw DimensionMismatch("fitted scores and truth cover different site counts");
  RecoveryReport report;
  const int k_truth = static_cast<int>(truth.phi.size());
  report.k_compared = std::min(model.k, k_truth);
  report.k_mismatch = model.k != k_truth;
  report.mu_max_err = 0.0;
  for (std::size_t j = 0; j < model.mu.size(); ++j)
    report.mu_max_err = std::max(report.mu_max_err, std::abs(model.mu[j] - truth.mu[j]));
  report.sigma2_abs_err = std::abs(model.sigma2 - truth.sigma2);

  std::vector<double> pooled_fit, pooled_true;
  for (int k = 0; k < report.k_compared; ++k) {
    const double dot = weighted_dot(model.phi[k], truth.phi[k], model.quad_weights);
    report.phi_alignment.push_back(std::abs(dot));
    report.lambda_rel_err.push_back(std::abs(model.lambda[k] - truth.lambda[k]) /
                                    truth.lambda[k]);
    if (!fitted_beta.empty()) {
      const double sign = dot < 0.0 ? -1.0 : 1.0;
      std::vector<double> fit, tru;
      for (std::size_t i = 0; i < fitted_beta.size(); ++i) {
        fit.push_back(sign * fitted_beta[i][k]);
        tru.push_back(truth.beta[i][k]);
      }
      report.score_corr.push_back(pearson_corr(fit, tru));
      pooled_fit.insert(pooled_fit.end(), fit.begin(), fit.end());
      pooled_true.insert(pooled_true.end(), tru.begin(), tru.end());
    }
  }
  if (!pooled_fit.empty()) report.score_corr_pooled = pearson_corr(pooled_fit, pooled_true);
  return report;
}

std::string truth_to_json(const KlTruth& truth) {
  nlohmann::json j;
  j["grid"] = truth.grid;
  j["mu"] = truth.mu;
  j["phi"] = truth.phi;
  j["lambda"] = truth.lambda;
  j["sigma2"] = truth.sigma2;
  j["quad_weights"] = truth.quad_weights;
  j["site_ids"] = truth.site_ids;
  j["beta"] = truth.beta;
  return j.dump(2);
}

KlTruth truth_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  KlTruth truth;
  truth.grid = j.at("grid").get<std::vector<int>>();
  truth.mu = j.at("mu").get<std::vector<double>>();
  truth.phi = j.at("phi").get<std::vector<std::vector<double>>>();
  truth.lambda = j.at("lambda").get<std::vector<double>>();
  truth.sigma2 = j.at("sigma2").get<double>();
  truth.quad_weights = j.at("quad_weights").get<std::vector<double>>();
  truth.site_ids = j.at("site_ids").get<std::vector<std::string>>();
  truth.beta = j.at("beta").get<std::vector<std::vector<double>>>();
  return truth;
}

}  // namespace coastfpca
