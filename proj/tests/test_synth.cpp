#include <cmath>

#include "coastfpca/synth.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace coastfpca;

TEST_SUITE("synth") {

TEST_CASE("orthonormalize produces an orthonormal system; dependent input throws") {
  const auto w = trapezoid_weights(52);
  const auto basis =
      orthonormalize({std::vector<double>(52, 1.0), test_helpers::sine_curve(1, 52)}, w);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      double dot = 0;
      for (int j = 0; j < 52; ++j) dot += w[j] * basis[a][j] * basis[b][j];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(
      orthonormalize({std::vector<double>(52, 1.0), std::vector<double>(52, 2.0)}, w),
      InvalidParams);
}

TEST_CASE("same seed gives a bit-identical dataset") {
  const auto params = default_scenario(50, 0.6, 0.04, {1.0, 0.25}, 99);
  auto [series1, truth1] = simulate_kl(params);
  auto [series2, truth2] = simulate_kl(params);
  REQUIRE(series1.size() == series2.size());
  for (std::size_t i = 0; i < series1.size(); ++i) CHECK(series1[i] == series2[i]);
  CHECK(truth1.beta == truth2.beta);

  const auto params_other = default_scenario(50, 0.6, 0.04, {1.0, 0.25}, 100);
  auto [series3, truth3] = simulate_kl(params_other);
  CHECK(series3[0].values != series1[0].values);
}

TEST_CASE("every emitted mask satisfies the gap constraint") {
  const auto params = default_scenario(200, 0.5, 0.04, {1.0, 0.25}, 3);
  auto [series, truth] = simulate_kl(params);
  for (const auto& s : series) {
    CHECK(!s.values.empty());
    CHECK(gap_filter_keep(s, params.max_gap));
  }
}

TEST_CASE("noiseless draws equal the expansion exactly") {
  auto params = default_scenario(30, 0.7, 0.0, {1.0, 0.25}, 11);
  auto [series, truth] = simulate_kl(params);
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (const auto& [week, value] : series[i].values) {
      const std::size_t j = std::size_t(week - 1);
      double expected = truth.mu[j];
      for (std::size_t k = 0; k < truth.lambda.size(); ++k)
        expected += truth.beta[i][k] * truth.phi[k][j];
      // identical arithmetic up to FMA contraction differences
      CHECK(std::abs(value - expected) <= 1e-12);
    }
  }
}

TEST_CASE("score draws match their variances at n = 10000") {
  const auto params = default_scenario(10000, 0.9, 0.0, {1.0, 0.25}, 2024);
  auto [series, truth] = simulate_kl(params);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0;
    for (const auto& b : truth.beta) mean += b[k];
    mean /= double(truth.beta.size());
    double var = 0;
    for (const auto& b : truth.beta) var += (b[k] - mean) * (b[k] - mean);
    var /= double(truth.beta.size() - 1);
    CHECK(var == doctest::Approx(truth.lambda[k]).epsilon(0.05));
  }
}

TEST_CASE("empirical covariance of dense noiseless draws converges") {
  auto params = default_scenario(10000, 1.0, 0.0, {1.0, 0.25}, 31);
  auto [series, truth] = simulate_kl(params);
  const std::size_t j_count = truth.grid.size();
  // empirical covariance around the true mean
  std::vector<std::vector<double>> cov(j_count, std::vector<double>(j_count, 0.0));
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<double> centered(j_count);
    for (std::size_t j = 0; j < j_count; ++j)
      centered[j] = series[i].values.at(truth.grid[j]) - truth.mu[j];
    for (std::size_t a = 0; a < j_count; ++a)
      for (std::size_t b = 0; b < j_count; ++b) cov[a][b] += centered[a] * centered[b];
  }
  double max_err = 0, max_true = 0;
  for (std::size_t a = 0; a < j_count; ++a) {
    for (std::size_t b = 0; b < j_count; ++b) {
      cov[a][b] /= double(series.size());
      double g_true = 0;
      for (std::size_t k = 0; k < truth.lambda.size(); ++k)
        g_true += truth.lambda[k] * truth.phi[k][a] * truth.phi[k][b];
      max_err = std::max(max_err, std::abs(cov[a][b] - g_true));
      max_true = std::max(max_true, std::abs(g_true));
    }
  }
  CHECK(max_err <= 0.05 * max_true);
}

TEST_CASE("invalid parameters are rejected") {
  auto params = default_scenario(10, 0.6, 0.04, {1.0, 0.25}, 1);
  params.observe_prob = 0.0;
  CHECK_THROWS_AS(simulate_kl(params), InvalidParams);
  params = default_scenario(10, 0.6, 0.04, {0.25, 1.0}, 1);  // ascending
  CHECK_THROWS_AS(simulate_kl(params), InvalidParams);
  params = default_scenario(0, 0.6, 0.04, {1.0}, 1);
  CHECK_THROWS_AS(simulate_kl(params), InvalidParams);
}

TEST_CASE("recovery report on the injected truth is perfect") {
  auto params = default_scenario(25, 0.8, 0.02, {1.0, 0.25}, 6);
  auto [series, truth] = simulate_kl(params);

  FpcaModel model;
  model.grid = truth.grid;
  model.mu = truth.mu;
  model.lambda = truth.lambda;
  model.phi = truth.phi;
  model.sigma2 = truth.sigma2;
  model.quad_weights = truth.quad_weights;
  model.k = 2;
  model.fve = {0.8, 1.0};
  model.n_sites = 25;

  const auto report = recovery_report(model, truth, truth.beta);
  REQUIRE(report.k_compared == 2);
  CHECK(!report.k_mismatch);
  for (double a : report.phi_alignment) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
  for (double e : report.lambda_rel_err) CHECK(e == 0.0);
  CHECK(report.sigma2_abs_err == 0.0);
  CHECK(report.mu_max_err == 0.0);
  for (double c : report.score_corr) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));

  // component-count mismatch is flagged and comparison covers min(K)
  KlTruth truth1 = truth;
  truth1.phi.resize(1);
  truth1.lambda.resize(1);
  for (auto& b : truth1.beta) b.resize(1);
  const auto mismatch = recovery_report(model, truth1, truth1.beta);
  CHECK(mismatch.k_compared == 1);
  CHECK(mismatch.k_mismatch);
}

}  // TEST_SUITE
