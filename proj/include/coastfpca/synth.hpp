#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coastfpca/fpca.hpp"
#include "coastfpca/weekly.hpp"

namespace coastfpca {

/// Ground truth of a simulated dataset: the generative mirror of FpcaModel.
struct KlTruth {
  std::vector<int> grid;
  std::vector<double> mu;
  std::vector<std::vector<double>> phi;  // orthonormal under quad_weights
  std::vector<double> lambda;            // descending, positive
  double sigma2 = 0.0;
  std::vector<double> quad_weights;
  std::vector<std::string> site_ids;
  std::vector<std::vector<double>> beta;  // beta[site][k]
};

struct SimulateParams {
  int n_sites = 100;
  double observe_prob = 0.6;
  int max_gap = 4;
  std::uint64_t seed = 0;
  WeekWindow window{1, 52};
  // Generative curves on the window grid. Empty mu means zero; basis rows
  // are Gram-Schmidt orthonormalized under the trapezoid weights unless
  // already orthonormal.
  std::vector<double> mu;
  std::vector<std::vector<double>> basis;
  std::vector<double> lambda;
  double sigma2 = 0.0;
};

/// Gram-Schmidt under the weighted inner product <f, g> = sum_j w_j f_j g_j.
std::vector<std::vector<double>> orthonormalize(std::vector<std::vector<double>> basis,
                                                std::span<const double> weights);

/// Draw sparse series from the Karhunen-Loeve model
///   X_i(j) = mu(j) + sum_k beta_ik phi_k(j) + eps_ij,
/// beta_ik ~ N(0, lambda_k), eps ~ N(0, sigma2). Observation masks are
/// i.i.d. Bernoulli(observe_prob) per week, rejection-resampled as a whole
/// until no run of >= max_gap weeks is missing. Each site uses its own
/// derived stream (Rng::for_site), so output is bit-identical for a given
/// seed under any scheduling.
std::pair<std::vector<WeeklySeries>, KlTruth> simulate_kl(const SimulateParams& params);

/// Convenience: the standard two-component synthetic scenario
/// (mu = 2 + sin(2 pi t / 52), basis {1, sin(2 pi t / 52)} orthonormalized).
SimulateParams default_scenario(int n_sites, double observe_prob, double sigma2,
                                std::vector<double> lambda, std::uint64_t seed);

struct RecoveryReport {
  std::vector<double> phi_alignment;   // |<phi_hat_k, phi_k>_w|
  std::vector<double> score_corr;      // sign-aligned Pearson, per k
  double score_corr_pooled = 0.0;      // all components stacked
  std::vector<double> lambda_rel_err;  // |lambda_hat - lambda| / lambda
  double sigma2_abs_err = 0.0;
  double mu_max_err = 0.0;
  int k_compared = 0;
  bool k_mismatch = false;
};

/// Compare a fitted model against the generating truth over the first
/// min(K_model, K_truth) components; fitted_beta (per site, per k) feeds
/// the score correlations and may be empty.
RecoveryReport recovery_report(const FpcaModel& model, const KlTruth& truth,
                               std::span<const std::vector<double>> fitted_beta = {});

std::string truth_to_json(const KlTruth& truth);
KlTruth truth_from_json(const std::string& text);

}  // namespace coastfpca
