#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coastfpca/kernel_smooth.hpp"
#include "coastfpca/weekly.hpp"

namespace coastfpca {

/// Fitted sparse-FPCA model on a weekly grid. Eigenfunctions are
/// orthonormal under the trapezoid quadrature weights; eigenvalues are the
/// positive spectrum of the smoothed covariance surface, descending.
struct FpcaModel {
  std::vector<int> grid;                 // weeks, ascending
  std::vector<double> mu;                // mean curve on grid
  std::vector<double> lambda;            // positive eigenvalues, descending
  std::vector<std::vector<double>> phi;  // phi[k] on grid, one per eigenvalue
  double sigma2 = 0.0;                   // measurement-error variance
  std::vector<double> quad_weights;
  std::vector<double> fve;               // cumulative fraction of variance explained
  int k = 0;                             // selected component count
  int n_sites = 0;
  double bw_mean = 0.0, bw_cov = 0.0, bw_diag = 0.0;  // effective bandwidths

  std::size_t grid_index(int week) const;  // throws DimensionMismatch if absent
};

struct FpcaOptions {
  double fve_threshold = 0.95;
  std::optional<int> k_override;
  std::vector<double> bandwidth_candidates;  // empty -> geometric default grid
  int cv_folds = 5;
  std::uint64_t seed = 0;
};

/// Trapezoid quadrature weights on a uniform grid of n points.
std::vector<double> trapezoid_weights(std::size_t n, double spacing = 1.0);

/// Mean curve: local-linear smooth of the pooled (week, value) scatter of
/// all series, evaluated on `grid`. Needs at least 3 series.
std::vector<double> estimate_mean(std::span<const WeeklySeries> series, std::span<const int> grid,
                                  const FpcaOptions& options = {}, double* bandwidth_out = nullptr);

struct RawCovariances {
  std::vector<ScatterPoint2D> off_diag;  // both orientations of every pair
  std::vector<ScatterPoint1D> diag;
};

/// Centered cross-products (X_i(j) - mu(j)) (X_i(l) - mu(l)) for every
/// ordered pair of observed weeks of every site; j != l goes to off_diag,
/// j == l to diag.
RawCovariances raw_covariances(std::span<const WeeklySeries> series, std::span<const int> grid,
                               std::span<const double> mu);

/// Smoothed, symmetrized covariance surface from off-diagonal products
/// only (the diagonal is excluded so the measurement-error variance does
/// not contaminate the surface).
Eigen::MatrixXd estimate_covariance_surface(std::span<const ScatterPoint2D> off_diag,
                                            std::span<const int> grid,
                                            const FpcaOptions& options = {},
                                            double* bandwidth_out = nullptr);

/// sigma^2 = max(0, mean over the middle 50% of the grid of V(t) - G(t,t))
/// where V is the local-linear smooth of the raw diagonal products.
double estimate_error_variance(std::span<const ScatterPoint1D> diag, const Eigen::MatrixXd& G,
                               std::span<const int> grid, const FpcaOptions& options = {},
                               double* bandwidth_out = nullptr);

struct EigenPairs {
  std::vector<double> lambda;            // positive, descending
  std::vector<std::vector<double>> phi;  // orthonormal under quad weights
};

/// Weighted symmetric eigenproblem of G: scale by sqrt(w) on both sides,
/// decompose, unscale. Keeps strictly positive eigenvalues. Sign fixed so
/// sum_j w_j phi_k(j) >= 0, tie (|sum| <= 1e-12) broken by phi_k(first) >= 0.
EigenPairs eigen_decompose(const Eigen::MatrixXd& G, std::span<const double> quad_weights);

/// Cumulative FVE table and K = min{k : fve_k >= threshold}, clamped to
/// k_cap (= n - 2) and the number of positive eigenvalues. A manual
/// override is clamped the same way.
std::pair<int, std::vector<double>> select_k_fve(std::span<const double> lambda,
                                                 double threshold = 0.95, int k_cap = 0,
                                                 std::optional<int> k_override = std::nullopt);

/// End-to-end fit on a common window. Series with no observations inside
/// the window are ignored.
FpcaModel fit_fpca(std::span<const WeeklySeries> series, WeekWindow window,
                   const FpcaOptions& options = {});

/// Conditional-expectation scores for one (possibly sparse) series:
/// beta = Lambda Phi_i^T (Phi_i Lambda Phi_i^T + sigma^2 I)^{-1} (y - mu),
/// computed through the equivalent K x K system
/// beta = Lambda (Phi_i^T Phi_i Lambda + sigma^2 I)^{-1} Phi_i^T (y - mu).
/// Near-singular systems are ridge-regularized by 1e-8 trace(Sigma_i)/n_i.
std::vector<double> pace_scores(const WeeklySeries& series, const FpcaModel& model);

/// Quadrature scores beta_k = sum_j w_j (X(j) - mu(j)) phi_k(j); requires
/// the series to be observed at every grid point (NotDense otherwise).
std::vector<double> integral_scores(const WeeklySeries& series, const FpcaModel& model);

/// X_hat(j) = mu(j) + sum_k beta_k phi_k(j) at the requested weeks.
std::vector<double> reconstruct(const FpcaModel& model, std::span<const double> beta,
                                std::span<const int> weeks);

/// Scores plus percentile ranks (100 (midrank - 1) / (n - 1)) and decile
/// bins for every series, per component k <= K.
struct ScoreVector {
  std::string site_id;
  std::vector<double> beta;
  std::vector<double> percentile;
  std::vector<int> decile_bin;
};

std::vector<ScoreVector> score_all(std::span<const WeeklySeries> series, const FpcaModel& model);

// model.json serialization.
std::string model_to_json(const FpcaModel& model);
FpcaModel model_from_json(const std::string& text);

void write_scores(std::ostream& out, std::span<const ScoreVector> scores);
std::vector<ScoreVector> read_scores(std::istream& in);

}  // namespace coastfpca
