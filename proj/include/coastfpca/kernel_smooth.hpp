#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coastfpca/errors.hpp"

namespace coastfpca {

struct ScatterPoint1D {
  double t = 0.0;
  double y = 0.0;
  double w = 1.0;  // multiplicity weight, > 0
};

struct ScatterPoint2D {
  double s = 0.0;
  double t = 0.0;
  double y = 0.0;
  double w = 1.0;
};

/// Epanechnikov kernel, 0.75 (1 - u^2) on |u| < 1.
double epanechnikov(double u);

/// Kernel-weighted least-squares line fit at t0; returns the intercept,
/// or nothing when fewer than two distinct design points carry positive
/// kernel weight (or the local system is numerically singular).
std::optional<double> local_fit_1d(std::span<const ScatterPoint1D> points, double h, double t0);

/// Local plane fit at (s0, t0); intercept or nothing when degenerate.
std::optional<double> local_fit_2d(std::span<const ScatterPoint2D> points, double hs, double ht,
                                   double s0, double t0);

/// Local-linear curve estimate on eval_grid. Reproduces affine inputs to
/// numerical precision. Throws DegenerateLocalDesign with the index of the
/// first failing grid point; the caller is expected to widen h.
std::vector<double> local_linear_1d(std::span<const ScatterPoint1D> points, double h,
                                    std::span<const double> eval_grid);

/// Local-linear surface estimate on grid_s x grid_t (rows follow grid_s).
/// With symmetrize=true (square grids only) returns (S + S^T) / 2.
Eigen::MatrixXd local_linear_2d(std::span<const ScatterPoint2D> points, double hs, double ht,
                                std::span<const double> grid_s, std::span<const double> grid_t,
                                bool symmetrize = false);

/// Default candidate grid: `count` geometrically spaced bandwidths spanning
/// [spacing, width / 2].
std::vector<double> bandwidth_candidates(double spacing, double width, int count = 10);

// k-fold cross-validated bandwidth selection. Folds are assigned by a
// Fisher-Yates shuffle of point indices under Rng(seed) followed by
// round-robin fold labels; folds clamp to min(folds, n). A candidate whose
// out-of-fold prediction is degenerate anywhere is infeasible; candidates
// within 1e-12 * max(1, err) of the best error are tied and the largest
// tied bandwidth wins. Throws AllCandidatesDegenerate when nothing is
// feasible.
double select_bandwidth_cv(std::span<const ScatterPoint1D> points,
                           std::span<const double> candidates, int folds = 5,
                           std::uint64_t seed = 0);
double select_bandwidth_cv_2d(std::span<const ScatterPoint2D> points,
                              std::span<const double> candidates, int folds = 5,
                              std::uint64_t seed = 0);

/// Fold labels used by the CV routines (exposed so an independent CV loop
/// can reproduce the exact split).
std::vector<int> cv_fold_labels(std::size_t n, int folds, std::uint64_t seed);

}  // namespace coastfpca
