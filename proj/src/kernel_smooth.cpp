#include "coastfpca/kernel_smooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coastfpca/rng.hpp"

namespace coastfpca {

double epanechnikov(double u) {
  const double a = std::abs(u);
  return a < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

std::optional<double> local_fit_1d(std::span<const ScatterPoint1D> points, double h, double t0) {
  // Offsets are scaled by h so the normal equations stay well conditioned.
  double s0 = 0, s1 = 0, s2 = 0, t0sum = 0, t1sum = 0;
  double first_t = 0;
  int distinct = 0;
  for (const auto& p : points) {
    const double u = (p.t - t0) / h;
    const double k = epanechnikov(u) * p.w;
    if (k <= 0.0) continue;
    if (distinct == 0) {
      first_t = p.t;
      distinct = 1;
    } else if (distinct == 1 && p.t != first_t) {
      distinct = 2;
    }
    s0 += k;
    s1 += k * u;
    s2 += k * u * u;
    t0sum += k * p.y;
    t1sum += k * u * p.y;
  }
  if (distinct < 2) return std::nullopt;
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 1e-12 * s0 * s2)) return std::nullopt;
  return (s2 * t0sum - s1 * t1sum) / det;
}

std::optional<double> local_fit_2d(std::span<const ScatterPoint2D> points, double hs, double ht,
                                   double s0, double t0) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  int npos = 0;
  for (const auto& p : points) {
    const double us = (p.s - s0) / hs;
    const double ut = (p.t - t0) / ht;
    const double k = epanechnikov(us) * epanechnikov(ut) * p.w;
    if (k <= 0.0) continue;
    ++npos;
    const Eigen::Vector3d x{1.0, us, ut};
    a.noalias() += k * x * x.transpose();
    b.noalias() += (k * p.y) * x;
  }
  if (npos < 3) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a);
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 1e-12 * ev(2))) return std::nullopt;
  const Eigen::Vector3d sol =
      es.eigenvectors() * (es.eigenvectors().transpose() * b).cwiseQuotient(ev);
  return sol(0);
}

std::vector<double> local_linear_1d(std::span<const ScatterPoint1D> points, double h,
                                    std::span<const double> eval_grid) {
  std::vector<double> out;
  out.reserve(eval_grid.size());
  for (std::size_t i = 0; i < eval_grid.size(); ++i) {
    auto v = local_fit_1d(points, h, eval_grid[i]);
    if (!v) throw DegenerateLocalDesign(i);
    out.push_back(*v);
  }
  return out;
}

Eigen::MatrixXd local_linear_2d(std::span<const ScatterPoint2D> points, double hs, double ht,
                                std::span<const double> grid_s, std::span<const double> grid_t,
                                bool symmetrize) {
  Eigen::MatrixXd out(grid_s.size(), grid_t.size());
  for (std::size_t i = 0; i < grid_s.size(); ++i) {
    for (std::size_t j = 0; j < grid_t.size(); ++j) {
      auto v = local_fit_2d(points, hs, ht, grid_s[i], grid_t[j]);
      if (!v) throw DegenerateLocalDesign(i * grid_t.size() + j);
      out(i, j) = *v;
    }
  }
  if (symmetrize) {
    if (out.rows() != out.cols()) throw DimensionMismatch("symmetrize needs a square grid");
    out = ((out + out.transpose()) / 2.0).eval();
  }
  return out;
}

std::vector<double> bandwidth_candidates(double spacing, double width, int count) {
  if (!(spacing > 0) || !(width > 0) || count < 2)
    throw InvalidParams("bandwidth candidate grid needs spacing > 0, width > 0, count >= 2");
  const double lo = spacing;
  const double hi = std::max(width / 2.0, spacing * 1.0000001);
  std::vector<double> out(count);
  const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
  double h = lo;
  for (int i = 0; i < count; ++i, h *= ratio) out[i] = h;
  out.back() = hi;
  return out;
}

std::vector<int> cv_fold_labels(std::size_t n, int folds, std::uint64_t seed) {
  folds = std::max(1, std::min<int>(folds, static_cast<int>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[idx[pos]] = static_cast<int>(pos % folds);
  return fold;
}

namespace {

// Shared CV driver over any point type; the training subset is rebuilt once
// per (candidate, fold).
template <typename Point, typename FitFn>
double run_cv(std::span<const Point> points, std::span<const double> candidates, int folds,
              std::uint64_t seed, FitFn&& fit_at) {
  if (candidates.size() < 2) throw InvalidParams("need at least 2 bandwidth candidates");
  const std::size_t n = points.size();
  const auto fold = cv_fold_labels(n, folds, seed);
  const int n_folds = 1 + *std::max_element(fold.begin(), fold.end());
  double best_err = std::numeric_limits<double>::infinity();
  double best_h = -1.0;
  std::vector<Point> train;
  train.reserve(n);
  for (double h : candidates) {
    double sse = 0.0, wsum = 0.0;
    bool feasible = true;
    for (int f = 0; f < n_folds && feasible; ++f) {
      train.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (fold[j] != f) train.push_back(points[j]);
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] != f) continue;
        auto yhat = fit_at(std::span<const Point>(train), h, points[i]);
        if (!yhat) {
          feasible = false;
          break;
        }
        const double r = points[i].y - *yhat;
        sse += points[i].w * r * r;
        wsum += points[i].w;
      }
    }
    if (!feasible || wsum <= 0.0) continue;
    const double err = sse / wsum;
    const double tol = 1e-12 * std::max(1.0, std::min(err, best_err));
    if (err < best_err - tol) {
      best_err = err;
      best_h = h;
    } else if (err <= best_err + tol && h > best_h) {
      best_h = h;  // tie toward the larger bandwidth
      best_err = std::min(best_err, err);
    }
  }
  if (best_h < 0) throw AllCandidatesDegenerate();
  return best_h;
}

}  // namespace

double select_bandwidth_cv(std::span<const ScatterPoint1D> points,
                           std::span<const double> candidates, int folds, std::uint64_t seed) {
  return run_cv(points, candidates, folds, seed,
                [](std::span<const ScatterPoint1D> train, double h, const ScatterPoint1D& p) {
                  return local_fit_1d(train, h, p.t);
                });
}

double select_bandwidth_cv_2d(std::span<const ScatterPoint2D> points,
                              std::span<const double> candidates, int folds, std::uint64_t seed) {
  return run_cv(points, candidates, folds, seed,
                [](std::span<const ScatterPoint2D> train, double h, const ScatterPoint2D& p) {
                  return local_fit_2d(train, h, h, p.s, p.t);
                });
}

}  // namespace coastfpca
