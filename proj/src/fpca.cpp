#include "coastfpca/fpca.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "coastfpca/association.hpp"
#include "coastfpca/util.hpp"
#include "json.hpp"

namespace coastfpca {

namespace {

std::vector<double> default_candidates(std::span<const int> grid, const FpcaOptions& options) {
  if (!options.bandwidth_candidates.empty()) return options.bandwidth_candidates;
  const double width = grid.empty() ? 1.0 : double(grid.back() - grid.front());
  return bandwidth_candidates(1.0, std::max(width, 2.0));
}

// Evaluate with the selected bandwidth, widening through the candidate
// list (then geometrically) whenever the local design degenerates at some
// grid node.
template <typename EvalFn>
auto eval_with_widening(double h0, std::span<const double> candidates, double* bandwidth_out,
                        EvalFn&& eval) {
  double h = h0;
  std::size_t next = 0;
  while (next < candidates.size() && candidates[next] <= h0) ++next;
  for (int attempt = 0;; ++attempt) {
    try {
      auto result = eval(h);
      if (bandwidth_out) *bandwidth_out = h;
      return result;
    } catch (const DegenerateLocalDesign&) {
      if (attempt >= 40) throw;
      h = next < candidates.size() ? candidates[next++] : h * 1.5;
    }
  }
}

// Collapse coincident design points into weighted means; exact for the
// local least-squares fits and for the CV argmin.
std::vector<ScatterPoint1D> aggregate_1d(std::span<const ScatterPoint1D> points) {
  std::map<double, std::pair<double, double>> acc;  // t -> (sum w*y, sum w)
  for (const auto& p : points) {
    auto& slot = acc[p.t];
    slot.first += p.w * p.y;
    slot.second += p.w;
  }
  std::vector<ScatterPoint1D> out;
  out.reserve(acc.size());
  for (const auto& [t, sw] : acc) out.push_back({t, sw.first / sw.second, sw.second});
  return out;
}

std::vector<ScatterPoint2D> aggregate_2d(std::span<const ScatterPoint2D> points) {
  std::map<std::pair<double, double>, std::pair<double, double>> acc;
  for (const auto& p : points) {
    auto& slot = acc[{p.s, p.t}];
    slot.first += p.w * p.y;
    slot.second += p.w;
  }
  std::vector<ScatterPoint2D> out;
  out.reserve(acc.size());
  for (const auto& [st, sw] : acc)
    out.push_back({st.first, st.second, sw.first / sw.second, sw.second});
  return out;
}

std::vector<double> grid_as_double(std::span<const int> grid) {
  return std::vector<double>(grid.begin(), grid.end());
}

}  // namespace

std::size_t FpcaModel::grid_index(int week) const {
  auto it = std::lower_bound(grid.begin(), grid.end(), week);
  if (it == grid.end() || *it != week)
    throw DimensionMismatch("week " + std::to_string(week) + " is not on the model grid");
  return std::size_t(it - grid.begin());
}

std::vector<double> trapezoid_weights(std::size_t n, double spacing) {
  if (n == 0) return {};
  if (n == 1) return {spacing};
  std::vector<double> w(n, spacing);
  w.front() = w.back() = spacing / 2.0;
  return w;
}

std::vector<double> estimate_mean(std::span<const WeeklySeries> series, std::span<const int> grid,
                                  const FpcaOptions& options, double* bandwidth_out) {
  if (series.size() < 3) throw InsufficientData(series.size());
  std::vector<ScatterPoint1D> raw;
  for (const auto& s : series)
    for (const auto& [week, value] : s.values) raw.push_back({double(week), value, 1.0});
  if (raw.empty()) throw InsufficientData(0);
  const auto points = aggregate_1d(raw);
  const auto cands = default_candidates(grid, options);
  const double h0 = select_bandwidth_cv(points, cands, options.cv_folds, options.seed);
  const auto dgrid = grid_as_double(grid);
  return eval_with_widening(h0, cands, bandwidth_out,
                            [&](double h) { return local_linear_1d(points, h, dgrid); });
}

RawCovariances raw_covariances(std::span<const WeeklySeries> series, std::span<const int> grid,
                               std::span<const double> mu) {
  if (mu.size() != grid.size()) throw DimensionMismatch("mu length != grid length");
  std::map<int, std::size_t> index;
  for (std::size_t j = 0; j < grid.size(); ++j) index[grid[j]] = j;
  RawCovariances out;
  for (const auto& s : series) {
    std::vector<std::pair<double, double>> centered;  // (week, residual)
    centered.reserve(s.values.size());
    for (const auto& [week, value] : s.values) {
      auto it = index.find(week);
      if (it == index.end())
        throw DimensionMismatch("series " + s.site_id + " has week off the grid");
      centered.emplace_back(double(week), value - mu[it->second]);
    }
    for (const auto& [wj, rj] : centered) {
      for (const auto& [wl, rl] : centered) {
        if (wj == wl) continue;
        out.off_diag.push_back({wj, wl, rj * rl, 1.0});
      }
      out.diag.push_back({wj, rj * rj, 1.0});
    }
  }
  return out;
}

Eigen::MatrixXd estimate_covariance_surface(std::span<const ScatterPoint2D> off_diag,
                                            std::span<const int> grid, const FpcaOptions& options,
                                            double* bandwidth_out) {
  if (off_diag.empty()) throw InsufficientData(0);
  const auto points = aggregate_2d(off_diag);
  const auto cands = default_candidates(grid, options);
  const double h0 = select_bandwidth_cv_2d(points, cands, options.cv_folds, options.seed + 1);
  const auto dgrid = grid_as_double(grid);
  return eval_with_widening(h0, cands, bandwidth_out, [&](double h) {
    return local_linear_2d(points, h, h, dgrid, dgrid, /*symmetrize=*/true);
  });
}

double estimate_error_variance(std::span<const ScatterPoint1D> diag, const Eigen::MatrixXd& G,
                               std::span<const int> grid, const FpcaOptions& options,
                               double* bandwidth_out) {
  if (diag.empty()) throw InsufficientData(0);
  const auto points = aggregate_1d(diag);
  const auto cands = default_candidates(grid, options);
  const double h0 = select_bandwidth_cv(points, cands, options.cv_folds, options.seed + 2);
  const auto dgrid = grid_as_double(grid);
  const auto v = eval_with_widening(h0, cands, bandwidth_out,
                                    [&](double h) { return local_linear_1d(points, h, dgrid); });
  // Average V(t) - G(t,t) over the middle half of the grid to dodge
  // boundary bias.
  const std::size_t n = grid.size();
  const std::size_t lo = n / 4;
  const std::size_t hi = n - n / 4;
  double sum = 0.0;
  for (std::size_t j = lo; j < hi; ++j) sum += v[j] - G(j, j);
  return std::max(0.0, sum / double(hi - lo));
}

EigenPairs eigen_decompose(const Eigen::MatrixXd& G, std::span<const double> quad_weights) {
  const auto n = G.rows();
  if (G.cols() != n || std::ssize(quad_weights) != n)
    throw DimensionMismatch("covariance surface and quadrature weights disagree");
  Eigen::VectorXd sqrtw(n);
  for (Eigen::Index j = 0; j < n; ++j) sqrtw(j) = std::sqrt(quad_weights[j]);
  Eigen::MatrixXd b = sqrtw.asDiagonal() * G * sqrtw.asDiagonal();
  b = ((b + b.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  // Positivity beyond numerical dust: eigenvalues below 1e-12 of the
  // spectral magnitude are roundoff zeros, not components.
  const double floor_val = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
  EigenPairs out;
  for (Eigen::Index r = n - 1; r >= 0; --r) {  // ascending -> descending
    const double lambda = es.eigenvalues()(r);
    if (!(lambda > floor_val)) break;
    Eigen::VectorXd phi = es.eigenvectors().col(r).cwiseQuotient(sqrtw);
    double wsum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) wsum += quad_weights[j] * phi(j);
    if (wsum < -1e-12 || (std::abs(wsum) <= 1e-12 && phi(0) < 0.0)) phi = -phi;
    out.lambda.push_back(lambda);
    out.phi.emplace_back(phi.data(), phi.data() + n);
  }
  if (out.lambda.empty()) throw NoPositiveEigenvalues();
  return out;
}

std::pair<int, std::vector<double>> select_k_fve(std::span<const double> lambda, double threshold,
                                                 int k_cap, std::optional<int> k_override) {
  if (lambda.empty()) throw InvalidParams("empty eigenvalue list");
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  std::vector<double> fve(lambda.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    cum += lambda[i];
    fve[i] = cum / total;
  }
  int cap = static_cast<int>(lambda.size());
  if (k_cap > 0) cap = std::min(cap, k_cap);
  int k = cap;
  for (std::size_t i = 0; i < fve.size(); ++i) {
    if (fve[i] >= threshold - 1e-12) {
      k = std::min<int>(int(i) + 1, cap);
      break;
    }
  }
  if (k_override) k = std::clamp(*k_override, 1, cap);
  return {std::max(k, 1), fve};
}

FpcaModel fit_fpca(std::span<const WeeklySeries> series, WeekWindow window,
                   const FpcaOptions& options) {
  std::vector<WeeklySeries> kept;
  for (const auto& s : series) {
    if (s.values.empty()) continue;
    if (s.values.begin()->first < window.first || s.values.rbegin()->first > window.last)
      throw DimensionMismatch("series " + s.site_id + " extends outside the fit window");
    kept.push_back(s);
  }
  if (kept.size() < 3) throw InsufficientData(kept.size());

  FpcaModel model;
  for (int week = window.first; week <= window.last; ++week) model.grid.push_back(week);
  const std::size_t j_count = model.grid.size();
  model.quad_weights = trapezoid_weights(j_count);
  model.n_sites = static_cast<int>(kept.size());
  model.mu = estimate_mean(kept, model.grid, options, &model.bw_mean);

  // Accumulate centered products directly on the week lattice.
  Eigen::MatrixXd off_sum = Eigen::MatrixXd::Zero(j_count, j_count);
  Eigen::MatrixXd off_cnt = Eigen::MatrixXd::Zero(j_count, j_count);
  Eigen::VectorXd diag_sum = Eigen::VectorXd::Zero(j_count);
  Eigen::VectorXd diag_cnt = Eigen::VectorXd::Zero(j_count);
  std::vector<std::pair<std::size_t, double>> centered;
  for (const auto& s : kept) {
    centered.clear();
    for (const auto& [week, value] : s.values) {
      const auto j = std::size_t(week - window.first);
      centered.emplace_back(j, value - model.mu[j]);
    }
    for (const auto& [ja, ra] : centered) {
      for (const auto& [jb, rb] : centered) {
        if (ja == jb) continue;
        off_sum(ja, jb) += ra * rb;
        off_cnt(ja, jb) += 1.0;
      }
      diag_sum(ja) += ra * ra;
      diag_cnt(ja) += 1.0;
    }
  }
  std::vector<ScatterPoint2D> off_points;
  for (std::size_t a = 0; a < j_count; ++a)
    for (std::size_t b = 0; b < j_count; ++b)
      if (off_cnt(a, b) > 0)
        off_points.push_back({double(model.grid[a]), double(model.grid[b]),
                              off_sum(a, b) / off_cnt(a, b), off_cnt(a, b)});
  std::vector<ScatterPoint1D> diag_points;
  for (std::size_t a = 0; a < j_count; ++a)
    if (diag_cnt(a) > 0)
      diag_points.push_back({double(model.grid[a]), diag_sum(a) / diag_cnt(a), diag_cnt(a)});

  const Eigen::MatrixXd g =
      estimate_covariance_surface(off_points, model.grid, options, &model.bw_cov);
  model.sigma2 = estimate_error_variance(diag_points, g, model.grid, options, &model.bw_diag);

  auto pairs = eigen_decompose(g, model.quad_weights);
  auto [k, fve] = select_k_fve(pairs.lambda, options.fve_threshold, model.n_sites - 2,
                               options.k_override);
  model.lambda = std::move(pairs.lambda);
  model.phi = std::move(pairs.phi);
  model.fve = std::move(fve);
  model.k = k;
  return model;
}

std::vector<double> pace_scores(const WeeklySeries& series, const FpcaModel& model) {
  if (series.values.empty()) throw EmptySeries(series.site_id);
  const int k = model.k;
  if (k < 1 || k > std::ssize(model.lambda)) throw InvalidParams("model has no selected components");
  const auto n_i = static_cast<Eigen::Index>(series.values.size());
  Eigen::MatrixXd p(n_i, k);
  Eigen::VectorXd y(n_i);
  Eigen::Index row = 0;
  for (const auto& [week, value] : series.values) {
    const auto j = model.grid_index(week);
    for (int c = 0; c < k; ++c) p(row, c) = model.phi[c][j];
    y(row) = value - model.mu[j];
    ++row;
  }
  Eigen::VectorXd sqrt_lambda(k);
  for (int c = 0; c < k; ++c) sqrt_lambda(c) = std::sqrt(model.lambda[c]);

  // beta = Lambda Phi^T (Phi Lambda Phi^T + sigma2 I)^{-1} y, computed via
  // the symmetric K x K system S = L^{1/2} Phi^T Phi L^{1/2} + sigma2 I.
  Eigen::MatrixXd s = sqrt_lambda.asDiagonal() * (p.transpose() * p) * sqrt_lambda.asDiagonal();
  s.diagonal().array() += model.sigma2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw Error("score system decomposition failed");
  Eigen::VectorXd eig = es.eigenvalues();
  if (!(eig(0) > 1e-12 * std::max(eig(k - 1), 0.0))) {
    // Numerically singular: ridge by 1e-8 trace(Sigma_i) / n_i. Adding a
    // ridge shifts the eigenvalues and leaves the eigenvectors alone.
    double trace_sigma = double(n_i) * model.sigma2;
    for (int c = 0; c < k; ++c) trace_sigma += model.lambda[c] * p.col(c).squaredNorm();
    eig.array() += 1e-8 * trace_sigma / double(n_i);
  }
  const Eigen::VectorXd rhs = sqrt_lambda.asDiagonal() * (p.transpose() * y);
  const Eigen::VectorXd x =
      es.eigenvectors() * (es.eigenvectors().transpose() * rhs).cwiseQuotient(eig);
  const Eigen::VectorXd beta = sqrt_lambda.asDiagonal() * x;
  return std::vector<double>(beta.data(), beta.data() + k);
}

std::vector<double> integral_scores(const WeeklySeries& series, const FpcaModel& model) {
  for (int week : model.grid)
    if (!series.values.contains(week)) throw NotDense(series.site_id);
  const int k = model.k;
  std::vector<double> beta(k, 0.0);
  for (std::size_t j = 0; j < model.grid.size(); ++j) {
    const double centered = series.values.at(model.grid[j]) - model.mu[j];
    for (int c = 0; c < k; ++c) beta[c] += model.quad_weights[j] * centered * model.phi[c][j];
  }
  return beta;
}

std::vector<double> reconstruct(const FpcaModel& model, std::span<const double> beta,
                                std::span<const int> weeks) {
  if (std::ssize(beta) > std::ssize(model.phi))
    throw DimensionMismatch("more scores than eigenfunctions");
  std::vector<double> out;
  out.reserve(weeks.size());
  for (int week : weeks) {
    const auto j = model.grid_index(week);
    double v = model.mu[j];
    for (std::size_t c = 0; c < beta.size(); ++c) v += beta[c] * model.phi[c][j];
    out.push_back(v);
  }
  return out;
}

std::vector<ScoreVector> score_all(std::span<const WeeklySeries> series, const FpcaModel& model) {
  std::vector<ScoreVector> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    ScoreVector sv;
    sv.site_id = s.site_id;
    sv.beta = pace_scores(s, model);
    out.push_back(std::move(sv));
  }
  const std::size_t n = out.size();
  std::vector<double> column(n);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = out[i].site_id;
  for (int c = 0; c < model.k; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = out[i].beta[c];
    const auto ranks = midranks(column);
    const auto bins = decile_bins(column, ids);
    for (std::size_t i = 0; i < n; ++i) {
      const double pct = n > 1 ? 100.0 * (ranks[i] - 1.0) / double(n - 1) : 50.0;
      out[i].percentile.push_back(pct);
      out[i].decile_bin.push_back(bins[i]);
    }
  }
  return out;
}

std::string model_to_json(const FpcaModel& model) {
  nlohmann::json j;
  j["grid"] = model.grid;
  j["mu"] = model.mu;
  j["lambda"] = model.lambda;
  j["phi"] = model.phi;
  j["sigma2"] = model.sigma2;
  j["quad_weights"] = model.quad_weights;
  j["fve"] = model.fve;
  j["k"] = model.k;
  j["n_sites"] = model.n_sites;
  j["bandwidths"] = {{"mean", model.bw_mean}, {"covariance", model.bw_cov},
                     {"diagonal", model.bw_diag}};
  return j.dump(2);
}

FpcaModel model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FpcaModel model;
  model.grid = j.at("grid").get<std::vector<int>>();
  model.mu = j.at("mu").get<std::vector<double>>();
  model.lambda = j.at("lambda").get<std::vector<double>>();
  model.phi = j.at("phi").get<std::vector<std::vector<double>>>();
  model.sigma2 = j.at("sigma2").get<double>();
  model.quad_weights = j.at("quad_weights").get<std::vector<double>>();
  model.fve = j.at("fve").get<std::vector<double>>();
  model.k = j.at("k").get<int>();
  model.n_sites = j.at("n_sites").get<int>();
  if (j.contains("bandwidths")) {
    model.bw_mean = j["bandwidths"].value("mean", 0.0);
    model.bw_cov = j["bandwidths"].value("covariance", 0.0);
    model.bw_diag = j["bandwidths"].value("diagonal", 0.0);
  }
  return model;
}

void write_scores(std::ostream& out, std::span<const ScoreVector> scores) {
  out << "site_id,k,beta,percentile,decile_bin\n";
  for (const auto& sv : scores)
    for (std::size_t c = 0; c < sv.beta.size(); ++c)
      out << sv.site_id << ',' << (c + 1) << ',' << fmt_double(sv.beta[c]) << ','
          << fmt_double(sv.percentile[c]) << ',' << sv.decile_bin[c] << '\n';
}

std::vector<ScoreVector> read_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("empty scores input");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "site_id,k,beta,percentile,decile_bin")
    throw MissingColumn("unexpected scores header '" + line + "'");
  std::map<std::string, ScoreVector> acc;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    f.push_back(cur);
    if (f.size() != 5) throw MalformedRow(row, "expected 5 fields");
    int k = 0, bin = 0;
    double beta = 0, pct = 0;
    auto ok = [](auto res) { return res.ec == std::errc(); };
    if (!ok(std::from_chars(f[1].data(), f[1].data() + f[1].size(), k)) ||
        !ok(std::from_chars(f[2].data(), f[2].data() + f[2].size(), beta)) ||
        !ok(std::from_chars(f[3].data(), f[3].data() + f[3].size(), pct)) ||
        !ok(std::from_chars(f[4].data(), f[4].data() + f[4].size(), bin)))
      throw MalformedRow(row, "unparseable numeric field");
    auto& sv = acc[f[0]];
    sv.site_id = f[0];
    if (std::size_t(k) != sv.beta.size() + 1) throw MalformedRow(row, "k out of order");
    sv.beta.push_back(beta);
    sv.percentile.push_back(pct);
    sv.decile_bin.push_back(bin);
  }
  std::vector<ScoreVector> out;
  out.reserve(acc.size());
  for (auto& [id, sv] : acc) out.push_back(std::move(sv));
  return out;
}

}  // namespace coastfpca
