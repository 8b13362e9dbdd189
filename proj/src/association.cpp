#include "coastfpca/association.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "coastfpca/util.hpp"

namespace coastfpca {

namespace {

double two_sided_t_p(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// Sites ordered by score (descending or ascending), site_id as tiebreak;
// the first floor(q n) form the quantile set.
std::set<std::string> quantile_set(const std::map<std::string, double>& scores, double q,
                                   bool top) {
  std::vector<std::pair<double, std::string>> order;
  order.reserve(scores.size());
  for (const auto& [id, v] : scores) order.emplace_back(v, id);
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return top ? a.first > b.first : a.first < b.first;
    return a.second < b.second;
  });
  const auto m = static_cast<std::size_t>(std::floor(q * double(scores.size())));
  std::set<std::string> out;
  for (std::size_t i = 0; i < m && i < order.size(); ++i) out.insert(order[i].second);
  return out;
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("spearman inputs differ in length");
  std::vector<double> xc, yc;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    xc.push_back(x[i]);
    yc.push_back(y[i]);
  }
  const std::size_t n = xc.size();
  if (n < 3) throw InsufficientData(n);
  if (std::all_of(xc.begin(), xc.end(), [&](double v) { return v == xc[0]; }))
    throw ZeroVariance("x");
  if (std::all_of(yc.begin(), yc.end(), [&](double v) { return v == yc[0]; }))
    throw ZeroVariance("y");
  const auto rx = midranks(xc);
  const auto ry = midranks(yc);
  double rho = pearson(rx, ry);
  rho = std::clamp(rho, -1.0, 1.0);
  SpearmanResult out;
  out.rho = rho;
  out.n = n;
  if (std::abs(rho) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = rho * std::sqrt(double(n - 2) / (1.0 - rho * rho));
    out.p = two_sided_t_p(t, double(n - 2));
  }
  return out;
}

LinRegResult linreg_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("regression inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientData(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, sst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y[i] - my);
    sst += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConstantPredictor();
  LinRegResult out;
  out.n = n;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    sse += r * r;
  }
  out.r_squared = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) : 0.0;
  if (sse <= 0.0) {
    out.p = sst > 0.0 ? 0.0 : 1.0;
  } else {
    const double se = std::sqrt(sse / double(n - 2) / sxx);
    out.p = two_sided_t_p(out.slope / se, double(n - 2));
  }
  return out;
}

std::vector<int> decile_bins(std::span<const double> scores, std::span<const std::string> site_ids,
                             int n_bins) {
  const std::size_t n = scores.size();
  if (site_ids.size() != n) throw DimensionMismatch("scores and site ids differ in length");
  if (n < std::size_t(n_bins)) throw TooFewSites(n, n_bins);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return site_ids[a] < site_ids[b];
  });
  // Sizes differ by at most one; the +1 bins take the upper range.
  const std::size_t base = n / std::size_t(n_bins);
  const std::size_t rem = n % std::size_t(n_bins);
  std::vector<int> labels(n);
  std::size_t pos = 0;
  for (int b = 1; b <= n_bins; ++b) {
    const std::size_t size = base + (std::size_t(b) > std::size_t(n_bins) - rem ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) labels[order[pos++]] = b;
  }
  return labels;
}

ExtremaGroups extrema_groups(const std::map<std::string, double>& fpc1,
                             const std::map<std::string, double>& fpc2, double q) {
  if (fpc1.size() != fpc2.size()) throw DimensionMismatch("score maps differ in size");
  const auto top1 = quantile_set(fpc1, q, /*top=*/true);
  const auto top2 = quantile_set(fpc2, q, /*top=*/true);
  const auto bot2 = quantile_set(fpc2, q, /*top=*/false);
  ExtremaGroups out;
  out.q = q;
  for (const auto& id : top1) {
    if (top2.contains(id)) out.group_high.push_back(id);
    if (bot2.contains(id)) out.group_low.push_back(id);
  }
  return out;
}

int p_value_bin(double p, double alpha) {
  if (p > alpha) return 0;
  if (p < 1e-10) return 10;
  const double span = std::log10(alpha) + 10.0;  // log10(alpha) - log10(1e-10)
  const double u = (std::log10(alpha) - std::log10(p)) / span;
  return std::clamp(1 + int(std::floor(u * 10.0)), 1, 10);
}

const char* to_string(Statistic s) {
  return s == Statistic::spearman_rho ? "spearman_rho" : "r_squared";
}

MaxVsFpc1Result max_vs_fpc1(std::span<const WeeklySeries> series,
                            const std::map<std::string, double>& fpc1_percentile) {
  std::map<std::string, const WeeklySeries*> by_id;
  for (const auto& s : series) by_id[s.site_id] = &s;
  std::vector<double> x, y;
  std::map<std::string, std::pair<double, int>> max_week;
  for (const auto& [id, pct] : fpc1_percentile) {
    auto it = by_id.find(id);
    if (it == by_id.end() || it->second->values.empty()) throw EmptySeries(id);
    double best = -std::numeric_limits<double>::infinity();
    int best_week = 0;
    for (const auto& [week, value] : it->second->values) {
      if (value > best) {
        best = value;
        best_week = week;
      }
    }
    x.push_back(pct);
    y.push_back(best);
    max_week[id] = {best, best_week};
  }
  MaxVsFpc1Result out;
  out.reg = linreg_r2(x, y);
  const auto top = quantile_set(fpc1_percentile, 0.10, true);
  const auto bottom = quantile_set(fpc1_percentile, 0.10, false);
  for (const auto& [id, mw] : max_week) {
    if (top.contains(id))
      out.extremes.push_back({id, mw.first, mw.second, true});
    else if (bottom.contains(id))
      out.extremes.push_back({id, mw.first, mw.second, false});
  }
  return out;
}

std::vector<AssociationResult> site_covariate_correlation(const CurveMap& site_curves,
                                                          const CurveMap& covariate_curves,
                                                          double alpha) {
  std::vector<AssociationResult> out;
  for (const auto& [id, curve] : site_curves) {
    auto it = covariate_curves.find(id);
    if (it == covariate_curves.end()) continue;
    std::vector<double> a, b;
    for (const auto& [week, value] : curve) {
      auto jt = it->second.find(week);
      if (jt == it->second.end()) continue;
      a.push_back(value);
      b.push_back(jt->second);
    }
    if (a.size() < 3) throw InsufficientOverlap(id);
    const auto sp = spearman(a, b);
    AssociationResult r;
    r.subject = id;
    r.statistic = Statistic::spearman_rho;
    r.value = sp.rho;
    r.p_value = sp.p;
    r.n = sp.n;
    r.significant_positive = sp.rho > 0.0 && sp.p < alpha;
    r.p_bin = r.significant_positive ? p_value_bin(sp.p, alpha) : 0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_associations(std::ostream& out, std::span<const AssociationResult> results) {
  out << "subject,statistic,value,p_value,n,significant_positive,p_bin\n";
  for (const auto& r : results)
    out << r.subject << ',' << to_string(r.statistic) << ',' << fmt_double(r.value) << ','
        << fmt_double(r.p_value) << ',' << r.n << ',' << (r.significant_positive ? "true" : "false")
        << ',' << r.p_bin << '\n';
}

void write_extrema_groups(std::ostream& out, const ExtremaGroups& groups) {
  out << "site_id,group\n";
  for (const auto& id : groups.group_high) out << id << ",high\n";
  for (const auto& id : groups.group_low) out << id << ",low\n";
}

}  // namespace coastfpca
