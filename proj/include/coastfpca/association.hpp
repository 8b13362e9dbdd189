#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "coastfpca/weekly.hpp"

namespace coastfpca {

/// Average ranks (midranks for ties), 1-based.
std::vector<double> midranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Spearman rank correlation with midranks; pairs where either value is
/// NaN are dropped first. p is the two-sided t approximation
/// t = rho sqrt((n-2)/(1-rho^2)) on n-2 degrees of freedom; |rho| = 1
/// gives p = 0.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct LinRegResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Ordinary least squares y ~ x with the two-sided slope t-test. A constant
/// response gives r_squared = 0.
LinRegResult linreg_r2(std::span<const double> x, std::span<const double> y);

/// Equal-size bins 1..n_bins in increasing score order; ties broken by
/// site_id so all-tied inputs still bin deterministically. When n is not a
/// multiple of n_bins the larger bins sit at the top. Returns one label per
/// input position.
std::vector<int> decile_bins(std::span<const double> scores, std::span<const std::string> site_ids,
                             int n_bins = 10);

struct ExtremaGroups {
  std::vector<std::string> group_high;  // top-q FPC1 intersected with top-q FPC2
  std::vector<std::string> group_low;   // top-q FPC1 intersected with bottom-q FPC2
  double q = 0.10;
};

/// Global quantile sets of floor(q n) sites each (ties by site_id),
/// intersected. Both groups are subsets of the top-q FPC1 set.
ExtremaGroups extrema_groups(const std::map<std::string, double>& fpc1,
                             const std::map<std::string, double>& fpc2, double q = 0.10);

/// Fig-6-style p-value bin: 1..10 on a log10 scale over [alpha, 1e-10],
/// everything below 1e-10 in bin 10. Returns 0 for p > alpha.
int p_value_bin(double p, double alpha = 0.05);

enum class Statistic { spearman_rho, r_squared };
const char* to_string(Statistic s);

struct AssociationResult {
  std::string subject;  // site_id or "global"
  Statistic statistic = Statistic::spearman_rho;
  double value = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool significant_positive = false;
  int p_bin = 0;  // 0 when not significant_positive
};

struct MaxWeekEntry {
  std::string site_id;
  double max_value = 0.0;
  int week = 0;
  bool top_decile = false;  // otherwise bottom decile
};

struct MaxVsFpc1Result {
  LinRegResult reg;
  std::vector<MaxWeekEntry> extremes;  // top/bottom decile sites only
};

/// Regression of each site's maximum weekly value on the percentile of its
/// FPC1 score, plus the (max, week-of-max) table restricted to the top and
/// bottom deciles.
MaxVsFpc1Result max_vs_fpc1(std::span<const WeeklySeries> series,
                            const std::map<std::string, double>& fpc1_percentile);

using CurveMap = std::map<std::string, std::map<int, double>>;  // id -> week -> value

/// Per-site Spearman between a site's curve and its covariate curve on
/// their common weeks (>= 3, InsufficientOverlap otherwise). Sites missing
/// from either map are skipped. p_bin is filled for significant positives.
std::vector<AssociationResult> site_covariate_correlation(const CurveMap& site_curves,
                                                          const CurveMap& covariate_curves,
                                                          double alpha = 0.05);

void write_associations(std::ostream& out, std::span<const AssociationResult> results);
void write_extrema_groups(std::ostream& out, const ExtremaGroups& groups);

}  // namespace coastfpca
