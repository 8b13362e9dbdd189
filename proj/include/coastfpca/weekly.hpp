#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coastfpca/store.hpp"

namespace coastfpca {

enum class SeriesScale { log10_count, raw_covariate };

const char* to_string(SeriesScale s);
SeriesScale series_scale_from_string(const std::string& s);

struct WeekWindow {
  int first = 1;
  int last = 52;

  friend bool operator==(const WeekWindow&, const WeekWindow&) = default;
};

/// Province-specific analysis window: BC covers the whole year, the four
/// combined Atlantic provinces weeks 19-45, NL weeks 20-38.
WeekWindow province_window(Province p);

/// Per-site sparse vector on the pooled one-year weekly grid.
struct WeeklySeries {
  std::string site_id;
  WeekWindow window;
  std::map<int, double> values;  // week -> value, weeks within window
  SeriesScale scale = SeriesScale::log10_count;

  friend bool operator==(const WeeklySeries&, const WeeklySeries&) = default;
};

enum class Disposition { retained, no_post_cutoff_data, below_detection, gap_too_long };

const char* to_string(Disposition d);

/// Per-site disposition; the dispositions partition the input site set.
struct ExclusionReport {
  std::map<std::string, Disposition> by_site;

  std::size_t count(Disposition d) const;
  void set(const std::string& site, Disposition d) { by_site[site] = d; }
};

struct ExclusionResult {
  std::map<std::string, std::vector<SampleRecord>> retained;
  ExclusionReport report;
};

/// Drop sites with no sample in or after `cutoff_year`, then sites whose
/// every remaining count is strictly below `detection_limit`. Retained
/// sites keep only their post-cutoff samples.
ExclusionResult apply_exclusions(const std::map<std::string, std::vector<SampleRecord>>& by_site,
                                 int cutoff_year = 1999, double detection_limit = 2.0);

/// Pool samples from all years onto the 52-week one-year grid: each sample
/// lands in week min(ceil(doy/7), 52) and weekly values are arithmetic
/// means of everything in the bin. Output is pre-log, pre-window.
WeeklySeries pool_to_weekly(const std::string& site_id, std::span<const SampleRecord> samples);

/// Same pooling for arbitrary dated values (covariate streams).
WeeklySeries pool_values_weekly(
    const std::string& id,
    std::span<const std::pair<std::chrono::year_month_day, double>> dated_values,
    SeriesScale scale);

/// log10 every present value; throws NonPositiveValue on v <= 0.
WeeklySeries log_transform(WeeklySeries series);

/// Restrict to an explicit window; keys outside are dropped. Idempotent.
WeeklySeries clip_to_window(WeeklySeries series, WeekWindow window);

/// Restrict to the province window; keys outside are dropped. Idempotent.
WeeklySeries window_subset(WeeklySeries series, Province province);

/// Keep iff no run of >= max_gap consecutive missing weeks inside the window.
bool gap_filter_keep(const WeeklySeries& series, int max_gap = 4);

/// 5-day-cumulative precipitation value for each sample of a site:
/// sum of the mapped location's daily precipitation over days d-1..d-horizon
/// (absent days contribute 0). Pool the result with pool_values_weekly.
std::vector<std::pair<std::chrono::year_month_day, double>> cumulative_precip(
    std::span<const SampleRecord> site_samples,
    const std::map<std::chrono::sys_days, double>& daily_precip, int horizon_days = 5);

class LongitudinalStore;  // store.hpp

/// Same, resolving the site's precipitation location through the store's
/// covariate map; throws UnmappedSite when the site has no mapping.
std::vector<std::pair<std::chrono::year_month_day, double>> cumulative_precip_for_site(
    const LongitudinalStore& store, const std::string& site_id,
    std::span<const SampleRecord> site_samples, int horizon_days = 5);

/// Weekly mean flow per location, pooled across years; no log.
WeeklySeries weekly_flow(const std::string& location_id,
                         std::span<const CovariateRecord> records);

// weekly_series.csv / exclusion_report.csv round-trip.
void write_weekly_series(std::ostream& out, std::span<const WeeklySeries> series);
std::vector<WeeklySeries> read_weekly_series(std::istream& in, WeekWindow window);
void write_exclusion_report(std::ostream& out, const ExclusionReport& report);

}  // namespace coastfpca
