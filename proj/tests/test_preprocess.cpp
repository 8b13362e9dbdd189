#include <algorithm>
#include <sstream>

#include "coastfpca/rng.hpp"
#include "coastfpca/store.hpp"
#include "coastfpca/weekly.hpp"
#include "doctest.h"

using namespace coastfpca;

namespace {

SampleRecord sample(const std::string& site, const std::string& date, double count) {
  SampleRecord r;
  r.site_id = site;
  r.date = parse_date(date);
  r.fc_count = count;
  return r;
}

WeeklySeries series_of(std::map<int, double> values, WeekWindow window = {1, 52}) {
  WeeklySeries s;
  s.site_id = "S";
  s.window = window;
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("exclusion dispositions") {
  std::map<std::string, std::vector<SampleRecord>> by_site;
  by_site["below"] = {sample("below", "2005-03-01", 1.8), sample("below", "2006-03-01", 1.9)};
  by_site["old"] = {sample("old", "1998-12-01", 50)};
  by_site["kept"] = {sample("kept", "2005-03-01", 50), sample("kept", "1997-01-01", 90)};
  const auto result = apply_exclusions(by_site);
  CHECK(result.report.by_site.at("below") == Disposition::below_detection);
  CHECK(result.report.by_site.at("old") == Disposition::no_post_cutoff_data);
  CHECK(result.report.by_site.at("kept") == Disposition::retained);
  // retained sites keep only post-cutoff samples
  REQUIRE(result.retained.at("kept").size() == 1);
  CHECK(int(result.retained.at("kept")[0].date.year()) == 2005);
  // dispositions partition the input site set
  CHECK(result.report.by_site.size() == by_site.size());
  CHECK(result.report.count(Disposition::retained) +
        result.report.count(Disposition::below_detection) +
        result.report.count(Disposition::no_post_cutoff_data) +
        result.report.count(Disposition::gap_too_long) == by_site.size());
}

TEST_CASE("detection limit is strict") {
  std::map<std::string, std::vector<SampleRecord>> by_site;
  by_site["just_below"] = {sample("just_below", "2005-03-01", 1.999)};
  by_site["at_limit"] = {sample("at_limit", "2005-03-01", 2.0)};
  const auto result = apply_exclusions(by_site);
  CHECK(result.report.by_site.at("just_below") == Disposition::below_detection);
  CHECK(result.report.by_site.at("at_limit") == Disposition::retained);
}

TEST_CASE("weekly pooling averages within bins across years") {
  // days of year 1, 3, 5 in different years all land in week 1
  std::vector<SampleRecord> samples = {sample("S", "2003-01-01", 10),
                                       sample("S", "2011-01-03", 20),
                                       sample("S", "2007-01-05", 60)};
  const auto series = pool_to_weekly("S", samples);
  REQUIRE(series.values.size() == 1);
  CHECK(series.values.at(1) == doctest::Approx(30.0));
}

TEST_CASE("day 365 folds into week 52") {
  const auto series = pool_to_weekly("S", std::vector<SampleRecord>{sample("S", "2005-12-31", 7)});
  REQUIRE(series.values.size() == 1);
  CHECK(series.values.begin()->first == 52);
}

TEST_CASE("single observed week gives a single key") {
  const auto series = pool_to_weekly("S", std::vector<SampleRecord>{sample("S", "2005-01-02", 5)});
  CHECK(series.values.size() == 1);
  CHECK(series.values.contains(1));
}

TEST_CASE("pooling is invariant to sample order and year partition") {
  Rng rng(11);
  std::vector<SampleRecord> samples;
  for (int i = 0; i < 120; ++i) {
    const int doy = 1 + int(rng.below(364));
    const int year = 2000 + int(rng.below(15));
    const auto date = std::chrono::year_month_day{
        std::chrono::sys_days{std::chrono::year{year} / 1 / 1} + std::chrono::days{doy - 1}};
    SampleRecord r;
    r.site_id = "S";
    r.date = date;
    r.fc_count = 1.0 + rng.uniform01() * 99.0;
    samples.push_back(r);
  }
  const auto base = pool_to_weekly("S", samples);

  auto shuffled = samples;
  rng.shuffle(shuffled);
  const auto reshuffled = pool_to_weekly("S", shuffled);
  REQUIRE(reshuffled.values.size() == base.values.size());
  for (const auto& [week, value] : base.values)
    CHECK(reshuffled.values.at(week) == doctest::Approx(value).epsilon(1e-12));

  // moving every sample to a different year with the same day-of-year
  auto moved = samples;
  for (auto& r : moved) {
    const int doy = day_of_year(r.date);
    const int new_year = 2016 + (doy % 3);
    r.date = std::chrono::year_month_day{
        std::chrono::sys_days{std::chrono::year{new_year} / 1 / 1} + std::chrono::days{doy - 1}};
  }
  const auto repooled = pool_to_weekly("S", moved);
  REQUIRE(repooled.values.size() == base.values.size());
  for (const auto& [week, value] : base.values)
    CHECK(repooled.values.at(week) == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("log transform") {
  auto s = series_of({{1, 100.0}, {2, 2.0}});
  const auto logged = log_transform(s);
  CHECK(logged.values.at(1) == doctest::Approx(2.0));
  CHECK(logged.values.at(2) == doctest::Approx(0.30103).epsilon(1e-5));
  CHECK(logged.scale == SeriesScale::log10_count);

  auto bad = series_of({{5, 0.0}});
  CHECK_THROWS_AS(log_transform(bad), NonPositiveValue);
  try {
    log_transform(series_of({{5, 0.0}}));
  } catch (const NonPositiveValue& e) {
    CHECK(e.week() == 5);
  }
}

TEST_CASE("log transform is strictly monotone on present values") {
  auto s = series_of({{1, 3.0}, {2, 8.0}, {3, 8.5}, {4, 100.0}});
  const auto logged = log_transform(s);
  double prev = -1e300;
  for (const auto& [week, value] : logged.values) {
    CHECK(value > prev);
    prev = value;
  }
}

TEST_CASE("province windows") {
  CHECK(province_window(Province::BC) == WeekWindow{1, 52});
  CHECK(province_window(Province::QC) == WeekWindow{19, 45});
  CHECK(province_window(Province::NB) == WeekWindow{19, 45});
  CHECK(province_window(Province::PE) == WeekWindow{19, 45});
  CHECK(province_window(Province::NS) == WeekWindow{19, 45});
  CHECK(province_window(Province::NL) == WeekWindow{20, 38});

  auto bc = window_subset(series_of({{1, 1.0}, {52, 2.0}}), Province::BC);
  CHECK(bc.window == WeekWindow{1, 52});
  CHECK(bc.values.size() == 2);

  auto nl = window_subset(series_of({{25, 1.0}, {45, 2.0}}), Province::NL);
  CHECK(nl.window == WeekWindow{20, 38});
  CHECK(nl.values.size() == 1);
  CHECK(!nl.values.contains(45));

  auto pe = window_subset(series_of({{19, 1.0}, {45, 2.0}}), Province::PE);
  CHECK(pe.window == WeekWindow{19, 45});
  CHECK(pe.values.size() == 2);

  // idempotent
  const auto once = window_subset(series_of({{10, 1.0}, {30, 2.0}}), Province::NL);
  const auto twice = window_subset(once, Province::NL);
  CHECK(once == twice);
}

TEST_CASE("gap filter") {
  auto missing_run4 = series_of({{9, 1.0}, {14, 1.0}});  // weeks 10..13 missing
  for (int w = 1; w <= 8; ++w) missing_run4.values[w] = 1.0;
  for (int w = 15; w <= 52; ++w) missing_run4.values[w] = 1.0;
  CHECK(!gap_filter_keep(missing_run4));

  auto missing_run3 = missing_run4;
  missing_run3.values[13] = 1.0;  // now only 10..12 missing
  CHECK(gap_filter_keep(missing_run3));

  // weeks outside the NL window are ignored
  WeeklySeries nl;
  nl.site_id = "S";
  nl.window = {20, 38};
  for (int w = 20; w <= 38; ++w)
    if (w % 3 != 0) nl.values[w] = 1.0;  // gaps of length 1 only
  CHECK(gap_filter_keep(nl));

  // keep implies no run >= 4 inside the window, checked by direct scan
  auto scan_violates = [](const WeeklySeries& s, int max_gap) {
    int run = 0;
    for (int w = s.window.first; w <= s.window.last; ++w) {
      run = s.values.contains(w) ? 0 : run + 1;
      if (run >= max_gap) return true;
    }
    return false;
  };
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    WeeklySeries s;
    s.window = {1, 52};
    for (int w = 1; w <= 52; ++w)
      if (rng.uniform01() < 0.7) s.values[w] = 1.0;
    CHECK(gap_filter_keep(s) == !scan_violates(s, 4));
  }
}

TEST_CASE("five-day cumulative precipitation") {
  std::map<std::chrono::sys_days, double> daily;
  const auto base = std::chrono::sys_days{std::chrono::year{2005} / 6 / 10};
  // the five days before 2005-06-10 carry 1, 2, 3, 4, 5 (most recent first)
  for (int back = 1; back <= 5; ++back)
    daily[base - std::chrono::days{back}] = double(back);
  const std::vector<SampleRecord> samples = {sample("S", "2005-06-10", 9.0)};
  auto dated = cumulative_precip(samples, daily, 5);
  REQUIRE(dated.size() == 1);
  CHECK(dated[0].second == doctest::Approx(15.0));

  // missing daily records contribute zero
  daily.erase(base - std::chrono::days{2});
  dated = cumulative_precip(samples, daily, 5);
  CHECK(dated[0].second == doctest::Approx(13.0));

  // the sampling day itself is excluded
  daily[base] = 100.0;
  dated = cumulative_precip(samples, daily, 5);
  CHECK(dated[0].second == doctest::Approx(13.0));
}

TEST_CASE("unmapped site raises UnmappedSite") {
  std::vector<SampleRecord> samples = {sample("S1", "2005-06-10", 9.0)};
  SiteRegistry reg;
  reg.add("S1", {48, -123, Province::BC});
  LongitudinalStore store(samples, reg, {}, {});
  CHECK_THROWS_AS(cumulative_precip_for_site(store, "S1", store.samples_by_site().at("S1")),
                  UnmappedSite);
}

TEST_CASE("weekly flow pools across years without log") {
  std::vector<CovariateRecord> recs;
  recs.push_back({"R1", parse_date("2005-07-25"), 100.0, CovariateKind::river_flow});
  recs.push_back({"R1", parse_date("2009-07-26"), 200.0, CovariateKind::river_flow});
  const auto flow = weekly_flow("R1", recs);
  CHECK(flow.scale == SeriesScale::raw_covariate);
  const int week = week_of_year(parse_date("2005-07-25"));
  CHECK(flow.values.at(week) == doctest::Approx(150.0));
  CHECK(flow.values.size() == 1);

  const auto single = weekly_flow("R1", std::vector<CovariateRecord>{recs[0]});
  CHECK(single.values.at(week) == doctest::Approx(100.0));
}

TEST_CASE("weekly series CSV round trip") {
  std::vector<WeeklySeries> all;
  all.push_back(series_of({{1, 1.25}, {7, -0.5}}));
  all.back().site_id = "A";
  all.back().scale = SeriesScale::log10_count;
  all.push_back(series_of({{3, 12.0}}));
  all.back().site_id = "B";
  all.back().scale = SeriesScale::raw_covariate;
  std::ostringstream out;
  write_weekly_series(out, all);
  std::istringstream in(out.str());
  const auto back = read_weekly_series(in, {1, 52});
  REQUIRE(back.size() == 2);
  CHECK(back[0] == all[0]);
  CHECK(back[1] == all[1]);
}

}  // TEST_SUITE
