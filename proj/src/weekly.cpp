#include "coastfpca/weekly.hpp"

#include "coastfpca/util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace coastfpca {

const char* to_string(SeriesScale s) {
  return s == SeriesScale::log10_count ? "log10_count" : "raw_covariate";
}

SeriesScale series_scale_from_string(const std::string& s) {
  if (s == "log10_count") return SeriesScale::log10_count;
  if (s == "raw_covariate") return SeriesScale::raw_covariate;
  throw Error("unknown series scale: " + s);
}

const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::retained: return "retained";
    case Disposition::no_post_cutoff_data: return "no_post_cutoff_data";
    case Disposition::below_detection: return "below_detection";
    case Disposition::gap_too_long: return "gap_too_long";
  }
  return "?";
}

std::size_t ExclusionReport::count(Disposition d) const {
  std::size_t n = 0;
  for (const auto& [site, disp] : by_site)
    if (disp == d) ++n;
  return n;
}

WeekWindow province_window(Province p) {
  switch (p) {
    case Province::BC: return {1, 52};
    case Province::NL: return {20, 38};
    default: return {19, 45};  // QC, NB, PE, NS
  }
}

ExclusionResult apply_exclusions(const std::map<std::string, std::vector<SampleRecord>>& by_site,
                                 int cutoff_year, double detection_limit) {
  ExclusionResult out;
  for (const auto& [site, samples] : by_site) {
    std::vector<SampleRecord> post;
    for (const auto& s : samples)
      if (int(s.date.year()) >= cutoff_year) post.push_back(s);
    if (post.empty()) {
      out.report.set(site, Disposition::no_post_cutoff_data);
      continue;
    }
    const bool any_detected = std::any_of(post.begin(), post.end(), [&](const SampleRecord& s) {
      return s.fc_count >= detection_limit;
    });
    if (!any_detected) {
      out.report.set(site, Disposition::below_detection);
      continue;
    }
    out.report.set(site, Disposition::retained);
    out.retained.emplace(site, std::move(post));
  }
  return out;
}

WeeklySeries pool_to_weekly(const std::string& site_id, std::span<const SampleRecord> samples) {
  std::map<int, std::pair<double, std::size_t>> acc;  // week -> (sum, count)
  for (const auto& s : samples) {
    auto& slot = acc[week_of_year(s.date)];
    slot.first += s.fc_count;
    slot.second += 1;
  }
  WeeklySeries out;
  out.site_id = site_id;
  out.window = {1, 52};
  out.scale = SeriesScale::raw_covariate;  // raw means until log_transform
  for (const auto& [week, sv] : acc) out.values[week] = sv.first / double(sv.second);
  return out;
}

WeeklySeries pool_values_weekly(
    const std::string& id,
    std::span<const std::pair<std::chrono::year_month_day, double>> dated_values,
    SeriesScale scale) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& [date, value] : dated_values) {
    auto& slot = acc[week_of_year(date)];
    slot.first += value;
    slot.second += 1;
  }
  WeeklySeries out;
  out.site_id = id;
  out.window = {1, 52};
  out.scale = scale;
  for (const auto& [week, sv] : acc) out.values[week] = sv.first / double(sv.second);
  return out;
}

WeeklySeries log_transform(WeeklySeries series) {
  for (auto& [week, value] : series.values) {
    if (!(value > 0.0)) throw NonPositiveValue(week, value);
    value = std::log10(value);
  }
  series.scale = SeriesScale::log10_count;
  return series;
}

WeeklySeries clip_to_window(WeeklySeries series, WeekWindow window) {
  series.window = window;
  std::erase_if(series.values, [&](const auto& kv) {
    return kv.first < window.first || kv.first > window.last;
  });
  return series;
}

WeeklySeries window_subset(WeeklySeries series, Province province) {
  return clip_to_window(std::move(series), province_window(province));
}

bool gap_filter_keep(const WeeklySeries& series, int max_gap) {
  int run = 0;
  for (int week = series.window.first; week <= series.window.last; ++week) {
    if (series.values.contains(week)) {
      run = 0;
    } else if (++run >= max_gap) {
      return false;
    }
  }
  return true;
}

std::vector<std::pair<std::chrono::year_month_day, double>> cumulative_precip(
    std::span<const SampleRecord> site_samples,
    const std::map<std::chrono::sys_days, double>& daily_precip, int horizon_days) {
  std::vector<std::pair<std::chrono::year_month_day, double>> out;
  out.reserve(site_samples.size());
  for (const auto& s : site_samples) {
    const auto day = std::chrono::sys_days{s.date};
    double sum = 0.0;
    for (int back = 1; back <= horizon_days; ++back) {
      auto it = daily_precip.find(day - std::chrono::days{back});
      if (it != daily_precip.end()) sum += it->second;
    }
    out.emplace_back(s.date, sum);
  }
  return out;
}

std::vector<std::pair<std::chrono::year_month_day, double>> cumulative_precip_for_site(
    const LongitudinalStore& store, const std::string& site_id,
    std::span<const SampleRecord> site_samples, int horizon_days) {
  const std::string* location = store.location_for(site_id, CovariateKind::precipitation);
  if (location == nullptr) throw UnmappedSite(site_id);
  const auto& daily = store.daily(CovariateKind::precipitation);
  auto it = daily.find(*location);
  static const std::map<std::chrono::sys_days, double> kEmpty;
  return cumulative_precip(site_samples, it == daily.end() ? kEmpty : it->second, horizon_days);
}

WeeklySeries weekly_flow(const std::string& location_id,
                         std::span<const CovariateRecord> records) {
  std::vector<std::pair<std::chrono::year_month_day, double>> dated;
  dated.reserve(records.size());
  for (const auto& r : records) dated.emplace_back(r.date, r.value);
  return pool_values_weekly(location_id, dated, SeriesScale::raw_covariate);
}

void write_weekly_series(std::ostream& out, std::span<const WeeklySeries> series) {
  out << "site_id,week,value,scale\n";
  for (const auto& s : series)
    for (const auto& [week, value] : s.values)
      out << s.site_id << ',' << week << ',' << fmt_double(value) << ',' << to_string(s.scale)
          << '\n';
}

std::vector<WeeklySeries> read_weekly_series(std::istream& in, WeekWindow window) {
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("empty weekly series input");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "site_id,week,value,scale")
    throw MissingColumn("unexpected weekly series header '" + line + "'");
  std::map<std::pair<std::string, int>, WeeklySeries> acc;  // (scale, id) groups
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != 4) throw MalformedRow(row, "expected 4 fields");
    int week = 0;
    double value = 0.0;
    auto r1 = std::from_chars(f[1].data(), f[1].data() + f[1].size(), week);
    auto r2 = std::from_chars(f[2].data(), f[2].data() + f[2].size(), value);
    if (r1.ec != std::errc() || r2.ec != std::errc())
      throw MalformedRow(row, "unparseable week or value");
    const SeriesScale scale = series_scale_from_string(f[3]);
    auto& s = acc[{f[0], static_cast<int>(scale)}];
    s.site_id = f[0];
    s.window = window;
    s.scale = scale;
    s.values[week] = value;
  }
  std::vector<WeeklySeries> out;
  out.reserve(acc.size());
  for (auto& [key, s] : acc) out.push_back(std::move(s));
  return out;
}

void write_exclusion_report(std::ostream& out, const ExclusionReport& report) {
  out << "site_id,disposition\n";
  for (const auto& [site, disp] : report.by_site) out << site << ',' << to_string(disp) << '\n';
}

}  // namespace coastfpca
