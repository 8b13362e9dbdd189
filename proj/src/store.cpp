#include "coastfpca/store.hpp"

#include "coastfpca/util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace coastfpca {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && std::isfinite(out);
}

void expect_header(std::istream& in, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("empty input, expected header '" + expected + "'");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != expected)
    throw MissingColumn("header '" + line + "' does not match '" + expected + "'");
}

// Reports a bad row either by throwing or by appending to `rejects`.
void reject(std::vector<RowError>* rejects, std::size_t row, const std::string& reason) {
  if (rejects == nullptr) throw MalformedRow(row, reason);
  rejects->push_back({row, reason});
}

}  // namespace

const char* to_string(Province p) {
  switch (p) {
    case Province::BC: return "BC";
    case Province::QC: return "QC";
    case Province::NB: return "NB";
    case Province::PE: return "PE";
    case Province::NS: return "NS";
    case Province::NL: return "NL";
  }
  return "?";
}

Province province_from_string(const std::string& s) {
  if (s == "BC") return Province::BC;
  if (s == "QC") return Province::QC;
  if (s == "NB") return Province::NB;
  if (s == "PE") return Province::PE;
  if (s == "NS") return Province::NS;
  if (s == "NL") return Province::NL;
  throw Error("unknown province: " + s);
}

const char* to_string(CovariateKind k) {
  return k == CovariateKind::precipitation ? "precipitation" : "river_flow";
}

CovariateKind covariate_kind_from_string(const std::string& s) {
  if (s == "precipitation") return CovariateKind::precipitation;
  if (s == "river_flow") return CovariateKind::river_flow;
  throw Error("unknown covariate kind: " + s);
}

std::chrono::year_month_day parse_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw Error("date '" + iso + "' is not YYYY-MM-DD");
  int y = 0, m = 0, d = 0;
  auto num = [&](int from, int to, int& out) {
    auto [p, ec] = std::from_chars(iso.data() + from, iso.data() + to, out);
    if (ec != std::errc() || p != iso.data() + to) throw Error("date '" + iso + "' is not numeric");
  };
  num(0, 4, y);
  num(5, 7, m);
  num(8, 10, d);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw Error("date '" + iso + "' is not a valid calendar date");
  return ymd;
}

std::string format_date(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(d.year()), unsigned(d.month()),
                unsigned(d.day()));
  return buf;
}

int day_of_year(const std::chrono::year_month_day& d) {
  const auto jan1 = std::chrono::sys_days{d.year() / std::chrono::January / 1};
  return int((std::chrono::sys_days{d} - jan1).count()) + 1;
}

int week_of_year(const std::chrono::year_month_day& d) {
  // 52 seven-day bins; days 365/366 fold into week 52.
  const int doy = day_of_year(d);
  return std::min((doy + 6) / 7, 52);
}

void SiteRegistry::add(const std::string& site_id, SiteInfo info) {
  if (info.latitude < -90.0 || info.latitude > 90.0)
    throw CoordinateOutOfRange(site_id + " latitude " + fmt_double(info.latitude));
  if (info.longitude < -180.0 || info.longitude > 180.0)
    throw CoordinateOutOfRange(site_id + " longitude " + fmt_double(info.longitude));
  auto [it, inserted] = entries_.emplace(site_id, info);
  if (!inserted) throw DuplicateSiteId(site_id);
}

const SiteInfo* SiteRegistry::find(const std::string& site_id) const {
  auto it = entries_.find(site_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<SampleRecord> parse_samples(std::istream& in, std::vector<RowError>* rejects) {
  expect_header(in, "site_id,date,fc_count,salinity,temperature");
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 5) {
      reject(rejects, row, "expected 5 fields, got " + std::to_string(f.size()));
      continue;
    }
    SampleRecord r;
    r.site_id = f[0];
    if (r.site_id.empty()) {
      reject(rejects, row, "empty site_id");
      continue;
    }
    try {
      r.date = parse_date(f[1]);
    } catch (const Error& e) {
      reject(rejects, row, e.what());
      continue;
    }
    if (!parse_double(f[2], r.fc_count)) {
      reject(rejects, row, "unparseable count '" + f[2] + "'");
      continue;
    }
    if (r.fc_count < 0) {
      reject(rejects, row, "negative count");
      continue;
    }
    bool ok = true;
    for (int c = 3; c <= 4; ++c) {
      if (f[c].empty()) continue;
      double v;
      if (!parse_double(f[c], v)) {
        reject(rejects, row, "unparseable covariate field '" + f[c] + "'");
        ok = false;
        break;
      }
      (c == 3 ? r.salinity : r.temperature) = v;
    }
    if (ok) out.push_back(std::move(r));
  }
  return out;
}

SiteRegistry parse_sites(std::istream& in) {
  expect_header(in, "site_id,latitude,longitude,province");
  SiteRegistry reg;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 4) throw MalformedRow(row, "expected 4 fields");
    SiteInfo info;
    if (!parse_double(f[1], info.latitude) || !parse_double(f[2], info.longitude))
      throw MalformedRow(row, "unparseable coordinate");
    try {
      info.province = province_from_string(f[3]);
    } catch (const Error& e) {
      throw MalformedRow(row, e.what());
    }
    reg.add(f[0], info);  // DuplicateSiteId / CoordinateOutOfRange propagate
  }
  return reg;
}

std::vector<CovariateRecord> parse_covariates(std::istream& in, CovariateKind kind,
                                              std::vector<RowError>* rejects) {
  expect_header(in, "location_id,date,value");
  std::vector<CovariateRecord> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 3) {
      reject(rejects, row, "expected 3 fields, got " + std::to_string(f.size()));
      continue;
    }
    CovariateRecord r;
    r.location_id = f[0];
    r.kind = kind;
    if (r.location_id.empty()) {
      reject(rejects, row, "empty location_id");
      continue;
    }
    try {
      r.date = parse_date(f[1]);
    } catch (const Error& e) {
      reject(rejects, row, e.what());
      continue;
    }
    if (!parse_double(f[2], r.value)) {
      reject(rejects, row, "unparseable value '" + f[2] + "'");
      continue;
    }
    if (r.value < 0) {
      reject(rejects, row, "negative value");
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SiteCovariateLink> parse_covariate_map(std::istream& in) {
  expect_header(in, "site_id,location_id,kind");
  std::vector<SiteCovariateLink> out;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 3) throw MalformedRow(row, "expected 3 fields");
    SiteCovariateLink link;
    link.site_id = f[0];
    link.location_id = f[1];
    try {
      link.kind = covariate_kind_from_string(f[2]);
    } catch (const Error& e) {
      throw MalformedRow(row, e.what());
    }
    out.push_back(std::move(link));
  }
  return out;
}

void write_samples(std::ostream& out, std::span<const SampleRecord> records) {
  out << "site_id,date,fc_count,salinity,temperature\n";
  for (const auto& r : records) {
    out << r.site_id << ',' << format_date(r.date) << ',' << fmt_double(r.fc_count) << ',';
    if (r.salinity) out << fmt_double(*r.salinity);
    out << ',';
    if (r.temperature) out << fmt_double(*r.temperature);
    out << '\n';
  }
}

void write_sites(std::ostream& out, const SiteRegistry& registry) {
  out << "site_id,latitude,longitude,province\n";
  for (const auto& [id, info] : registry.entries()) {
    out << id << ',' << fmt_double(info.latitude) << ',' << fmt_double(info.longitude) << ','
        << to_string(info.province) << '\n';
  }
}

void write_covariates(std::ostream& out, std::span<const CovariateRecord> records) {
  out << "location_id,date,value\n";
  for (const auto& r : records)
    out << r.location_id << ',' << format_date(r.date) << ',' << fmt_double(r.value) << '\n';
}

LongitudinalStore::LongitudinalStore(std::vector<SampleRecord> samples, SiteRegistry registry,
                                     std::vector<CovariateRecord> covariates,
                                     std::vector<SiteCovariateLink> links)
    : registry_(std::move(registry)), links_(std::move(links)), sample_count_(samples.size()) {
  for (auto& s : samples) samples_by_site_[s.site_id].push_back(std::move(s));

  // Duplicate (location, date) records collapse to their mean.
  std::map<std::pair<int, std::string>, std::map<std::chrono::sys_days, std::pair<double, int>>>
      acc;
  for (const auto& c : covariates) {
    auto& slot = acc[{static_cast<int>(c.kind), c.location_id}][std::chrono::sys_days{c.date}];
    slot.first += c.value;
    slot.second += 1;
  }
  for (const auto& [key, days] : acc) {
    auto& dst = daily_[key.first][key.second];
    for (const auto& [day, sv] : days) dst[day] = sv.first / sv.second;
  }

  for (const auto& l : links_) {
    auto key = std::make_pair(static_cast<int>(l.kind), l.site_id);
    auto [it, inserted] = site_to_location_.emplace(key, l.location_id);
    if (!inserted && it->second != l.location_id)
      throw Error("conflicting covariate mapping for site " + l.site_id);
  }
}

const std::string* LongitudinalStore::location_for(const std::string& site_id,
                                                   CovariateKind kind) const {
  auto it = site_to_location_.find({static_cast<int>(kind), site_id});
  return it == site_to_location_.end() ? nullptr : &it->second;
}

}  // namespace coastfpca
