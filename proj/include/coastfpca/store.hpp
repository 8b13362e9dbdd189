#pragma once

#include <chrono>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coastfpca/errors.hpp"

namespace coastfpca {

enum class Province { BC, QC, NB, PE, NS, NL };

const char* to_string(Province p);
Province province_from_string(const std::string& s);  // throws MalformedRow-free Error

/// Calendar date helpers (timezone-free, daily resolution).
std::chrono::year_month_day parse_date(const std::string& iso);  // strict YYYY-MM-DD
std::string format_date(const std::chrono::year_month_day& d);
int day_of_year(const std::chrono::year_month_day& d);  // 1-based, actual calendar
int week_of_year(const std::chrono::year_month_day& d);  // min(ceil(doy/7), 52)

/// One raw monitoring measurement.
struct SampleRecord {
  std::string site_id;
  std::chrono::year_month_day date{};
  double fc_count = 0.0;  // bacteria per 100 mL, >= 0
  std::optional<double> salinity;     // permille
  std::optional<double> temperature;  // deg C

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SiteInfo {
  double latitude = 0.0;
  double longitude = 0.0;
  Province province = Province::BC;

  friend bool operator==(const SiteInfo&, const SiteInfo&) = default;
};

/// Unique site id -> coordinates + province. Insertion validates ranges.
class SiteRegistry {
 public:
  void add(const std::string& site_id, SiteInfo info);
  const SiteInfo* find(const std::string& site_id) const;
  const std::map<std::string, SiteInfo>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, SiteInfo> entries_;
};

enum class CovariateKind { precipitation, river_flow };

const char* to_string(CovariateKind k);
CovariateKind covariate_kind_from_string(const std::string& s);

struct CovariateRecord {
  std::string location_id;
  std::chrono::year_month_day date{};
  double value = 0.0;  // mm for precipitation, m^3/s for flow; >= 0
  CovariateKind kind = CovariateKind::precipitation;

  friend bool operator==(const CovariateRecord&, const CovariateRecord&) = default;
};

struct SiteCovariateLink {
  std::string site_id;
  std::string location_id;
  CovariateKind kind = CovariateKind::precipitation;
};

/// A rejected input row: 1-based line number within the file (the header
/// is line 1) plus the reason.
struct RowError {
  std::size_t row = 0;
  std::string reason;
};

// CSV parsers. Headers are mandatory and must match the declared schema
// exactly (MissingColumn otherwise). When `rejects` is null a bad row
// throws MalformedRow; otherwise every bad row is collected and parsing
// continues, so rejections are enumerated exhaustively.
std::vector<SampleRecord> parse_samples(std::istream& in, std::vector<RowError>* rejects = nullptr);
SiteRegistry parse_sites(std::istream& in);
std::vector<CovariateRecord> parse_covariates(std::istream& in, CovariateKind kind,
                                              std::vector<RowError>* rejects = nullptr);
std::vector<SiteCovariateLink> parse_covariate_map(std::istream& in);

// Serializers (round-trip partners of the parsers above).
void write_samples(std::ostream& out, std::span<const SampleRecord> records);
void write_sites(std::ostream& out, const SiteRegistry& registry);
void write_covariates(std::ostream& out, std::span<const CovariateRecord> records);

/// Write-once immutable holder for everything the pipeline ingests.
/// Safe for concurrent reads after construction.
class LongitudinalStore {
 public:
  LongitudinalStore(std::vector<SampleRecord> samples, SiteRegistry registry,
                    std::vector<CovariateRecord> covariates = {},
                    std::vector<SiteCovariateLink> links = {});

  const SiteRegistry& sites() const { return registry_; }
  const std::map<std::string, std::vector<SampleRecord>>& samples_by_site() const {
    return samples_by_site_;
  }
  /// Daily covariate value (mean of duplicate records) per location.
  const std::map<std::string, std::map<std::chrono::sys_days, double>>& daily(
      CovariateKind kind) const {
    return daily_[static_cast<int>(kind)];
  }
  /// location_id mapped to `site_id` for `kind`, or nullptr.
  const std::string* location_for(const std::string& site_id, CovariateKind kind) const;
  const std::vector<SiteCovariateLink>& links() const { return links_; }
  std::size_t sample_count() const { return sample_count_; }

 private:
  std::map<std::string, std::vector<SampleRecord>> samples_by_site_;
  SiteRegistry registry_;
  std::map<std::string, std::map<std::chrono::sys_days, double>> daily_[2];
  std::map<std::pair<int, std::string>, std::string> site_to_location_;
  std::vector<SiteCovariateLink> links_;
  std::size_t sample_count_ = 0;
};

}  // namespace coastfpca
