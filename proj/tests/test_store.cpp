#include <sstream>

#include "coastfpca/rng.hpp"
#include "coastfpca/store.hpp"
#include "doctest.h"

using namespace coastfpca;

TEST_SUITE("store") {

TEST_CASE("sample row maps fields directly") {
  std::istringstream in(
      "site_id,date,fc_count,salinity,temperature\n"
      "S1,2005-06-03,120,28.1,\n");
  const auto records = parse_samples(in);
  REQUIRE(records.size() == 1);
  CHECK(records[0].site_id == "S1");
  CHECK(format_date(records[0].date) == "2005-06-03");
  CHECK(records[0].fc_count == 120.0);
  CHECK(records[0].salinity == 28.1);
  CHECK(!records[0].temperature.has_value());
}

TEST_CASE("negative count rejects the row") {
  std::istringstream in(
      "site_id,date,fc_count,salinity,temperature\n"
      "S1,2005-06-03,-4,,\n");
  CHECK_THROWS_AS(parse_samples(in), MalformedRow);
}

TEST_CASE("empty body with valid header yields an empty list") {
  std::istringstream in("site_id,date,fc_count,salinity,temperature\n");
  CHECK(parse_samples(in).empty());
}

TEST_CASE("collect mode enumerates every rejected row with its line number") {
  std::istringstream in(
      "site_id,date,fc_count,salinity,temperature\n"
      "S1,2005-06-03,5,,\n"
      "S1,not-a-date,5,,\n"
      "S1,2005-06-04,-1,,\n"
      "S1,2005-06-05,7,,\n");
  std::vector<RowError> rejects;
  const auto records = parse_samples(in, &rejects);
  CHECK(records.size() == 2);
  REQUIRE(rejects.size() == 2);
  CHECK(rejects[0].row == 3);
  CHECK(rejects[1].row == 4);
  CHECK(records.size() + rejects.size() == 4);  // accepted + rejected == data rows
}

TEST_CASE("wrong header throws MissingColumn") {
  std::istringstream in("site,when,count\nS1,2005-06-03,5\n");
  CHECK_THROWS_AS(parse_samples(in), MissingColumn);
}

TEST_CASE("sites parse, duplicate id, coordinate range") {
  {
    std::istringstream in("site_id,latitude,longitude,province\nS1,48.42,-123.36,BC\n");
    const auto reg = parse_sites(in);
    REQUIRE(reg.find("S1") != nullptr);
    CHECK(reg.find("S1")->latitude == 48.42);
    CHECK(reg.find("S1")->longitude == -123.36);
    CHECK(reg.find("S1")->province == Province::BC);
  }
  {
    std::istringstream in(
        "site_id,latitude,longitude,province\nS1,48,-123,BC\nS1,49,-124,BC\n");
    CHECK_THROWS_AS(parse_sites(in), DuplicateSiteId);
  }
  {
    std::istringstream in("site_id,latitude,longitude,province\nS1,95,-123,BC\n");
    CHECK_THROWS_AS(parse_sites(in), CoordinateOutOfRange);
  }
}

TEST_CASE("covariates parse and validate") {
  {
    std::istringstream in("location_id,date,value\nP1,2005-06-01,12.5\n");
    const auto recs = parse_covariates(in, CovariateKind::precipitation);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].location_id == "P1");
    CHECK(recs[0].value == 12.5);
    CHECK(recs[0].kind == CovariateKind::precipitation);
  }
  {
    std::istringstream in("location_id,date,value\nP1,2005-06-01,-3\n");
    CHECK_THROWS_AS(parse_covariates(in, CovariateKind::precipitation), MalformedRow);
  }
  {
    std::istringstream in("location_id,date,value\nR1,2005-06-01,830\n");
    const auto recs = parse_covariates(in, CovariateKind::river_flow);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].kind == CovariateKind::river_flow);
    CHECK(recs[0].value == 830.0);
  }
}

TEST_CASE("round trip: serialize then reparse yields the identical record list") {
  Rng rng(2024);
  std::vector<SampleRecord> records;
  for (int i = 0; i < 200; ++i) {
    SampleRecord r;
    r.site_id = "S" + std::to_string(1 + int(rng.below(20)));
    const int year = 1995 + int(rng.below(25));
    const int month = 1 + int(rng.below(12));
    const int day = 1 + int(rng.below(28));
    r.date = std::chrono::year{year} / month / day;
    r.fc_count = std::floor(rng.uniform01() * 1e4) / 10.0;
    if (rng.uniform01() < 0.5) r.salinity = rng.uniform01() * 35.0;
    if (rng.uniform01() < 0.5) r.temperature = rng.uniform01() * 20.0;
    records.push_back(std::move(r));
  }
  std::ostringstream out;
  write_samples(out, records);
  std::istringstream in(out.str());
  const auto reparsed = parse_samples(in);
  CHECK(reparsed == records);

  // and the reserialization is byte-identical
  std::ostringstream out2;
  write_samples(out2, reparsed);
  CHECK(out.str() == out2.str());
}

TEST_CASE("date helpers") {
  CHECK(day_of_year(parse_date("2005-01-01")) == 1);
  CHECK(day_of_year(parse_date("2005-12-31")) == 365);
  CHECK(day_of_year(parse_date("2020-02-29")) == 60);  // leap day shifts later dates
  CHECK(day_of_year(parse_date("2020-12-31")) == 366);
  CHECK_THROWS_AS(parse_date("2005-02-30"), Error);
  CHECK_THROWS_AS(parse_date("2005/02/03"), Error);
  CHECK(week_of_year(parse_date("2005-01-07")) == 1);
  CHECK(week_of_year(parse_date("2005-01-08")) == 2);
  CHECK(week_of_year(parse_date("2005-12-31")) == 52);  // day 365 folds into week 52
  CHECK(week_of_year(parse_date("2020-12-31")) == 52);  // day 366 too
}

TEST_CASE("store groups samples and averages duplicate covariate days") {
  std::vector<SampleRecord> samples;
  for (const char* id : {"B", "A", "B"}) {
    SampleRecord r;
    r.site_id = id;
    r.date = std::chrono::year{2005} / 6 / 1;
    r.fc_count = 5;
    samples.push_back(r);
  }
  SiteRegistry reg;
  reg.add("A", {48, -123, Province::BC});
  reg.add("B", {49, -124, Province::BC});
  std::vector<CovariateRecord> covs;
  covs.push_back({"P1", std::chrono::year{2005} / 6 / 1, 10.0, CovariateKind::precipitation});
  covs.push_back({"P1", std::chrono::year{2005} / 6 / 1, 20.0, CovariateKind::precipitation});
  std::vector<SiteCovariateLink> links{{"A", "P1", CovariateKind::precipitation}};
  LongitudinalStore store(samples, reg, covs, links);
  CHECK(store.samples_by_site().at("B").size() == 2);
  CHECK(store.daily(CovariateKind::precipitation).at("P1").begin()->second == 15.0);
  REQUIRE(store.location_for("A", CovariateKind::precipitation) != nullptr);
  CHECK(*store.location_for("A", CovariateKind::precipitation) == "P1");
  CHECK(store.location_for("A", CovariateKind::river_flow) == nullptr);

  std::vector<SiteCovariateLink> conflicting{{"A", "P1", CovariateKind::precipitation},
                                             {"A", "P2", CovariateKind::precipitation}};
  CHECK_THROWS_AS(LongitudinalStore(samples, reg, covs, conflicting), Error);
}

}  // TEST_SUITE
