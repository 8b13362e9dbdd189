#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coastfpca/fpca.hpp"
#include "coastfpca/store.hpp"
#include "coastfpca/weekly.hpp"

namespace coastfpca {

/// Fixed 10-step sequential palette, bin 1 (bluest) to bin 10 (reddest).
extern const std::array<const char*, 10> kDecilePalette;

struct BinnedSite {
  std::string site_id;
  int bin = 1;  // 1..10
  double score = 0.0;
  double percentile = 0.0;
};

/// GeoJSON FeatureCollection of Point features (coordinates ordered
/// longitude, latitude) with properties site_id, bin, color, score,
/// percentile. Throws MissingCoordinates listing any site absent from the
/// registry.
std::string export_geojson(const SiteRegistry& registry, std::span<const BinnedSite> sites);

/// Structural GeoJSON check; returns human-readable violations (empty means
/// the document is a valid FeatureCollection of Point features).
std::vector<std::string> validate_geojson(const std::string& text);

/// One named curve for the SVG plot helpers.
struct Curve {
  std::string label;
  std::map<int, double> values;  // week -> value
  std::string color = "#000000";
  bool dashed = false;
};

/// Line plot of curves against the week axis; well-formed standalone SVG.
/// Curves carry class="curve"; legend entries are emitted when labels are
/// non-empty.
std::string render_curves_svg(const std::string& title, std::span<const Curve> curves,
                              const std::string& y_label = "log10 level");

/// Fig-1b-style eigenfunction plot: one curve per component with FVE
/// percentages in the legend.
std::string render_components_svg(const FpcaModel& model);

}  // namespace coastfpca
