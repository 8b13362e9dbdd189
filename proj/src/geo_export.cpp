#include "coastfpca/geo_export.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coastfpca/util.hpp"
#include "json.hpp"

namespace coastfpca {

// ColorBrewer RdYlBu 10-class, reversed so bin 1 is the bluest.
const std::array<const char*, 10> kDecilePalette = {
    "#313695", "#4575b4", "#74add1", "#abd9e9", "#e0f3f8",
    "#fee090", "#fdae61", "#f46d43", "#d73027", "#a50026"};

std::string export_geojson(const SiteRegistry& registry, std::span<const BinnedSite> sites) {
  std::vector<std::string> missing;
  std::vector<BinnedSite> ordered(sites.begin(), sites.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const BinnedSite& a, const BinnedSite& b) { return a.site_id < b.site_id; });
  nlohmann::json features = nlohmann::json::array();
  for (const auto& s : ordered) {
    const SiteInfo* info = registry.find(s.site_id);
    if (info == nullptr) {
      missing.push_back(s.site_id);
      continue;
    }
    if (s.bin < 1 || s.bin > 10) throw InvalidParams("bin out of range for " + s.site_id);
    nlohmann::json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"}, {"coordinates", {info->longitude, info->latitude}}};
    f["properties"] = {{"site_id", s.site_id},
                       {"bin", s.bin},
                       {"color", kDecilePalette[std::size_t(s.bin - 1)]},
                       {"score", s.score},
                       {"percentile", s.percentile}};
    features.push_back(std::move(f));
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& id : missing) joined += (joined.empty() ? "" : ", ") + id;
    throw MissingCoordinates(joined);
  }
  nlohmann::json root;
  root["type"] = "FeatureCollection";
  root["features"] = std::move(features);
  return root.dump(2);
}

std::vector<std::string> validate_geojson(const std::string& text) {
  std::vector<std::string> problems;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    problems.push_back(std::string("not valid JSON: ") + e.what());
    return problems;
  }
  if (j.value("type", "") != "FeatureCollection") problems.push_back("type != FeatureCollection");
  if (!j.contains("features") || !j["features"].is_array()) {
    problems.push_back("features array missing");
    return problems;
  }
  std::size_t index = 0;
  for (const auto& f : j["features"]) {
    const std::string at = "feature " + std::to_string(index++);
    if (f.value("type", "") != "Feature") problems.push_back(at + ": type != Feature");
    if (!f.contains("geometry") || !f["geometry"].is_object()) {
      problems.push_back(at + ": geometry missing");
      continue;
    }
    const auto& g = f["geometry"];
    if (g.value("type", "") != "Point") problems.push_back(at + ": geometry type != Point");
    if (!g.contains("coordinates") || !g["coordinates"].is_array() ||
        g["coordinates"].size() != 2 || !g["coordinates"][0].is_number() ||
        !g["coordinates"][1].is_number()) {
      problems.push_back(at + ": coordinates are not [lon, lat]");
    } else {
      const double lon = g["coordinates"][0].get<double>();
      const double lat = g["coordinates"][1].get<double>();
      if (lon < -180 || lon > 180 || lat < -90 || lat > 90)
        problems.push_back(at + ": coordinates out of range");
    }
    if (!f.contains("properties") || !f["properties"].is_object()) {
      problems.push_back(at + ": properties missing");
    } else {
      for (const char* key : {"site_id", "bin", "color"})
        if (!f["properties"].contains(key))
          problems.push_back(at + ": property '" + key + "' missing");
    }
  }
  return problems;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_curves_svg(const std::string& title, std::span<const Curve> curves,
                              const std::string& y_label) {
  constexpr double width = 720, height = 420;
  constexpr double ml = 60, mr = 170, mt = 40, mb = 48;  // margins, legend on the right
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;

  int week_min = 1, week_max = 52;
  double y_min = 0.0, y_max = 1.0;
  bool have = false;
  for (const auto& c : curves) {
    for (const auto& [week, value] : c.values) {
      if (!have) {
        week_min = week_max = week;
        y_min = y_max = value;
        have = true;
      } else {
        week_min = std::min(week_min, week);
        week_max = std::max(week_max, week);
        y_min = std::min(y_min, value);
        y_max = std::max(y_max, value);
      }
    }
  }
  if (week_max == week_min) week_max = week_min + 1;
  if (y_max - y_min < 1e-9) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;
  auto sx = [&](double week) { return ml + (week - week_min) / double(week_max - week_min) * plot_w; };
  auto sy = [&](double v) { return mt + (y_max - v) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << ml << "\" y=\"24\" font-size=\"16\" font-family=\"sans-serif\">"
      << xml_escape(title) << "</text>\n";
  // axes
  svg << "  <line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
      << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int week = ((week_min + 9) / 10) * 10; week <= week_max; week += 10) {
    svg << "  <line x1=\"" << sx(week) << "\" y1=\"" << mt + plot_h << "\" x2=\"" << sx(week)
        << "\" y2=\"" << mt + plot_h + 5 << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << sx(week) << "\" y=\"" << mt + plot_h + 20
        << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">" << week
        << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    svg << "  <line x1=\"" << ml - 5 << "\" y1=\"" << sy(v) << "\" x2=\"" << ml << "\" y2=\""
        << sy(v) << "\" stroke=\"black\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    svg << "  <text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
        << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">" << buf
        << "</text>\n";
  }
  svg << "  <text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\">week</text>\n";
  svg << "  <text x=\"16\" y=\"" << mt + plot_h / 2
      << "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << mt + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  std::size_t legend_row = 0;
  for (const auto& c : curves) {
    if (c.values.empty()) continue;
    svg << "  <polyline class=\"curve\" fill=\"none\" stroke=\"" << c.color << "\"";
    if (c.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [week, value] : c.values) {
      if (!first) svg << ' ';
      first = false;
      svg << sx(week) << ',' << sy(value);
    }
    svg << "\"/>\n";
    if (!c.label.empty()) {
      const double ly = mt + 14 + 18.0 * double(legend_row++);
      svg << "  <line x1=\"" << ml + plot_w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
          << ml + plot_w + 36 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << c.color << "\"";
      if (c.dashed) svg << " stroke-dasharray=\"6 4\"";
      svg << " stroke-width=\"1.5\"/>\n";
      svg << "  <text class=\"legend\" x=\"" << ml + plot_w + 42 << "\" y=\"" << ly
          << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(c.label)
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_components_svg(const FpcaModel& model) {
  static const std::array<const char*, 6> colors = {"#000000", "#d73027", "#4575b4",
                                                    "#1a9850", "#fdae61", "#984ea3"};
  std::vector<Curve> curves;
  for (int k = 0; k < model.k; ++k) {
    Curve c;
    char buf[64];
    const double share =
        100.0 * (k == 0 ? model.fve[0] : model.fve[std::size_t(k)] - model.fve[std::size_t(k) - 1]);
    std::snprintf(buf, sizeof(buf), "FPC%d (%.1f%%)", k + 1, share);
    c.label = buf;
    c.color = colors[std::size_t(k) % colors.size()];
    for (std::size_t j = 0; j < model.grid.size(); ++j) c.values[model.grid[j]] = model.phi[k][j];
    curves.push_back(std::move(c));
  }
  return render_curves_svg("Functional principal components", curves, "component value");
}

}  // namespace coastfpca
