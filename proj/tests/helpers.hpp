#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "coastfpca/fpca.hpp"
#include "coastfpca/synth.hpp"

namespace test_helpers {

/// Hand-built model on weeks [first..last] from a raw basis (orthonormalized
/// under the trapezoid weights) -- the injected-truth counterpart of a fit.
inline coastfpca::FpcaModel make_model(int first_week, int last_week, std::vector<double> mu,
                                       std::vector<std::vector<double>> basis,
                                       std::vector<double> lambda, double sigma2) {
  coastfpca::FpcaModel model;
  for (int w = first_week; w <= last_week; ++w) model.grid.push_back(w);
  model.quad_weights = coastfpca::trapezoid_weights(model.grid.size());
  model.mu = std::move(mu);
  model.phi = coastfpca::orthonormalize(std::move(basis), model.quad_weights);
  model.lambda = std::move(lambda);
  model.sigma2 = sigma2;
  model.k = static_cast<int>(model.lambda.size());
  double total = 0;
  for (double l : model.lambda) total += l;
  double cum = 0;
  for (double l : model.lambda) {
    cum += l;
    model.fve.push_back(cum / total);
  }
  model.n_sites = 0;
  return model;
}

inline std::vector<double> sine_curve(int first_week, int last_week, double period = 52.0) {
  std::vector<double> out;
  for (int w = first_week; w <= last_week; ++w)
    out.push_back(std::sin(2.0 * 3.14159265358979323846 * w / period));
  return out;
}

/// Minimal XML well-formedness check (tag balance, quoted attributes);
/// enough to validate the SVG writer's output.
inline bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool seen_element = false;
  while (i < n) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    if (text.compare(i, 2, "<?") == 0) {  // prolog
      const auto end = text.find("?>", i);
      if (end == std::string::npos) return false;
      i = end + 2;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      const auto end = text.find("-->", i);
      if (end == std::string::npos) return false;
      i = end + 3;
      continue;
    }
    const bool closing = i + 1 < n && text[i + 1] == '/';
    std::size_t j = i + (closing ? 2 : 1);
    std::size_t name_start = j;
    while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == ':' ||
                     text[j] == '-' || text[j] == '_'))
      ++j;
    const std::string name = text.substr(name_start, j - name_start);
    if (name.empty()) return false;
    // scan to '>' respecting quotes
    bool in_quote = false;
    char quote = 0;
    bool self_closing = false;
    while (j < n) {
      const char c = text[j];
      if (in_quote) {
        if (c == quote) in_quote = false;
      } else if (c == '"' || c == '\'') {
        in_quote = true;
        quote = c;
      } else if (c == '>') {
        self_closing = j > 0 && text[j - 1] == '/';
        break;
      }
      ++j;
    }
    if (j >= n) return false;
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
      seen_element = true;
    } else {
      seen_element = true;
    }
    i = j + 1;
  }
  return stack.empty() && seen_element;
}

}  // namespace test_helpers
