#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coastfpca/association.hpp"
#include "coastfpca/fpca.hpp"
#include "coastfpca/geo_export.hpp"
#include "coastfpca/kernel_smooth.hpp"
#include "coastfpca/synth.hpp"
#include "coastfpca/weekly.hpp"

namespace py = pybind11;
using namespace coastfpca;

namespace {

WeeklySeries make_series(const std::string& site_id, const std::map<int, double>& values,
                         int first_week, int last_week, const std::string& scale) {
  WeeklySeries s;
  s.site_id = site_id;
  s.window = {first_week, last_week};
  s.values = values;
  s.scale = series_scale_from_string(scale);
  for (const auto& [week, value] : values)
    if (week < first_week || week > last_week)
      throw InvalidParams("week " + std::to_string(week) + " outside the window");
  return s;
}

std::vector<ScatterPoint1D> zip_points(const std::vector<double>& t, const std::vector<double>& y,
                                       const std::vector<double>& w) {
  if (t.size() != y.size() || (!w.empty() && w.size() != t.size()))
    throw DimensionMismatch("t, y, w lengths differ");
  std::vector<ScatterPoint1D> pts(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) pts[i] = {t[i], y[i], w.empty() ? 1.0 : w[i]};
  return pts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse FPCA for longitudinal monitoring series: conditional-"
            "expectation scores, kernel smoothers, rank statistics, and the "
            "synthetic Karhunen-Loeve oracle.";

  py::register_exception<Error>(m, "CoastFpcaError", PyExc_RuntimeError);

  py::class_<WeeklySeries>(m, "WeeklySeries")
      .def(py::init(&make_series), py::arg("site_id"), py::arg("values"),
           py::arg("first_week") = 1, py::arg("last_week") = 52,
           py::arg("scale") = "log10_count")
      .def_readonly("site_id", &WeeklySeries::site_id)
      .def_property_readonly("values", [](const WeeklySeries& s) { return s.values; })
      .def_property_readonly("window",
                             [](const WeeklySeries& s) {
                               return py::make_tuple(s.window.first, s.window.last);
                             })
      .def_property_readonly("scale",
                             [](const WeeklySeries& s) { return std::string(to_string(s.scale)); })
      .def("__repr__", [](const WeeklySeries& s) {
        return "WeeklySeries(" + s.site_id + ", " + std::to_string(s.values.size()) + " weeks)";
      });

  py::class_<FpcaModel>(m, "FpcaModel")
      .def_readonly("grid", &FpcaModel::grid)
      .def_readonly("mu", &FpcaModel::mu)
      .def_readonly("lambda_", &FpcaModel::lambda)
      .def_readonly("phi", &FpcaModel::phi)
      .def_readonly("sigma2", &FpcaModel::sigma2)
      .def_readonly("quad_weights", &FpcaModel::quad_weights)
      .def_readonly("fve", &FpcaModel::fve)
      .def_readonly("k", &FpcaModel::k)
      .def_readonly("n_sites", &FpcaModel::n_sites)
      .def("pace_scores", [](const FpcaModel& model, const WeeklySeries& s) {
        return pace_scores(s, model);
      })
      .def("integral_scores", [](const FpcaModel& model, const WeeklySeries& s) {
        return integral_scores(s, model);
      })
      .def("reconstruct",
           [](const FpcaModel& model, const std::vector<double>& beta,
              const std::vector<int>& weeks) { return reconstruct(model, beta, weeks); },
           py::arg("beta"), py::arg("weeks"))
      .def("to_json", &model_to_json)
      .def_static("from_json", &model_from_json);

  py::class_<KlTruth>(m, "KlTruth")
      .def_readonly("grid", &KlTruth::grid)
      .def_readonly("mu", &KlTruth::mu)
      .def_readonly("phi", &KlTruth::phi)
      .def_readonly("lambda_", &KlTruth::lambda)
      .def_readonly("sigma2", &KlTruth::sigma2)
      .def_readonly("quad_weights", &KlTruth::quad_weights)
      .def_readonly("site_ids", &KlTruth::site_ids)
      .def_readonly("beta", &KlTruth::beta)
      .def("to_json", &truth_to_json)
      .def_static("from_json", &truth_from_json);

  py::class_<RecoveryReport>(m, "RecoveryReport")
      .def_readonly("phi_alignment", &RecoveryReport::phi_alignment)
      .def_readonly("score_corr", &RecoveryReport::score_corr)
      .def_readonly("score_corr_pooled", &RecoveryReport::score_corr_pooled)
      .def_readonly("lambda_rel_err", &RecoveryReport::lambda_rel_err)
      .def_readonly("sigma2_abs_err", &RecoveryReport::sigma2_abs_err)
      .def_readonly("mu_max_err", &RecoveryReport::mu_max_err)
      .def_readonly("k_compared", &RecoveryReport::k_compared)
      .def_readonly("k_mismatch", &RecoveryReport::k_mismatch);

  py::class_<ScoreVector>(m, "ScoreVector")
      .def_readonly("site_id", &ScoreVector::site_id)
      .def_readonly("beta", &ScoreVector::beta)
      .def_readonly("percentile", &ScoreVector::percentile)
      .def_readonly("decile_bin", &ScoreVector::decile_bin);

  py::class_<SpearmanResult>(m, "SpearmanResult")
      .def_readonly("rho", &SpearmanResult::rho)
      .def_readonly("p", &SpearmanResult::p)
      .def_readonly("n", &SpearmanResult::n);

  py::class_<LinRegResult>(m, "LinRegResult")
      .def_readonly("slope", &LinRegResult::slope)
      .def_readonly("intercept", &LinRegResult::intercept)
      .def_readonly("r_squared", &LinRegResult::r_squared)
      .def_readonly("p", &LinRegResult::p)
      .def_readonly("n", &LinRegResult::n);

  py::class_<ExtremaGroups>(m, "ExtremaGroups")
      .def_readonly("group_high", &ExtremaGroups::group_high)
      .def_readonly("group_low", &ExtremaGroups::group_low)
      .def_readonly("q", &ExtremaGroups::q);

  m.def(
      "simulate_kl",
      [](int n_sites, double observe_prob, double sigma2, std::vector<double> lambda,
         std::uint64_t seed, int max_gap, const std::vector<double>& mu,
         const std::vector<std::vector<double>>& basis, int first_week, int last_week) {
        SimulateParams params;
        if (mu.empty() && basis.empty()) {
          params = default_scenario(n_sites, observe_prob, sigma2, std::move(lambda), seed);
        } else {
          params.n_sites = n_sites;
          params.observe_prob = observe_prob;
          params.sigma2 = sigma2;
          params.lambda = std::move(lambda);
          params.seed = seed;
          params.window = {first_week, last_week};
          params.mu = mu;
          params.basis = basis;
        }
        params.max_gap = max_gap;
        return simulate_kl(params);
      },
      py::arg("n_sites"), py::arg("observe_prob") = 0.6, py::arg("sigma2") = 0.04,
      py::arg("lambda_") = std::vector<double>{1.0, 0.25}, py::arg("seed") = 0,
      py::arg("max_gap") = 4, py::arg("mu") = std::vector<double>{},
      py::arg("basis") = std::vector<std::vector<double>>{}, py::arg("first_week") = 1,
      py::arg("last_week") = 52,
      "Draw sparse series from a Karhunen-Loeve model; returns (series, truth).");

  m.def(
      "fit_fpca",
      [](const std::vector<WeeklySeries>& series, int first_week, int last_week,
         double fve_threshold, std::optional<int> k_override,
         std::vector<double> bandwidth_candidates, int cv_folds, std::uint64_t seed) {
        FpcaOptions options;
        options.fve_threshold = fve_threshold;
        options.k_override = k_override;
        options.bandwidth_candidates = std::move(bandwidth_candidates);
        options.cv_folds = cv_folds;
        options.seed = seed;
        return fit_fpca(series, {first_week, last_week}, options);
      },
      py::arg("series"), py::arg("first_week") = 1, py::arg("last_week") = 52,
      py::arg("fve_threshold") = 0.95, py::arg("k_override") = std::nullopt,
      py::arg("bandwidth_candidates") = std::vector<double>{}, py::arg("cv_folds") = 5,
      py::arg("seed") = 0);

  m.def("score_all",
        [](const std::vector<WeeklySeries>& series, const FpcaModel& model) {
          return score_all(series, model);
        },
        py::arg("series"), py::arg("model"));

  m.def("recovery_report",
        [](const FpcaModel& model, const KlTruth& truth,
           const std::vector<std::vector<double>>& fitted_beta) {
          return recovery_report(model, truth, fitted_beta);
        },
        py::arg("model"), py::arg("truth"),
        py::arg("fitted_beta") = std::vector<std::vector<double>>{});

  m.def("spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });
  m.def("linreg_r2", [](const std::vector<double>& x, const std::vector<double>& y) {
    return linreg_r2(x, y);
  });
  m.def("midranks", [](const std::vector<double>& v) { return midranks(v); });
  m.def("decile_bins",
        [](const std::vector<double>& scores, const std::vector<std::string>& ids, int n_bins) {
          return decile_bins(scores, ids, n_bins);
        },
        py::arg("scores"), py::arg("site_ids"), py::arg("n_bins") = 10);
  m.def("extrema_groups",
        [](const std::map<std::string, double>& fpc1, const std::map<std::string, double>& fpc2,
           double q) { return extrema_groups(fpc1, fpc2, q); },
        py::arg("fpc1"), py::arg("fpc2"), py::arg("q") = 0.10);
  m.def("p_value_bin", &p_value_bin, py::arg("p"), py::arg("alpha") = 0.05);

  m.def("local_linear_1d",
        [](const std::vector<double>& t, const std::vector<double>& y,
           const std::vector<double>& w, double h, const std::vector<double>& grid) {
          return local_linear_1d(zip_points(t, y, w), h, grid);
        },
        py::arg("t"), py::arg("y"), py::arg("w"), py::arg("h"), py::arg("grid"));
  m.def("select_bandwidth_cv",
        [](const std::vector<double>& t, const std::vector<double>& y,
           const std::vector<double>& w, const std::vector<double>& candidates, int folds,
           std::uint64_t seed) {
          return select_bandwidth_cv(zip_points(t, y, w), candidates, folds, seed);
        },
        py::arg("t"), py::arg("y"), py::arg("w"), py::arg("candidates"), py::arg("folds") = 5,
        py::arg("seed") = 0);
  m.def("bandwidth_candidates", &bandwidth_candidates, py::arg("spacing"), py::arg("width"),
        py::arg("count") = 10);
  m.def("trapezoid_weights", &trapezoid_weights, py::arg("n"), py::arg("spacing") = 1.0);
  m.def("orthonormalize",
        [](std::vector<std::vector<double>> basis, const std::vector<double>& weights) {
          return orthonormalize(std::move(basis), weights);
        });

  m.attr("__version__") = "0.1.0";
}
