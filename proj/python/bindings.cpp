#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fraudsel/config.hpp"
#include "fraudsel/criteria.hpp"
#include "fraudsel/datagen.hpp"
#include "fraudsel/experiments.hpp"
#include "fraudsel/ridge.hpp"
#include "fraudsel/tree_boost.hpp"
#include "fraudsel/validation.hpp"

namespace py = pybind11;
using namespace fraudsel;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  Dataset d;
  d.x = x;
  d.y = y;
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Top-k fraud-loss model selection";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "top_k",
      [](const std::vector<double>& scores, std::size_t k) { return top_k_labels(scores, k).selected; },
      py::arg("scores"), py::arg("k"), "Ascending indices of the k highest scores (ties by index).");
  m.def(
      "fraud_loss",
      [](const std::vector<int>& labels, const std::vector<double>& scores, std::size_t k) {
        return fraud_loss(labels, top_k_labels(scores, k));
      },
      py::arg("labels"), py::arg("scores"), py::arg("k"), "False positives among the top k.");
  m.def(
      "classification_error",
      [](const std::vector<int>& labels, const std::vector<int>& predicted, std::size_t k) {
        return classification_error(labels, predicted, k);
      },
      py::arg("labels"), py::arg("predicted"), py::arg("k"));
  m.def(
      "auc", [](const std::vector<int>& labels, const std::vector<double>& scores) { return auc_wilcoxon(labels, scores); },
      py::arg("labels"), py::arg("scores"), "Wilcoxon AUC; ties count zero.");

  m.def(
      "generate",
      [](const std::string& dgp_json, Eigen::Index n, std::uint64_t seed) {
        const DgpSpec spec = materialize(dgp_config_from_json(json::parse(dgp_json)));
        Rng rng(seed);
        GeneratedDataset g = generate_dataset(spec, n, rng);
        return py::make_tuple(g.data.x, g.data.y, g.intercept, g.mean_probability);
      },
      py::arg("dgp_json"), py::arg("n"), py::arg("seed") = 1,
      "Draws (X, y, intercept, mean_probability) from a JSON DGP recipe.");

  py::class_<RidgeModel>(m, "RidgeModel")
      .def_readonly("intercept", &RidgeModel::intercept)
      .def_readonly("coefficients", &RidgeModel::coefficients)
      .def_readonly("lam", &RidgeModel::lambda)
      .def_readonly("iterations", &RidgeModel::iterations)
      .def_readonly("gradient_norm", &RidgeModel::gradient_norm)
      .def("margin", &RidgeModel::margin, py::arg("x"))
      .def("predict_proba", &RidgeModel::predict_proba, py::arg("x"));

  m.def(
      "fit_ridge",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, double lam, bool standardize) {
        RidgeOptions opts;
        opts.standardize = standardize;
        return fit_ridge(make_dataset(x, y), lam, opts);
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("standardize") = true);

  m.def(
      "ridge_path",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t length, double ratio,
         const Eigen::MatrixXd& x_eval) {
        const Dataset d = make_dataset(x, y);
        const auto grid = default_lambda_grid(d, length, ratio);
        const ModelPath path = fit_ridge_path(d, grid);
        return py::make_tuple(path.tuning_values(), path.margins(x_eval));
      },
      py::arg("x"), py::arg("y"), py::arg("length") = 100, py::arg("ratio") = 1e-4, py::arg("x_eval"),
      "Returns (lambdas, n_eval x length log-odds).");

  py::class_<BoostModel>(m, "BoostModel")
      .def_readonly("base_score", &BoostModel::base_score)
      .def_readonly("training_loss", &BoostModel::training_loss)
      .def("__len__", &BoostModel::size)
      .def("staged_margin", &BoostModel::staged_margin, py::arg("x"), py::arg("m"))
      .def("margin", &BoostModel::margin, py::arg("x"));

  m.def(
      "fit_boost",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t m_max, double shrinkage, int max_depth,
         int min_leaf, double lambda_leaf) {
        BoostOptions opts;
        opts.shrinkage = shrinkage;
        opts.max_depth = max_depth;
        opts.min_leaf = min_leaf;
        opts.lambda_leaf = lambda_leaf;
        return fit_boost(make_dataset(x, y), m_max, opts);
      },
      py::arg("x"), py::arg("y"), py::arg("m_max"), py::arg("shrinkage") = 0.1, py::arg("max_depth") = 3,
      py::arg("min_leaf") = 10, py::arg("lambda_leaf") = 1.0);

  m.def(
      "cv_fraud_loss",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, const std::string& estimator_json,
         const std::string& plan_json, double tau, int threads) {
        const Dataset d = make_dataset(x, y);
        const Fitter fitter = make_fitter(estimator_config_from_json(json::parse(estimator_json)), d);
        const ValidationPlan plan = plan_from_json(json::parse(plan_json));
        const CriterionTable table = run_validation(fitter, d, plan, threads).fraud_loss(tau);
        const Selection s = select_tuning(table);
        return py::make_tuple(table.tuning_values, table.statistic, s.index);
      },
      py::arg("x"), py::arg("y"), py::arg("estimator_json"), py::arg("plan_json"), py::arg("tau"),
      py::arg("threads") = 1, "Returns (tuning values, statistic, selected index).");

  m.def(
      "run_study",
      [](const std::string& config_json, int threads) {
        const ExperimentConfig config = experiment_config_from_json(json::parse(config_json));
        StudyResult result;
        {
          py::gil_scoped_release release;
          result = run_study(config, threads);
        }
        py::list rows;
        for (const auto& r : result.table.rows) {
          py::dict d;
          d["plan"] = r.plan;
          d["criterion"] = to_string(r.criterion);
          d["k"] = r.k;
          d["rfl"] = r.rfl;
          d["average_all"] = r.average_all;
          d["average_focus"] = r.average_focus;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["successful"] = result.table.successful;
        out["failed"] = result.table.failed;
        out["summary_csv"] = summary_csv(result.table, config.plans);
        return out;
      },
      py::arg("config_json"), py::arg("threads") = 1, "Runs a study from a JSON config string.");
}
