#pragma once

// Elastic-net scoring model: predictor standardization, coordinate-descent
// penalized least squares, k-fold cross-validation with the one-standard-
// deviation lambda rule, and per-predictor ridge/lasso diagnostics.
//
// Objective, for standardized X:
//   (1/2N) * sum_i (y_i - b0 - x_i'b)^2
//     + lambda * (alpha * |b|_1 + (1-alpha)/2 * |b|_2^2)

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mapmaint/predictors.hpp"
#include "mapmaint/types.hpp"

namespace mapmaint {

struct Standardization {
  std::vector<std::string> column_names;  // retained columns, in order
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;                // sample SD, > 0 for retained columns
  std::vector<std::string> excluded;      // zero-variance columns dropped
};

// Columns with zero sample variance are excluded and reported in
// `excluded`; the returned matrix holds the retained columns only.
std::pair<Eigen::MatrixXd, Standardization> standardize(
    const Eigen::MatrixXd& X, const std::vector<std::string>& column_names);

// Applies stored parameters to raw columns selected by name from `matrix`.
// Throws ValidationError when a retained column is missing.
Eigen::MatrixXd apply_standardization(const Standardization& st,
                                      const PredictorMatrix& matrix);

struct PenalizedFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  int sweeps = 0;
};

// Coordinate descent with soft thresholding; converges when the largest
// coefficient change in a sweep drops below tol.
PenalizedFit fit_penalized(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double alpha, double lambda, double tol = 1e-7,
                           int max_sweeps = 100000,
                           const Eigen::VectorXd* warm_start = nullptr);

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double intercept, const Eigen::VectorXd& beta,
                             double alpha, double lambda);

// Largest lambda with an all-zero lasso solution at this alpha (alpha is
// floored at 1e-3 so the ridge end of the grid stays finite).
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha);

// n_lambda log-spaced values from lambda_max down to min_ratio*lambda_max.
std::vector<double> make_lambda_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y, double alpha,
                                     int n_lambda = 100, double min_ratio = 1e-4);

struct CvCell {
  double alpha = 0.0;
  double lambda = 0.0;
  double mean_error = 0.0;
  double sd_error = 0.0;
};

struct ScoringModel {
  Standardization standardization;
  Eigen::VectorXd coefficients;  // standardized space
  double intercept = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  std::vector<CvCell> cv_table;
};

// K-fold CV over the (alpha, lambda) grid on an already-standardized X.
// Picks the alpha holding the smallest mean held-out MSE, then the largest
// lambda within one SD of that minimum, and refits on all rows. Fold
// assignment comes from a seeded shuffle. The returned model has an empty
// Standardization; fit_model fills it in.
ScoringModel cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<double>& alphas,
                            const std::vector<double>& lambda_path, int k,
                            std::uint64_t seed);

struct FitOptions {
  std::vector<double> alphas;  // default 0.0, 0.1, ..., 1.0
  int cv_folds = 10;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  std::uint64_t seed = 0;
  // Raw predictor columns fed to the model. cr_times_views is always
  // included; max_possible_spanned_angle is off by default.
  std::vector<std::string> include_columns;

  FitOptions();
};

ScoringModel fit_model(const PredictorMatrix& matrix, const Eigen::VectorXd& labels,
                       const FitOptions& options);

// intercept + standardized row . coefficients, one value per matrix row.
Eigen::VectorXd score(const ScoringModel& model, const PredictorMatrix& matrix);

struct PredictorDiagnostics {
  std::vector<std::string> names;
  Eigen::VectorXd r2;  // univariate R^2 of each column against y

  std::vector<double> lasso_lambda_path;
  Eigen::MatrixXd lasso_coef_path;  // one row per path lambda
  double lasso_lambda = 0.0;        // CV-selected
  Eigen::VectorXd lasso_coef;       // at the selected lambda
  std::vector<bool> lasso_zeroed;   // exactly zero at the selected lambda

  std::vector<double> ridge_lambda_path;
  Eigen::MatrixXd ridge_coef_path;
  double ridge_lambda = 0.0;
  Eigen::VectorXd ridge_coef;
  std::vector<bool> ridge_near_zero;  // |coef| < 1% of the largest magnitude
};

PredictorDiagnostics predictor_diagnostics(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y,
                                           const std::vector<std::string>& names,
                                           int k = 10, std::uint64_t seed = 0);

void save_diagnostics(const PredictorDiagnostics& diag,
                      const std::filesystem::path& path);

void save_model(const ScoringModel& model, const std::filesystem::path& path);
ScoringModel load_model(const std::filesystem::path& path);

void save_scores(const std::vector<std::int64_t>& ids, const Eigen::VectorXd& scores,
                 const std::filesystem::path& path);
std::pair<std::vector<std::int64_t>, Eigen::VectorXd> load_scores(
    const std::filesystem::path& path);

}  // namespace mapmaint
