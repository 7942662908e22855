#include "mapmaint/regression.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mapmaint/io.hpp"

namespace mapmaint {

namespace {

constexpr double kAlphaFloor = 1e-3;   // keeps the ridge-end lambda grid finite
constexpr double kZeroVarianceTol = 1e-12;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

void check_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (!X.allFinite() || !y.allFinite()) {
    throw ValidationError("non-finite values in regression inputs");
  }
  if (X.rows() != y.size()) {
    throw ValidationError("X and y row counts differ");
  }
}

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

std::pair<Eigen::MatrixXd, Standardization> standardize(
    const Eigen::MatrixXd& X, const std::vector<std::string>& column_names) {
  if (X.rows() < 2) {
    throw ValidationError("standardization needs at least 2 rows");
  }
  if (static_cast<std::size_t>(X.cols()) != column_names.size()) {
    throw ValidationError("column name count does not match matrix width");
  }
  const double n = static_cast<double>(X.rows());
  std::vector<Eigen::Index> retained;
  Standardization st;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double ss = (X.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd < kZeroVarianceTol * std::max(1.0, std::abs(mean))) {
      st.excluded.push_back(column_names[static_cast<std::size_t>(j)]);
      continue;
    }
    retained.push_back(j);
    st.column_names.push_back(column_names[static_cast<std::size_t>(j)]);
  }
  st.mean.resize(static_cast<Eigen::Index>(retained.size()));
  st.std_dev.resize(static_cast<Eigen::Index>(retained.size()));
  Eigen::MatrixXd Z(X.rows(), static_cast<Eigen::Index>(retained.size()));
  for (std::size_t i = 0; i < retained.size(); ++i) {
    const Eigen::Index j = retained[i];
    const double mean = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / (n - 1.0));
    st.mean(static_cast<Eigen::Index>(i)) = mean;
    st.std_dev(static_cast<Eigen::Index>(i)) = sd;
    Z.col(static_cast<Eigen::Index>(i)) = (X.col(j).array() - mean) / sd;
  }
  return {std::move(Z), std::move(st)};
}

Eigen::MatrixXd apply_standardization(const Standardization& st,
                                      const PredictorMatrix& matrix) {
  Eigen::MatrixXd Z(matrix.values.rows(),
                    static_cast<Eigen::Index>(st.column_names.size()));
  for (std::size_t i = 0; i < st.column_names.size(); ++i) {
    const Eigen::Index src =
        static_cast<Eigen::Index>(matrix.column_index(st.column_names[i]));
    const Eigen::Index dst = static_cast<Eigen::Index>(i);
    Z.col(dst) = (matrix.values.col(src).array() - st.mean(dst)) / st.std_dev(dst);
  }
  return Z;
}

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double intercept, const Eigen::VectorXd& beta,
                             double alpha, double lambda) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd resid = y.array() - intercept - (X * beta).array();
  const double fit = resid.squaredNorm() / (2.0 * n);
  const double l1 = beta.lpNorm<1>();
  const double l2 = beta.squaredNorm();
  return fit + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
}

PenalizedFit fit_penalized(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double alpha, double lambda, double tol, int max_sweeps,
                           const Eigen::VectorXd* warm_start) {
  check_finite(X, y);
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError("alpha must be in [0,1]");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");

  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm_start != nullptr) {
    if (warm_start->size() != p) throw ValidationError("warm start size mismatch");
    beta = *warm_start;
  }
  // Per-column mean squares; the intercept is handled as its own coordinate,
  // so columns need not be centered (CV folds of a standardized matrix are
  // not exactly mean-zero).
  Eigen::VectorXd col_msq(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    col_msq(j) = X.col(j).squaredNorm() * inv_n;
  }

  double intercept = (y - X * beta).mean();
  Eigen::VectorXd resid = y.array() - intercept - (X * beta).array();

  const double l1_penalty = lambda * alpha;
  const double l2_penalty = lambda * (1.0 - alpha);

#ifndef NDEBUG
  double prev_obj = elastic_net_objective(X, y, intercept, beta, alpha, lambda);
#endif

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;

    const double intercept_shift = resid.mean();
    if (intercept_shift != 0.0) {
      intercept += intercept_shift;
      resid.array() -= intercept_shift;
      max_change = std::max(max_change, std::abs(intercept_shift));
    }

    for (Eigen::Index j = 0; j < p; ++j) {
      const double denom = col_msq(j) + l2_penalty;
      if (denom <= 0.0) continue;
      const double rho = X.col(j).dot(resid) * inv_n + col_msq(j) * beta(j);
      const double updated = soft_threshold(rho, l1_penalty) / denom;
      const double change = updated - beta(j);
      if (change != 0.0) {
        resid -= change * X.col(j);
        beta(j) = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }

#ifndef NDEBUG
    {
      const double obj = elastic_net_objective(X, y, intercept, beta, alpha, lambda);
      assert(obj <= prev_obj + 1e-9 * (1.0 + std::abs(prev_obj)));
      prev_obj = obj;
    }
#endif

    if (max_change < tol) {
      ++sweep;
      break;
    }
  }
  return {std::move(beta), intercept, sweep};
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  check_finite(X, y);
  const Eigen::VectorXd centered = y.array() - y.mean();
  const double base =
      (X.transpose() * centered).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
  return base / std::max(alpha, kAlphaFloor);
}

std::vector<double> make_lambda_path(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y, double alpha,
                                     int n_lambda, double min_ratio) {
  const double top = lambda_max(X, y, alpha);
  if (!(top > 0.0)) return {0.0};
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(n_lambda));
  const double log_top = std::log(top);
  const double log_bottom = std::log(top * min_ratio);
  for (int i = 0; i < n_lambda; ++i) {
    const double f = (n_lambda == 1)
                         ? 0.0
                         : static_cast<double>(i) / static_cast<double>(n_lambda - 1);
    path.push_back(std::exp(log_top + f * (log_bottom - log_top)));
  }
  return path;  // descending
}

ScoringModel cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<double>& alphas,
                            const std::vector<double>& lambda_path, int k,
                            std::uint64_t seed) {
  check_finite(X, y);
  const Eigen::Index n = X.rows();
  if (alphas.empty()) throw ValidationError("alpha grid is empty");
  if (k < 2) throw ValidationError("cross-validation needs k >= 2");
  if (static_cast<Eigen::Index>(k) > n) {
    throw ValidationError("cross-validation fold count exceeds row count");
  }

  // Seeded shuffle, folds dealt round-robin.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 gen(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) {
    fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
  }

  ScoringModel model;
  double best_mean = std::numeric_limits<double>::infinity();
  double best_sd = 0.0;
  std::size_t best_alpha_index = 0;
  std::vector<std::vector<CvCell>> cells_per_alpha(alphas.size());

  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double alpha = alphas[a];
    const std::vector<double> path =
        lambda_path.empty() ? make_lambda_path(X, y, alpha) : lambda_path;

    std::vector<std::vector<double>> fold_errors(path.size(),
                                                 std::vector<double>(static_cast<std::size_t>(k)));
    for (int f = 0; f < k; ++f) {
      std::vector<Eigen::Index> train_rows;
      std::vector<Eigen::Index> test_rows;
      for (Eigen::Index i = 0; i < n; ++i) {
        (fold_of[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
      }
      Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
      Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_rows.size()));
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
        ytr(static_cast<Eigen::Index>(i)) = y(train_rows[i]);
      }
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
      for (std::size_t li = 0; li < path.size(); ++li) {
        const PenalizedFit fit = fit_penalized(Xtr, ytr, alpha, path[li], 1e-7,
                                               100000, &beta);
        beta = fit.coefficients;
        double se_sum = 0.0;
        for (Eigen::Index row : test_rows) {
          const double pred = fit.intercept + X.row(row).dot(beta);
          const double err = y(row) - pred;
          se_sum += err * err;
        }
        fold_errors[li][static_cast<std::size_t>(f)] =
            se_sum / static_cast<double>(test_rows.size());
      }
    }

    auto& cells = cells_per_alpha[a];
    cells.reserve(path.size());
    for (std::size_t li = 0; li < path.size(); ++li) {
      CvCell cell;
      cell.alpha = alpha;
      cell.lambda = path[li];
      cell.mean_error =
          std::accumulate(fold_errors[li].begin(), fold_errors[li].end(), 0.0) /
          static_cast<double>(k);
      cell.sd_error = sample_sd(fold_errors[li]);
      cells.push_back(cell);
      if (cell.mean_error < best_mean) {
        best_mean = cell.mean_error;
        best_sd = cell.sd_error;
        best_alpha_index = a;
      }
    }
  }

  for (const auto& cells : cells_per_alpha) {
    model.cv_table.insert(model.cv_table.end(), cells.begin(), cells.end());
  }

  // One-SD rule within the winning alpha's path: the path is descending, so
  // the first qualifying cell has the largest lambda.
  const double threshold = best_mean + best_sd;
  const auto& winner_cells = cells_per_alpha[best_alpha_index];
  const CvCell* chosen = &winner_cells.back();
  for (const CvCell& cell : winner_cells) {
    if (cell.mean_error <= threshold) {
      chosen = &cell;
      break;
    }
  }

  model.alpha = chosen->alpha;
  model.lambda = chosen->lambda;
  const PenalizedFit final_fit = fit_penalized(X, y, model.alpha, model.lambda);
  model.coefficients = final_fit.coefficients;
  model.intercept = final_fit.intercept;
  return model;
}

FitOptions::FitOptions() {
  for (int i = 0; i <= 10; ++i) alphas.push_back(static_cast<double>(i) / 10.0);
  for (const std::string& name : predictor_column_names()) {
    if (name == "max_possible_spanned_angle") continue;
    include_columns.push_back(name);
  }
}

ScoringModel fit_model(const PredictorMatrix& matrix, const Eigen::VectorXd& labels,
                       const FitOptions& options) {
  if (labels.size() != matrix.values.rows()) {
    throw ValidationError("label count does not match predictor row count");
  }
  std::vector<std::string> columns = options.include_columns;
  if (std::find(columns.begin(), columns.end(), "cr_times_views") == columns.end()) {
    columns.push_back("cr_times_views");
  }
  // Keep the canonical predictor order.
  std::vector<std::string> ordered;
  for (const std::string& name : matrix.column_names) {
    if (std::find(columns.begin(), columns.end(), name) != columns.end()) {
      ordered.push_back(name);
    }
  }
  for (const std::string& name : columns) {
    matrix.column_index(name);  // throws on unknown column
  }
  Eigen::MatrixXd raw(matrix.values.rows(), static_cast<Eigen::Index>(ordered.size()));
  for (std::size_t j = 0; j < ordered.size(); ++j) {
    raw.col(static_cast<Eigen::Index>(j)) =
        matrix.values.col(static_cast<Eigen::Index>(matrix.column_index(ordered[j])));
  }
  auto [Z, st] = standardize(raw, ordered);
  if (st.column_names.empty()) {
    throw ValidationError("all predictor columns have zero variance");
  }
  ScoringModel model = cross_validate(Z, labels, options.alphas, {},
                                      options.cv_folds, options.seed);
  model.standardization = std::move(st);
  return model;
}

Eigen::VectorXd score(const ScoringModel& model, const PredictorMatrix& matrix) {
  if (model.coefficients.size() !=
      static_cast<Eigen::Index>(model.standardization.column_names.size())) {
    throw ValidationError("model coefficient count does not match retained columns");
  }
  const Eigen::MatrixXd Z = apply_standardization(model.standardization, matrix);
  return (Z * model.coefficients).array() + model.intercept;
}

PredictorDiagnostics predictor_diagnostics(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y,
                                           const std::vector<std::string>& names,
                                           int k, std::uint64_t seed) {
  check_finite(X, y);
  PredictorDiagnostics diag;
  diag.names = names;
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());

  diag.r2.resize(p);
  const double y_mean = y.mean();
  const double y_ss = (y.array() - y_mean).square().sum();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double x_mean = X.col(j).mean();
    const double x_ss = (X.col(j).array() - x_mean).square().sum();
    const double cov = ((X.col(j).array() - x_mean) * (y.array() - y_mean)).sum();
    diag.r2(j) = (x_ss > 0.0 && y_ss > 0.0) ? (cov * cov) / (x_ss * y_ss) : 0.0;
  }

  auto run_side = [&](double alpha, std::vector<double>& path_out,
                      Eigen::MatrixXd& coef_path, double& sel_lambda,
                      Eigen::VectorXd& sel_coef) {
    path_out = make_lambda_path(X, y, alpha);
    coef_path.resize(static_cast<Eigen::Index>(path_out.size()), p);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (std::size_t li = 0; li < path_out.size(); ++li) {
      const PenalizedFit fit =
          fit_penalized(X, y, alpha, path_out[li], 1e-7, 100000, &beta);
      beta = fit.coefficients;
      coef_path.row(static_cast<Eigen::Index>(li)) = beta.transpose();
    }
    const ScoringModel cv = cross_validate(X, y, {alpha}, {}, k, seed);
    sel_lambda = cv.lambda;
    sel_coef = cv.coefficients;
  };

  run_side(1.0, diag.lasso_lambda_path, diag.lasso_coef_path, diag.lasso_lambda,
           diag.lasso_coef);
  run_side(0.0, diag.ridge_lambda_path, diag.ridge_coef_path, diag.ridge_lambda,
           diag.ridge_coef);

  diag.lasso_zeroed.resize(static_cast<std::size_t>(p));
  diag.ridge_near_zero.resize(static_cast<std::size_t>(p));
  const double ridge_scale = diag.ridge_coef.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j) {
    diag.lasso_zeroed[static_cast<std::size_t>(j)] = (diag.lasso_coef(j) == 0.0);
    diag.ridge_near_zero[static_cast<std::size_t>(j)] =
        std::abs(diag.ridge_coef(j)) < 0.01 * ridge_scale;
  }
  (void)n;
  return diag;
}

void save_diagnostics(const PredictorDiagnostics& diag,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "predictor,r2,lasso_coef,lasso_zeroed,ridge_coef,ridge_near_zero\n";
  for (std::size_t j = 0; j < diag.names.size(); ++j) {
    const Eigen::Index i = static_cast<Eigen::Index>(j);
    out << diag.names[j] << ',' << format_double(diag.r2(i)) << ','
        << format_double(diag.lasso_coef(i)) << ',' << (diag.lasso_zeroed[j] ? 1 : 0)
        << ',' << format_double(diag.ridge_coef(i)) << ','
        << (diag.ridge_near_zero[j] ? 1 : 0) << '\n';
  }
}

void save_model(const ScoringModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "# scoring model\n";
  out << "alpha " << format_double(model.alpha) << '\n';
  out << "lambda " << format_double(model.lambda) << '\n';
  out << "intercept " << format_double(model.intercept) << '\n';
  out << "columns " << model.standardization.column_names.size() << '\n';
  for (std::size_t i = 0; i < model.standardization.column_names.size(); ++i) {
    const Eigen::Index j = static_cast<Eigen::Index>(i);
    out << "column " << model.standardization.column_names[i] << ' '
        << format_double(model.standardization.mean(j)) << ' '
        << format_double(model.standardization.std_dev(j)) << ' '
        << format_double(model.coefficients(j)) << '\n';
  }
  out << "excluded " << model.standardization.excluded.size() << '\n';
  for (const std::string& name : model.standardization.excluded) {
    out << "excluded_column " << name << '\n';
  }
  out << "cv_table " << model.cv_table.size() << '\n';
  for (const CvCell& cell : model.cv_table) {
    out << "cv " << format_double(cell.alpha) << ' ' << format_double(cell.lambda)
        << ' ' << format_double(cell.mean_error) << ' '
        << format_double(cell.sd_error) << '\n';
  }
}

ScoringModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  ScoringModel model;
  std::vector<double> means, sds, coefs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    auto need = [&](bool ok) {
      if (!ok || ss.fail()) throw ParseError(path.string() + ": bad line '" + line + "'");
    };
    if (key == "alpha") {
      std::string v;
      need(static_cast<bool>(ss >> v));
      model.alpha = parse_double(v);
    } else if (key == "lambda") {
      std::string v;
      need(static_cast<bool>(ss >> v));
      model.lambda = parse_double(v);
    } else if (key == "intercept") {
      std::string v;
      need(static_cast<bool>(ss >> v));
      model.intercept = parse_double(v);
    } else if (key == "columns" || key == "excluded" || key == "cv_table") {
      std::size_t count = 0;
      need(static_cast<bool>(ss >> count));
    } else if (key == "column") {
      std::string name, m, s, c;
      need(static_cast<bool>(ss >> name >> m >> s >> c));
      model.standardization.column_names.push_back(name);
      means.push_back(parse_double(m));
      sds.push_back(parse_double(s));
      coefs.push_back(parse_double(c));
    } else if (key == "excluded_column") {
      std::string name;
      need(static_cast<bool>(ss >> name));
      model.standardization.excluded.push_back(name);
    } else if (key == "cv") {
      std::string a, l, m, s;
      need(static_cast<bool>(ss >> a >> l >> m >> s));
      model.cv_table.push_back({parse_double(a), parse_double(l), parse_double(m),
                                parse_double(s)});
    } else {
      throw ParseError(path.string() + ": unknown key '" + key + "'");
    }
  }
  const auto n = static_cast<Eigen::Index>(means.size());
  model.standardization.mean =
      Eigen::Map<const Eigen::VectorXd>(means.data(), n);
  model.standardization.std_dev = Eigen::Map<const Eigen::VectorXd>(sds.data(), n);
  model.coefficients = Eigen::Map<const Eigen::VectorXd>(coefs.data(), n);
  return model;
}

void save_scores(const std::vector<std::int64_t>& ids, const Eigen::VectorXd& scores,
                 const std::filesystem::path& path) {
  std::vector<double> values(scores.data(), scores.data() + scores.size());
  save_id_value_csv(ids, values, "score", path);
}

std::pair<std::vector<std::int64_t>, Eigen::VectorXd> load_scores(
    const std::filesystem::path& path) {
  auto [ids, values] = load_id_value_csv(path);
  Eigen::VectorXd scores = Eigen::Map<const Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  return {std::move(ids), std::move(scores)};
}

}  // namespace mapmaint
