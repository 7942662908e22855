#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <numeric>
#include <random>

#include "mapmaint/labeling.hpp"
#include "mapmaint/regression.hpp"
#include "mapmaint/simulator.hpp"
#include "test_util.hpp"

using namespace mapmaint;
using namespace mapmaint::testing;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = gauss(gen);
  }
  return X;
}

std::vector<std::string> names_for(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("c" + std::to_string(j));
  return names;
}

// Ordinary least squares with intercept via the normal equations.
Eigen::VectorXd ols_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double& intercept) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  Eigen::VectorXd full = (A.transpose() * A).ldlt().solve(A.transpose() * y);
  intercept = full(0);
  return full.tail(X.cols());
}

}  // namespace

TEST_CASE("standardize") {
  SUBCASE("symmetric column") {
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    auto [Z, st] = standardize(X, {"a"});
    CHECK(Z(0, 0) == doctest::Approx(-1.0));
    CHECK(Z(1, 0) == doctest::Approx(0.0));
    CHECK(Z(2, 0) == doctest::Approx(1.0));
    CHECK(st.mean(0) == doctest::Approx(2.0));
    CHECK(st.std_dev(0) == doctest::Approx(1.0));
  }
  SUBCASE("constant column is excluded") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 7, 2, 7, 3, 7, 4, 7;
    auto [Z, st] = standardize(X, {"a", "b"});
    CHECK(Z.cols() == 1);
    REQUIRE(st.excluded.size() == 1);
    CHECK(st.excluded[0] == "b");
    CHECK(st.column_names == std::vector<std::string>{"a"});
  }
  SUBCASE("random matrix is standardized to machine accuracy") {
    Eigen::MatrixXd X = random_matrix(10, 4, 21);
    X.col(2) *= 40.0;
    X.col(3).array() += 1000.0;
    auto [Z, st] = standardize(X, names_for(4));
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(std::abs(Z.col(j).mean()) < 1e-12);
      const double sd = std::sqrt(
          (Z.col(j).array() - Z.col(j).mean()).square().sum() / (Z.rows() - 1.0));
      CHECK(sd == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("needs two rows") {
    Eigen::MatrixXd X(1, 1);
    X << 1;
    CHECK_THROWS_AS(standardize(X, {"a"}), ValidationError);
  }
}

TEST_CASE("fit_penalized against closed-form oracles") {
  const Eigen::Index n = 60, p = 4;
  Eigen::MatrixXd raw = random_matrix(n, p, 31);
  Eigen::VectorXd beta_true(p);
  beta_true << 1.5, -2.0, 0.0, 0.75;
  std::mt19937_64 gen(32);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::VectorXd y = raw * beta_true;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += 0.4 + noise(gen);
  auto [X, st] = standardize(raw, names_for(p));

  SUBCASE("lambda = 0 reduces to OLS") {
    const PenalizedFit fit = fit_penalized(X, y, 0.5, 0.0);
    double b0 = 0.0;
    const Eigen::VectorXd beta = ols_oracle(X, y, b0);
    CHECK((fit.coefficients - beta).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(std::abs(fit.intercept - b0) < 1e-6);
  }

  SUBCASE("alpha = 0 matches the ridge normal equations") {
    for (double lambda : {0.01, 0.3, 2.0}) {
      const PenalizedFit fit = fit_penalized(X, y, 0.0, lambda);
      const Eigen::MatrixXd lhs =
          X.transpose() * X +
          static_cast<double>(n) * lambda * Eigen::MatrixXd::Identity(p, p);
      const Eigen::VectorXd rhs = X.transpose() * y;
      const Eigen::VectorXd beta = lhs.ldlt().solve(rhs);
      CHECK((fit.coefficients - beta).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }

  SUBCASE("alpha = 1 at lambda_max zeroes every coefficient") {
    const double lmax =
        (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(n);
    for (double lambda : {lmax, 1.3 * lmax}) {
      const PenalizedFit fit = fit_penalized(X, y, 1.0, lambda);
      for (Eigen::Index j = 0; j < p; ++j) CHECK(fit.coefficients(j) == 0.0);
    }
    // Just below lambda_max at least one coefficient activates.
    const PenalizedFit below = fit_penalized(X, y, 1.0, 0.95 * lmax);
    CHECK(below.coefficients.cwiseAbs().maxCoeff() > 0.0);
  }

  SUBCASE("non-finite inputs are rejected") {
    Eigen::MatrixXd bad = X;
    bad(3, 1) = std::nan("");
    CHECK_THROWS_AS(fit_penalized(bad, y, 0.5, 0.1), ValidationError);
  }
}

TEST_CASE("coordinate descent never increases the objective") {
  const Eigen::Index n = 40, p = 5;
  Eigen::MatrixXd raw = random_matrix(n, p, 41);
  Eigen::VectorXd y = raw.col(0) - 0.5 * raw.col(3);
  auto [X, st] = standardize(raw, names_for(p));
  const double alpha = 0.4, lambda = 0.05;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double intercept = y.mean();
  double prev = elastic_net_objective(X, y, intercept, beta, alpha, lambda);
  for (int sweep = 0; sweep < 50; ++sweep) {
    const PenalizedFit fit = fit_penalized(X, y, alpha, lambda, 0.0, 1, &beta);
    beta = fit.coefficients;
    intercept = fit.intercept;
    const double obj = elastic_net_objective(X, y, intercept, beta, alpha, lambda);
    CHECK(obj <= prev + 1e-12 * (1.0 + std::abs(prev)));
    prev = obj;
  }
}

TEST_CASE("lasso path sparsity and ridge limits") {
  const Eigen::Index n = 80, p = 5;
  Eigen::MatrixXd raw = random_matrix(n, p, 51);
  Eigen::VectorXd beta_true(p);
  beta_true << 2.0, 0.0, -1.0, 0.0, 0.4;
  std::mt19937_64 gen(52);
  std::normal_distribution<double> noise(0.0, 0.2);
  Eigen::VectorXd y = raw * beta_true;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += noise(gen);
  auto [X, st] = standardize(raw, names_for(p));

  SUBCASE("nonzero count is non-increasing in lambda") {
    const std::vector<double> path = make_lambda_path(X, y, 1.0, 60);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    int prev_nnz = 0;  // path descends, so the active set can only grow
    for (double lambda : path) {
      const PenalizedFit fit = fit_penalized(X, y, 1.0, lambda, 1e-9, 100000, &beta);
      beta = fit.coefficients;
      int nnz = 0;
      for (Eigen::Index j = 0; j < p; ++j) nnz += beta(j) != 0.0 ? 1 : 0;
      CHECK(nnz >= prev_nnz);
      prev_nnz = nnz;
    }
  }

  SUBCASE("ridge norm shrinks monotonically and spans OLS to zero") {
    double b0 = 0.0;
    const Eigen::VectorXd ols = ols_oracle(X, y, b0);
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-8, 1e-4, 1e-2, 1.0, 1e2, 1e5}) {
      const PenalizedFit fit = fit_penalized(X, y, 0.0, lambda);
      const double norm = fit.coefficients.norm();
      CHECK(norm <= prev_norm + 1e-12);
      prev_norm = norm;
      if (lambda <= 1e-8) {
        CHECK((fit.coefficients - ols).lpNorm<Eigen::Infinity>() < 1e-5);
      }
    }
    const PenalizedFit huge = fit_penalized(X, y, 0.0, 1e5);
    CHECK(huge.coefficients.norm() < 1e-3);
  }
}

TEST_CASE("cross_validate") {
  SUBCASE("planted coefficients are recovered on noiseless data") {
    const Eigen::Index n = 120, p = 4;
    Eigen::MatrixXd raw = random_matrix(n, p, 61);
    auto [X, st] = standardize(raw, names_for(p));
    Eigen::VectorXd beta_true(p);
    beta_true << 2.0, -1.0, 0.6, -0.3;
    const Eigen::VectorXd y = X * beta_true;
    const ScoringModel model =
        cross_validate(X, y, {0.0, 0.25, 0.5, 0.75, 1.0}, {}, 5, 7);
    CHECK((model.coefficients - beta_true).lpNorm<Eigen::Infinity>() < 1e-3);
    CHECK(std::abs(model.intercept) < 1e-3);
  }

  SUBCASE("identical rows give identical fold errors") {
    Eigen::MatrixXd X(15, 3);
    for (int i = 0; i < 15; ++i) X.row(i) << 1.0, 2.0, -1.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(15, 3.0);
    const ScoringModel model = cross_validate(X, y, {0.5}, {}, 5, 3);
    for (const CvCell& cell : model.cv_table) {
      CHECK(cell.mean_error == doctest::Approx(0.0));
      CHECK(cell.sd_error == doctest::Approx(0.0));
    }
  }

  SUBCASE("same seed reproduces the cv table exactly") {
    Eigen::MatrixXd raw = random_matrix(40, 3, 71);
    auto [X, st] = standardize(raw, names_for(3));
    std::mt19937_64 gen(72);
    std::normal_distribution<double> noise(0.0, 0.3);
    Eigen::VectorXd y = X.col(0);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise(gen);
    const ScoringModel a = cross_validate(X, y, {0.0, 1.0}, {}, 4, 99);
    const ScoringModel b = cross_validate(X, y, {0.0, 1.0}, {}, 4, 99);
    REQUIRE(a.cv_table.size() == b.cv_table.size());
    for (std::size_t i = 0; i < a.cv_table.size(); ++i) {
      CHECK(a.cv_table[i].mean_error == b.cv_table[i].mean_error);
      CHECK(a.cv_table[i].sd_error == b.cv_table[i].sd_error);
    }
    CHECK(a.lambda == b.lambda);
    CHECK(a.alpha == b.alpha);
  }

  SUBCASE("fold count validation") {
    Eigen::MatrixXd X = random_matrix(6, 2, 81);
    Eigen::VectorXd y = X.col(0);
    CHECK_THROWS_AS(cross_validate(X, y, {0.5}, {}, 7, 1), ValidationError);
    CHECK_THROWS_AS(cross_validate(X, y, {0.5}, {}, 1, 1), ValidationError);
  }
}

TEST_CASE("score") {
  PredictorMatrix matrix;
  matrix.landmark_ids = {1, 2, 3};
  matrix.column_names = {"a", "b"};
  matrix.values.resize(3, 2);
  matrix.values << 1, 10, 2, 20, 3, 30;

  ScoringModel model;
  model.standardization.column_names = {"a"};
  model.standardization.mean = Eigen::VectorXd::Constant(1, 2.0);
  model.standardization.std_dev = Eigen::VectorXd::Constant(1, 1.0);
  model.intercept = 2.5;
  model.coefficients = Eigen::VectorXd::Zero(1);

  SUBCASE("zero coefficients give the intercept") {
    const Eigen::VectorXd s = score(model, matrix);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(s(i) == doctest::Approx(2.5));
  }
  SUBCASE("one-hot coefficient reads the standardized predictor") {
    model.intercept = 0.0;
    model.coefficients(0) = 1.0;
    const Eigen::VectorXd s = score(model, matrix);
    CHECK(s(0) == doctest::Approx(-1.0));
    CHECK(s(1) == doctest::Approx(0.0));
    CHECK(s(2) == doctest::Approx(1.0));
  }
  SUBCASE("missing column is an error") {
    model.standardization.column_names = {"zzz"};
    CHECK_THROWS_AS(score(model, matrix), ValidationError);
  }
}

TEST_CASE("diagnostics") {
  const Eigen::Index n = 100;
  Eigen::MatrixXd raw = random_matrix(n, 3, 91);
  auto [X, st] = standardize(raw, names_for(3));
  const Eigen::VectorXd y = X.col(0);  // exactly the first column

  const PredictorDiagnostics diag = predictor_diagnostics(X, y, st.column_names, 5, 5);
  CHECK(diag.r2(0) == doctest::Approx(1.0));
  CHECK(diag.r2(1) < 0.2);
  // Pure-noise columns are zeroed by the lasso at the selected lambda.
  CHECK(diag.lasso_coef(1) == 0.0);
  CHECK(diag.lasso_coef(2) == 0.0);
  CHECK(diag.lasso_zeroed[1]);
  CHECK(diag.lasso_zeroed[2]);
  CHECK_FALSE(diag.lasso_zeroed[0]);
  CHECK_FALSE(diag.ridge_near_zero[0]);
  CHECK(diag.lasso_coef_path.rows() ==
        static_cast<Eigen::Index>(diag.lasso_lambda_path.size()));
}

TEST_CASE("model file round trip") {
  TempDir dir("model_rt");
  Eigen::MatrixXd raw = random_matrix(50, 3, 101);
  std::mt19937_64 gen(102);
  std::normal_distribution<double> noise(0.0, 0.25);
  Eigen::VectorXd y = raw.col(0) * 0.8 - raw.col(2) * 0.3;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.2 + noise(gen);

  PredictorMatrix matrix;
  matrix.landmark_ids.resize(50);
  std::iota(matrix.landmark_ids.begin(), matrix.landmark_ids.end(), 1);
  matrix.column_names = {"n_views", "spanned_angle", "cr_times_views"};
  matrix.values = raw;

  FitOptions options;
  options.alphas = {0.0, 0.5, 1.0};
  options.cv_folds = 5;
  options.seed = 6;
  options.include_columns = {"n_views", "spanned_angle"};
  const ScoringModel model = fit_model(matrix, y, options);

  const auto path = dir.path() / "model.txt";
  save_model(model, path);
  const ScoringModel loaded = load_model(path);

  CHECK(loaded.alpha == model.alpha);
  CHECK(loaded.lambda == model.lambda);
  CHECK(loaded.intercept == model.intercept);
  CHECK(loaded.coefficients == model.coefficients);
  CHECK(loaded.standardization.column_names == model.standardization.column_names);
  CHECK(loaded.standardization.mean == model.standardization.mean);
  CHECK(loaded.standardization.std_dev == model.standardization.std_dev);
  REQUIRE(loaded.cv_table.size() == model.cv_table.size());
  CHECK(loaded.cv_table.back().mean_error == model.cv_table.back().mean_error);

  const Eigen::VectorXd s1 = score(model, matrix);
  const Eigen::VectorXd s2 = score(loaded, matrix);
  CHECK(s1 == s2);
}

TEST_CASE("score ranking is invariant to affine predictor rescaling") {
  WorldConfig config;
  config.n_persistent = 30;
  config.n_ephemeral = 15;
  config.n_sessions = 6;
  config.loop_length = 200;
  config.area_width = 120;
  config.area_height = 80;
  config.seed = 1234;
  World world = generate_world(config);
  std::vector<SessionLog> sessions;
  for (int i = 0; i < config.n_sessions; ++i) {
    sessions.push_back(simulate_session(world, config, i));
  }
  PredictorMatrix matrix = build_matrix(world.map, sessions);
  const Eigen::VectorXd labels = empirical_probability(world.map, sessions);

  FitOptions options;
  options.alphas = {0.0, 0.5, 1.0};
  options.cv_folds = 5;
  options.seed = 11;
  const ScoringModel model = fit_model(matrix, labels, options);
  const Eigen::VectorXd base = score(model, matrix);

  PredictorMatrix rescaled = matrix;
  const auto col = static_cast<Eigen::Index>(matrix.column_index("track_length"));
  rescaled.values.col(col) = 2.5 * matrix.values.col(col).array() - 7.0;
  const ScoringModel model2 = fit_model(rescaled, labels, options);
  const Eigen::VectorXd other = score(model2, rescaled);

  for (Eigen::Index i = 0; i < base.size(); ++i) {
    for (Eigen::Index j = 0; j < base.size(); ++j) {
      if (std::abs(base(i) - base(j)) < 1e-9) continue;  // ties
      CHECK(((base(i) < base(j)) == (other(i) < other(j))));
    }
  }
}
