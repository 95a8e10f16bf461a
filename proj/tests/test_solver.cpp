#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <loadcast/design.hpp>
#include <loadcast/lasso.hpp>
#include <loadcast/ols.hpp>
#include <loadcast/rng.hpp>

using namespace loadcast;

namespace {

ConsumptionSeries ar_series(std::size_t n, std::uint64_t seed, double noise_sd = 1.0) {
    Rng rng(seed);
    ConsumptionSeries s;
    s.user_id = "t";
    s.start = 0;
    s.values.resize(n);
    double prev1 = 0.0, prev2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double y = 0.4 * prev1 - 0.2 * prev2 + noise_sd * rng.normal();
        s.values[t] = y;
        prev2 = prev1;
        prev1 = y;
    }
    s.gap_mask.assign(n, false);
    return s;
}

RegressionProblem random_problem(std::size_t rows, int lags, std::uint64_t seed) {
    ConsumptionSeries s = ar_series(rows + static_cast<std::size_t>(lags), seed);
    PreprocessConfig cfg;
    cfg.max_lag = lags;
    return standardize_columns(build_lag_matrix(s, cfg, 0, s.size()));
}

}  // namespace

TEST_CASE("soft threshold kernel", "[lasso]") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(soft_threshold(0.0, 0.0) == 0.0);
}

TEST_CASE("least squares on exact data", "[ols]") {
    RegressionProblem p;
    p.has_intercept = false;
    p.design.resize(4, 1);
    p.design << 1, 2, 3, 4;
    p.response = 2.0 * p.design.col(0);
    p.column_labels = {{1, ""}};
    p.column_scales = VectorXd::Ones(1);
    OlsFit fit = fit_ols(p);
    CHECK(fit.coefficients(0) == Catch::Approx(2.0));
    CHECK(fit.rss == Catch::Approx(0.0).margin(1e-18));
    CHECK(fit.dof == 3);
}

TEST_CASE("least squares with response orthogonal to the design", "[ols]") {
    RegressionProblem p;
    p.has_intercept = false;
    p.design = MatrixXd::Zero(4, 2);
    p.design(0, 0) = 1.0;
    p.design(1, 1) = 1.0;
    p.response = VectorXd::Zero(4);
    p.response(2) = 3.0;
    p.column_labels = {{1, ""}, {2, ""}};
    p.column_scales = VectorXd::Ones(2);
    OlsFit fit = fit_ols(p);
    CHECK(std::abs(fit.coefficients(0)) < 1e-12);
    CHECK(std::abs(fit.coefficients(1)) < 1e-12);
    CHECK(fit.rss == Catch::Approx(9.0));
}

TEST_CASE("least squares recovers a noiseless recursion", "[ols]") {
    ConsumptionSeries s;
    s.user_id = "t";
    s.start = 0;
    s.values = {0.0};
    for (int t = 0; t < 12; ++t) s.values.push_back(0.5 * s.values.back() + 1.0);
    s.gap_mask.assign(s.values.size(), false);
    PreprocessConfig cfg;
    cfg.max_lag = 1;
    RegressionProblem p = build_lag_matrix(s, cfg, 0, s.size());
    OlsFit fit = fit_ols(p);
    REQUIRE(fit.coefficients.size() == 2);
    CHECK(fit.coefficients(0) == Catch::Approx(1.0).margin(1e-8));   // intercept
    CHECK(fit.coefficients(1) == Catch::Approx(0.5).margin(1e-8));   // slope

    // one step ahead from last value 8
    VectorXd feat(1);
    feat << 8.0;
    CHECK(predict_linear(fit, feat, true) == Catch::Approx(5.0).margin(1e-8));
}

TEST_CASE("least squares residual is orthogonal to the design", "[ols]") {
    RegressionProblem p = random_problem(40, 5, 21);
    OlsFit fit = fit_ols(p);
    VectorXd r = p.response - p.design * fit.coefficients;
    CHECK((p.design.transpose() * r).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("least squares failure modes", "[ols]") {
    RegressionProblem p = random_problem(40, 5, 22);
    RegressionProblem tall = p;
    tall.design.conservativeResize(4, Eigen::NoChange);
    tall.response.conservativeResize(4);
    CHECK_THROWS_AS(fit_ols(tall), Underdetermined);

    RegressionProblem dup = p;
    dup.design.col(2) = dup.design.col(1);
    CHECK_THROWS_AS(fit_ols(dup), RankDeficient);
}

TEST_CASE("zero penalty reproduces least squares", "[lasso]") {
    RegressionProblem p = random_problem(60, 4, 31);
    OlsFit ols = fit_ols(p);
    LassoFit lf = fit_lasso_cd(p, 0.0);
    CHECK(lf.converged);
    CHECK(lf.intercept == Catch::Approx(ols.coefficients(0)).margin(1e-6));
    for (int j = 0; j < 4; ++j)
        CHECK(lf.coefficients(j) == Catch::Approx(ols.coefficients(j + 1)).margin(1e-6));
}

TEST_CASE("full shrinkage above the critical penalty", "[lasso]") {
    RegressionProblem p = random_problem(60, 4, 32);
    double lmax = lambda_max(p);
    LassoFit lf = fit_lasso_cd(p, lmax * 1.0001);
    CHECK(lf.active_set.empty());
    CHECK(lf.coefficients.isZero(0.0));
    CHECK(lf.intercept == Catch::Approx(p.response.mean()).margin(1e-12));

    // the critical penalty is tight: slightly below, something enters
    LassoFit just_below = fit_lasso_cd(p, lmax * 0.999);
    CHECK_FALSE(just_below.active_set.empty());
}

TEST_CASE("orthonormal design has a closed form", "[lasso]") {
    Rng rng(33);
    MatrixXd a(30, 4);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(a);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(30, 4);

    RegressionProblem p;
    p.has_intercept = false;
    p.design = q;
    p.response.resize(30);
    for (Eigen::Index i = 0; i < 30; ++i) p.response(i) = rng.normal();
    p.column_labels = {{1, ""}, {2, ""}, {3, ""}, {4, ""}};
    p.column_scales = VectorXd::Ones(4);

    VectorXd corr = q.transpose() * p.response;
    double lam = 0.6 * corr.cwiseAbs().maxCoeff();
    LassoFit lf = fit_lasso_cd(p, lam);
    for (int j = 0; j < 4; ++j)
        CHECK(lf.coefficients(j) == Catch::Approx(soft_threshold(corr(j), lam)).margin(1e-9));
}

TEST_CASE("stationarity certificate holds on random problems", "[lasso]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RegressionProblem p = random_problem(50 + 7 * seed % 90, 6, 100 + seed);
        double lmax = lambda_max(p);
        for (double frac : {0.5, 0.1, 0.01}) {
            LassoFit lf = fit_lasso_cd(p, frac * lmax);
            CHECK(lf.converged);
            CHECK(kkt_violation(p, lf) <= 1e-6);
        }
    }
}

TEST_CASE("objective never increases across sweeps", "[lasso]") {
    RegressionProblem p = random_problem(80, 6, 41);
    double lam = 0.05 * lambda_max(p);
    double prev = std::numeric_limits<double>::infinity();
    for (int sweeps = 1; sweeps <= 12; ++sweeps) {
        LassoFit lf = fit_lasso_cd(p, lam, 1e-7, sweeps);
        CHECK(lf.objective <= prev + 1e-12);
        prev = lf.objective;
    }
}

TEST_CASE("iteration cap is reported honestly", "[lasso]") {
    RegressionProblem p = random_problem(80, 6, 42);
    LassoFit lf = fit_lasso_cd(p, 0.001 * lambda_max(p), 1e-7, 1);
    CHECK_FALSE(lf.converged);
    CHECK(lf.iterations == 1);
    // the capped iterate is still a valid point with a finite objective
    CHECK(std::isfinite(lf.objective));
}

TEST_CASE("warm starts converge to the same solution", "[lasso]") {
    RegressionProblem p = random_problem(70, 5, 43);
    double lam = 0.1 * lambda_max(p);
    LassoFit cold = fit_lasso_cd(p, lam);
    VectorXd from = VectorXd::Constant(5, 0.3);
    LassoFit warm = fit_lasso_cd(p, lam, 1e-7, 10000, &from);
    for (int j = 0; j < 5; ++j)
        CHECK(warm.coefficients(j) == Catch::Approx(cold.coefficients(j)).margin(1e-6));
}

TEST_CASE("sparsity grows as the penalty shrinks", "[lasso]") {
    RegressionProblem p = random_problem(90, 8, 44);
    auto grid = default_lambda_grid(lambda_max(p), 30);
    std::size_t prev = 0;
    const VectorXd* warm = nullptr;
    VectorXd last;
    for (double lam : grid) {
        LassoFit lf = fit_lasso_cd(p, lam, 1e-7, 10000, warm);
        CHECK(lf.active_set.size() + 1 >= prev);  // allow single-swap jitter at ties
        prev = lf.active_set.size();
        last = lf.coefficients;
        warm = &last;
    }
}

TEST_CASE("penalty grid shape", "[lasso]") {
    auto grid = default_lambda_grid(10.0);
    REQUIRE(grid.size() == 100);
    CHECK(grid.front() == Catch::Approx(10.0));
    CHECK(grid.back() == Catch::Approx(10.0 * 1e-4));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);

    auto single = default_lambda_grid(5.0, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == 5.0);
}

TEST_CASE("cross validation prefers heavy shrinkage on pure noise", "[cv]") {
    int in_top_quartile = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(900 + seed);
        RegressionProblem p = random_problem(100, 6, 500 + seed);
        for (Eigen::Index i = 0; i < p.response.size(); ++i) p.response(i) = rng.normal();
        auto grid = default_lambda_grid(lambda_max(p), 40);
        CvResult cv = cross_validate_lambda(p, 5, grid);
        if (cv.best_lambda >= grid[grid.size() / 4]) ++in_top_quartile;
    }
    CHECK(in_top_quartile >= 18);
}

TEST_CASE("cross validation interpolates a noiseless linear response", "[cv]") {
    RegressionProblem p = random_problem(80, 4, 45);
    VectorXd beta(4);
    beta << 0.8, -0.5, 0.3, 0.0;
    p.response = p.design.rightCols(4) * beta;
    p.response.array() += 2.0;
    auto grid = default_lambda_grid(lambda_max(p), 40);
    CvResult cv = cross_validate_lambda(p, 5, grid);
    CHECK(cv.best_lambda <= grid[30]);
    CHECK(cv.cv_error.back() < 1e-6);

    auto one = cross_validate_lambda(p, 5, {0.37});
    CHECK(one.best_lambda == 0.37);
}

TEST_CASE("cross validation input validation", "[cv]") {
    RegressionProblem p = random_problem(12, 2, 46);
    CHECK_THROWS_AS(cross_validate_lambda(p, 10, {1.0, 0.5}), TooFewRows);
    RegressionProblem q = random_problem(60, 2, 47);
    CHECK_THROWS_AS(cross_validate_lambda(q, 5, {0.5, 1.0}), SchemaError);  // ascending grid
}

TEST_CASE("linear prediction from a sparse fit", "[lasso]") {
    LassoFit fit;
    fit.intercept = 1.5;
    fit.coefficients = VectorXd::Zero(3);
    VectorXd feat(3);
    feat << 9, 8, 7;
    VectorXd scales = VectorXd::Ones(3);
    CHECK(predict_linear(fit, feat, scales) == 1.5);

    fit.coefficients(0) = 1.0;
    fit.intercept = 0.0;
    CHECK(predict_linear(fit, feat, scales) == 9.0);

    // scales divide the raw features back onto the training scale
    scales(0) = 2.0;
    CHECK(predict_linear(fit, feat, scales) == 4.5);

    VectorXd wrong(2);
    CHECK_THROWS_AS(predict_linear(fit, wrong, scales), DimensionMismatch);
}
