#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <loadcast/metrics.hpp>

using namespace loadcast;

TEST_CASE("exact metric arithmetic", "[metrics]") {
    MetricSet perfect = compute_metrics({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, 2.0);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.mape == 0.0);
    CHECK(perfect.nrmsd == 0.0);
    CHECK(perfect.n == 3);

    MetricSet m = compute_metrics({2.0, 4.0}, {1.0, 5.0}, 3.0);
    CHECK(m.mae == Catch::Approx(1.0));
    CHECK(m.mse == Catch::Approx(1.0));
    CHECK(m.mape == Catch::Approx(0.375));

    MetricSet worst = compute_metrics({2.0}, {0.0}, 2.0);
    CHECK(worst.nrmsd == Catch::Approx(1.0));
    CHECK(worst.mape == Catch::Approx(1.0));
}

TEST_CASE("metric input validation", "[metrics]") {
    CHECK_THROWS_AS(compute_metrics({1.0}, {1.0, 2.0}, 1.0), LengthMismatch);
    CHECK_THROWS_AS(compute_metrics({}, {}, 1.0), EmptyInput);
    CHECK_THROWS_AS(compute_metrics({1.0}, {1.0}, 0.0), ZeroTrainMean);
}

TEST_CASE("zero actuals are excluded from the percentage error", "[metrics]") {
    MetricSet m = compute_metrics({0.0, 2.0, 0.0, 4.0}, {1.0, 1.0, 1.0, 5.0}, 3.0);
    CHECK(m.mape_skipped == 2);
    CHECK(m.mape == Catch::Approx(0.375));  // only the two nonzero actuals count
    CHECK(m.mae == Catch::Approx(1.0));     // absolute errors keep every point
}

TEST_CASE("scale behaviour of the metrics", "[metrics]") {
    std::vector<double> y{2.0, 5.0, 3.0}, yhat{2.5, 4.0, 3.3};
    MetricSet base = compute_metrics(y, yhat, 4.0);
    std::vector<double> y2 = y, yhat2 = yhat;
    for (auto& v : y2) v *= 7.0;
    for (auto& v : yhat2) v *= 7.0;
    MetricSet scaled = compute_metrics(y2, yhat2, 28.0);
    CHECK(scaled.mape == Catch::Approx(base.mape));
    CHECK(scaled.nrmsd == Catch::Approx(base.nrmsd));
    CHECK(scaled.mae == Catch::Approx(7.0 * base.mae));
    CHECK(std::sqrt(scaled.mse) == Catch::Approx(7.0 * std::sqrt(base.mse)));
}

TEST_CASE("median aggregation", "[metrics]") {
    CHECK(aggregate({1.0, 2.0, 3.0}, AggregateMode::Median) == 2.0);
    CHECK(aggregate({1.0, 2.0, 100.0}, AggregateMode::Median) == 2.0);
    CHECK(aggregate({3.0, 1.0}, AggregateMode::Median) == 2.0);
    CHECK(aggregate({5.0}, AggregateMode::Median) == 5.0);
    CHECK_THROWS_AS(aggregate({}, AggregateMode::Median), EmptyInput);
}

TEST_CASE("trimmed mean aggregation", "[metrics]") {
    std::vector<double> v(200, 1.0);
    v.push_back(1e6);
    v.push_back(-1e6);
    CHECK(aggregate(v, AggregateMode::TrimmedMean) == Catch::Approx(1.0));

    // below three elements nothing can be trimmed
    CHECK(aggregate({1.0, 3.0}, AggregateMode::TrimmedMean) == Catch::Approx(2.0));
}

TEST_CASE("information criteria", "[metrics]") {
    InformationCriteria ic = aic_bic(1.0, 100, 2);
    CHECK(ic.aic == Catch::Approx(4.0));
    CHECK(aic_bic(100.0, 100, 0).bic == Catch::Approx(0.0));

    double delta = aic_bic(50.0, 1000, 5).bic - aic_bic(50.0, 1000, 3).bic;
    CHECK(delta == Catch::Approx(2.0 * std::log(1000.0)));

    CHECK_THROWS_AS(aic_bic(0.0, 10, 1), NonPositiveRss);
    CHECK_THROWS_AS(aic_bic(-1.0, 10, 1), NonPositiveRss);
}
