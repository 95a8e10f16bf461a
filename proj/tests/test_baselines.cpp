#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <loadcast/baselines.hpp>
#include <loadcast/rng.hpp>

using namespace loadcast;

namespace {

ConsumptionSeries make_series(std::vector<double> values) {
    ConsumptionSeries s;
    s.user_id = "t";
    s.start = 0;
    s.values = std::move(values);
    s.gap_mask.assign(s.values.size(), false);
    return s;
}

ConsumptionSeries periodic_series(std::size_t n, int period) {
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = 3.0 + std::sin(2.0 * M_PI * (t % period) / period);
    return make_series(std::move(v));
}

}  // namespace

TEST_CASE("ten day same hour averaging", "[baselines]") {
    ConsumptionSeries daily = periodic_series(300, 24);
    CHECK(predict_averaging10(daily, 250) == Catch::Approx(daily.values[250]).margin(1e-12));

    ConsumptionSeries flat = make_series(std::vector<double>(260, 4.2));
    CHECK(predict_averaging10(flat, 252) == Catch::Approx(4.2));

    std::vector<double> v(264, 0.0);
    for (int k = 1; k <= 10; ++k) v[260 - 24 * k] = static_cast<double>(k);
    ConsumptionSeries ramp = make_series(std::move(v));
    CHECK(predict_averaging10(ramp, 260) == Catch::Approx(5.5));

    CHECK_THROWS_AS(predict_averaging10(daily, 239), InsufficientHistory);
    CHECK_NOTHROW(predict_averaging10(daily, 240));
}

TEST_CASE("last week lookup", "[baselines]") {
    ConsumptionSeries weekly = periodic_series(400, 168);
    CHECK(predict_last_week(weekly, 350) == Catch::Approx(weekly.values[350]).margin(1e-12));

    ConsumptionSeries flat = make_series(std::vector<double>(200, 1.1));
    CHECK(predict_last_week(flat, 180) == 1.1);

    std::vector<double> idx(300);
    for (std::size_t t = 0; t < 300; ++t) idx[t] = static_cast<double>(t);
    ConsumptionSeries ramp = make_series(std::move(idx));
    CHECK(predict_last_week(ramp, 250) == 250.0 - 168.0);
    CHECK(predict_last_week(ramp, 250, true) == 250.0 - 120.0);  // weekday-contiguous offset

    CHECK_THROWS_AS(predict_last_week(ramp, 167), InsufficientHistory);
    CHECK_THROWS_AS(predict_last_week(ramp, 119, true), InsufficientHistory);
}

TEST_CASE("first order autoregression on a noiseless recursion", "[baselines]") {
    ConsumptionSeries s = make_series({0.0});
    for (int t = 0; t < 12; ++t) s.values.push_back(0.5 * s.values.back() + 1.0);
    s.gap_mask.assign(s.values.size(), false);
    BaselineModel m = fit_ar1(s, 0, s.size());
    CHECK(m.kind == BaselineKind::Ar1);
    CHECK_FALSE(m.degenerate);
    CHECK(m.intercept == Catch::Approx(1.0).margin(1e-8));
    CHECK(m.slope == Catch::Approx(0.5).margin(1e-8));
    CHECK(predict_ar1(m, 8.0) == Catch::Approx(5.0).margin(1e-7));
}

TEST_CASE("first order autoregression on white noise", "[baselines]") {
    int small = 0;
    const int trials = 30;
    const std::size_t n = 400;
    for (std::uint64_t seed = 1; seed <= trials; ++seed) {
        Rng rng(600 + seed);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.normal();
        BaselineModel m = fit_ar1(make_series(std::move(v)), 0, n);
        if (std::abs(m.slope) < 3.0 / std::sqrt(static_cast<double>(n))) ++small;
    }
    CHECK(small >= 28);
}

TEST_CASE("degenerate flat window", "[baselines]") {
    ConsumptionSeries s = make_series(std::vector<double>(50, 2.5));
    BaselineModel m = fit_ar1(s, 0, 50);
    CHECK(m.degenerate);
    CHECK(m.slope == 0.0);
    CHECK(predict_ar1(m, 2.5) == Catch::Approx(2.5));
    CHECK_THROWS_AS(fit_ar1(s, 0, 2), WindowTooShort);
}

TEST_CASE("smoothing with full weight tracks the last observation", "[baselines]") {
    Rng rng(9);
    ConsumptionSeries s = make_series([&] {
        std::vector<double> v(60);
        for (auto& x : v) x = rng.normal();
        return v;
    }());
    double level = 0.0;
    detail::smoothing_sse(s, 0, 60, 1.0, &level);
    CHECK(level == Catch::Approx(s.values[59]));
}

TEST_CASE("smoothing a constant series", "[baselines]") {
    ConsumptionSeries s = make_series(std::vector<double>(40, 6.25));
    BaselineModel m = fit_exp_smoothing(s, 0, 40);
    CHECK(m.kind == BaselineKind::ExpSmoothing);
    CHECK(predict_exp_smoothing(m) == Catch::Approx(6.25));
    CHECK(m.weight >= 0.0);
    CHECK(m.weight <= 1.0);
}

TEST_CASE("smoothing noise around a level", "[baselines]") {
    int close = 0;
    const int trials = 30;
    for (std::uint64_t seed = 1; seed <= trials; ++seed) {
        Rng rng(700 + seed);
        std::vector<double> v(240);
        for (auto& x : v) x = 5.0 + rng.normal();
        ConsumptionSeries s = make_series(std::move(v));
        BaselineModel m = fit_exp_smoothing(s, 0, 240);
        if (std::abs(predict_exp_smoothing(m) - 5.0) < 3.0 / std::sqrt(24.0)) ++close;
        CHECK(m.weight < 0.5);  // little to chase in pure noise
    }
    CHECK(close >= 26);
}

TEST_CASE("smoothing prediction stays inside the window range", "[baselines]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(800 + seed);
        std::vector<double> v(100);
        for (auto& x : v) x = rng.normal() * (1.0 + 0.1 * (seed % 5));
        ConsumptionSeries s = make_series(std::move(v));
        BaselineModel m = fit_exp_smoothing(s, 0, 100);
        double lo = *std::min_element(s.values.begin(), s.values.end());
        double hi = *std::max_element(s.values.begin(), s.values.end());
        double pred = predict_exp_smoothing(m);
        CHECK(pred >= lo - 1e-12);
        CHECK(pred <= hi + 1e-12);
    }
}
