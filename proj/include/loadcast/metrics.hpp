#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "loadcast/errors.hpp"

namespace loadcast {

struct MetricSet {
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;
    double nrmsd = 0.0;
    std::size_t n = 0;
    std::size_t mape_skipped = 0;  // test points with |actual| below 1e-9
    double ybar_train = 0.0;
};

/**
 * Standard error metrics of a forecast against actuals. MAPE excludes
 * points whose actual is within 1e-9 of zero and reports how many were
 * excluded; NRMSD is the root mean squared error divided by the training
 * mean, which must be nonzero.
 */
inline MetricSet compute_metrics(const std::vector<double>& actual,
                                 const std::vector<double>& predicted, double ybar_train) {
    if (actual.size() != predicted.size())
        throw LengthMismatch(std::to_string(actual.size()) + " actuals vs " +
                             std::to_string(predicted.size()) + " predictions");
    if (actual.empty()) throw EmptyInput("no test points");
    if (std::abs(ybar_train) < 1e-12) throw ZeroTrainMean("training mean is zero");

    MetricSet m;
    m.n = actual.size();
    m.ybar_train = ybar_train;
    double se = 0.0, ae = 0.0, ape = 0.0;
    std::size_t ape_n = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        double err = actual[i] - predicted[i];
        se += err * err;
        ae += std::abs(err);
        if (std::abs(actual[i]) >= 1e-9) {
            ape += std::abs(err / actual[i]);
            ++ape_n;
        }
    }
    double n = static_cast<double>(m.n);
    m.mse = se / n;
    m.mae = ae / n;
    m.mape_skipped = m.n - ape_n;
    m.mape = ape_n > 0 ? ape / static_cast<double>(ape_n) : 0.0;
    m.nrmsd = std::sqrt(m.mse) / std::abs(ybar_train);
    return m;
}

enum class AggregateMode { Median, TrimmedMean };

/**
 * Robust location summary. Median, or a 1%-trimmed mean that always removes
 * at least one value from each end once there are three or more values.
 */
inline double aggregate(const std::vector<double>& values, AggregateMode mode) {
    if (values.empty()) throw EmptyInput("nothing to aggregate");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    if (mode == AggregateMode::Median) {
        std::size_t mid = v.size() / 2;
        if (v.size() % 2 == 1) return v[mid];
        return 0.5 * (v[mid - 1] + v[mid]);
    }
    std::size_t cut = 0;
    if (v.size() >= 3)
        cut = std::max<std::size_t>(1, static_cast<std::size_t>(
                                           std::floor(0.01 * static_cast<double>(v.size()))));
    double sum = 0.0;
    for (std::size_t i = cut; i < v.size() - cut; ++i) sum += v[i];
    return sum / static_cast<double>(v.size() - 2 * cut);
}

struct InformationCriteria {
    double aic = 0.0;  // up to the shared additive constant
    double bic = 0.0;
};

/// AIC = 2k + n*ln(RSS) up to a constant shared by models on the same data;
/// BIC = n*ln(RSS/n) + k*ln(n). Only differences are meaningful.
inline InformationCriteria aic_bic(double rss, std::size_t n, std::size_t k) {
    if (!(rss > 0.0)) throw NonPositiveRss("rss = " + std::to_string(rss));
    if (n < 1) throw EmptyInput("n must be at least 1");
    double nn = static_cast<double>(n);
    double kk = static_cast<double>(k);
    InformationCriteria ic;
    ic.aic = 2.0 * kk + nn * std::log(rss);
    ic.bic = nn * std::log(rss / nn) + kk * std::log(nn);
    return ic;
}

}  // namespace loadcast
