#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlmc/sde_core.hpp"

namespace testing_support {

inline mlmc::ModelSpec gbm(double r = 0.05, double sigma = 0.2, double x0 = 1.0) {
    return mlmc::make_model("gbm", {{"r", r}, {"sigma", sigma}, {"x0", x0}});
}

// dX = a X dt + b dW
inline mlmc::ModelSpec additive(double a, double b, double x0) {
    mlmc::ModelSpec m;
    m.label = "additive";
    m.x0 = {x0};
    m.correlation = {1.0};
    m.drift = [a](std::span<const double> x, std::span<double> out) { out[0] = a * x[0]; };
    m.diffusion = [b](std::span<const double>, std::span<double> out) { out[0] = b; };
    m.milstein_tensor = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    mlmc::finalize_correlation(m);
    return m;
}

struct Moments {
    double mean = 0, var = 0;
    long long n = 0;
    double se() const { return std::sqrt(var / static_cast<double>(n)); }
};

inline Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = static_cast<long long>(xs.size());
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(m.n);
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(m.n - 1);
    return m;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
    }
    return d;
}

// Critical value at level alpha for sample sizes n, m (asymptotic).
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2));
    return c * std::sqrt(double(n + m) / double(n * m));
}

}  // namespace testing_support
