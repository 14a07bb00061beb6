#pragma once

// Slow, direct reference implementations used to check the library.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace l3det::test {

inline std::vector<double> brute_ranks(std::span<const double> v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0;
        double equal = 0;
        for (double x : v) {
            less += x < v[i];
            equal += x == v[i];
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

inline double brute_pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0;
    double my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0;
    double sxx = 0;
    double syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double brute_spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = brute_ranks(x);
    const auto ry = brute_ranks(y);
    return brute_pearson(rx, ry);
}

inline double brute_kendall_b(std::span<const double> x, std::span<const double> y) {
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t ties_x = 0;
    std::int64_t ties_y = 0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++pairs;
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0) ++ties_x;
            if (dy == 0) ++ties_y;
            if (dx * dy > 0) ++concordant;
            if (dx * dy < 0) ++discordant;
        }
    }
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(pairs - ties_x) * static_cast<double>(pairs - ties_y));
}

inline double brute_cliffs_delta(std::span<const double> a, std::span<const double> b) {
    std::int64_t more = 0;
    std::int64_t less = 0;
    for (double x : a) {
        for (double y : b) {
            more += x > y;
            less += x < y;
        }
    }
    return static_cast<double>(more - less) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

struct ReferenceMetrics {
    double accuracy, precision, recall, f1, fpr, fnr;
};

inline ReferenceMetrics reference_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
    auto ratio = [](double num, double den) { return den == 0 ? 0.0 : num / den; };
    const double p = ratio(tp, tp + fp);
    const double r = ratio(tp, tp + fn);
    return ReferenceMetrics{ratio(tp + tn, tp + fp + tn + fn),
                            p,
                            r,
                            ratio(2.0 * tp, 2.0 * tp + fp + fn),
                            ratio(fp, fp + tn),
                            ratio(fn, fn + tp)};
}

}  // namespace l3det::test
