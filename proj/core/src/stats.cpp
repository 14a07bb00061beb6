#include "l3det/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "l3det/error.hpp"
#include "l3det/rng.hpp"

namespace l3det {

namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::Evaluation, "correlation inputs differ in length");
    if (xs.empty()) throw Error(ErrorKind::Evaluation, "correlation of empty inputs");
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::UndefinedCorrelation, "zero rank variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Pairs tied within each run of equal values in an already sorted sequence.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
    std::uint64_t pairs = 0;
    while (first != last) {
        auto run = first;
        std::uint64_t t = 0;
        while (run != last && eq(*run, *first)) {
            ++run;
            ++t;
        }
        pairs += t * (t - 1) / 2;
        first = run;
    }
    return pairs;
}

// Merge sort counting pairs i < j with v[i] > v[j].
std::uint64_t sort_counting_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                       std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = sort_counting_inversions(v, buf, lo, mid) + sort_counting_inversions(v, buf, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
            buf[k++] = v[i++];
        } else {
            inv += mid - i;
            buf[k++] = v[j++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace

double nearest_rank(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorKind::Evaluation, "percentile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Evaluation, "percentile outside [0, 1]");
    const auto n = static_cast<double>(sorted.size());
    // Guard against p * n landing a hair above an integer.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double mean(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::Evaluation, "mean of an empty sample");
    const double x0 = values.front();
    double acc = 0.0;
    for (double v : values) acc += v - x0;
    return x0 + acc / static_cast<double>(values.size());
}

LatencyStats latency_stats(std::span<const Millis> samples, Millis bound) {
    if (samples.empty()) throw Error(ErrorKind::Evaluation, "latency statistics of an empty sample");
    std::vector<double> ms;
    ms.reserve(samples.size());
    for (const auto& s : samples) ms.push_back(s.count());
    std::sort(ms.begin(), ms.end());

    LatencyStats st;
    st.bound = bound;
    st.mean = Millis{mean(ms)};
    st.median = Millis{nearest_rank(ms, 0.50)};
    st.p90 = Millis{nearest_rank(ms, 0.90)};
    st.p95 = Millis{nearest_rank(ms, 0.95)};
    st.p99 = Millis{nearest_rank(ms, 0.99)};
    st.min = Millis{ms.front()};
    st.max = Millis{ms.back()};
    const auto under = std::lower_bound(ms.begin(), ms.end(), bound.count()) - ms.begin();
    st.frac_under_bound = static_cast<double>(under) / static_cast<double>(ms.size());
    return st;
}

ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level,
                                std::uint64_t seed) {
    if (values.empty()) throw Error(ErrorKind::Evaluation, "bootstrap of an empty sample");
    if (resamples == 0) throw Error(ErrorKind::Evaluation, "bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Evaluation, "confidence level outside (0, 1)");

    Rng rng(seed);
    const std::size_t n = values.size();
    std::vector<double> means(resamples);
    std::vector<double> draw(n);
    for (auto& m : means) {
        for (auto& d : draw) d = values[uniform_below(rng, n)];
        m = mean(draw);
    }
    std::sort(means.begin(), means.end());
    return {nearest_rank(means, (1.0 - level) / 2.0), nearest_rank(means, (1.0 + level) / 2.0)};
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys);
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys);
    const std::size_t n = xs.size();
    std::vector<std::pair<double, double>> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {xs[i], ys[i]};
    std::sort(pts.begin(), pts.end());

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t ties_x =
        tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
    const std::uint64_t ties_xy = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; });

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = pts[i].second;
    std::vector<double> buf(n);
    const std::uint64_t swaps = sort_counting_inversions(y, buf, 0, n);
    const std::uint64_t ties_y = tied_pairs(y.begin(), y.end(), [](double a, double b) { return a == b; });

    const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
    if (denom == 0.0) throw Error(ErrorKind::UndefinedCorrelation, "zero rank variance");
    // Concordant minus discordant over pairs untied in both coordinates.
    const double s = static_cast<double>(n0) - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                     static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
    return std::clamp(s / denom, -1.0, 1.0);
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::Evaluation, "Cliff's delta of an empty group");
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sb.begin(), sb.end());
    std::int64_t net = 0;
    for (double x : a) {
        const auto below = std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
        const auto above = sb.end() - std::upper_bound(sb.begin(), sb.end(), x);
        net += below - above;
    }
    return static_cast<double>(net) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace l3det
