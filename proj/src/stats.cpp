#include "exp3mle/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "exp3mle/errors.hpp"

namespace exp3mle::stats {

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

std::vector<double> mid_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman_test(std::span<const double> x, std::span<const double> y, Alternative alternative) {
    if (x.size() != y.size()) throw DomainError("spearman: length mismatch");
    if (x.size() < 3) throw DomainError("spearman: need at least 3 pairs");
    if (is_constant(x) || is_constant(y)) throw DegenerateInput("spearman: constant input");

    const std::vector<double> rx = mid_ranks(x);
    std::vector<double> ry = mid_ranks(y);
    const double rho = pearson(rx, ry);
    const std::size_t n = x.size();

    if (n <= 10) {
        // Exact null distribution: every permutation of the y ranks is equally likely.
        constexpr double slack = 1e-12;
        std::sort(ry.begin(), ry.end());
        std::size_t hits = 0, total = 0;
        do {
            const double r = pearson(rx, ry);
            ++total;
            switch (alternative) {
                case Alternative::Decreasing: hits += r <= rho + slack; break;
                case Alternative::Increasing: hits += r >= rho - slack; break;
                case Alternative::TwoSided: hits += std::abs(r) >= std::abs(rho) - slack; break;
            }
        } while (std::next_permutation(ry.begin(), ry.end()));
        // next_permutation visits distinct arrangements only; with tied ranks every
        // distinct arrangement has the same multiplicity, so the ratio is unchanged.
        return {rho, static_cast<double>(hits) / static_cast<double>(total), true};
    }

    const double df = static_cast<double>(n - 2);
    const boost::math::students_t dist(df);
    double p = 0.0;
    if (std::abs(rho) >= 1.0) {
        const double lower = rho < 0.0 ? 0.0 : 1.0;  // P(T <= t) with t = +-infinity
        switch (alternative) {
            case Alternative::Decreasing: p = lower; break;
            case Alternative::Increasing: p = 1.0 - lower; break;
            case Alternative::TwoSided: p = 0.0; break;
        }
    } else {
        const double t = rho * std::sqrt(df / (1.0 - rho * rho));
        switch (alternative) {
            case Alternative::Decreasing: p = boost::math::cdf(dist, t); break;
            case Alternative::Increasing: p = boost::math::cdf(boost::math::complement(dist, t)); break;
            case Alternative::TwoSided: p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))); break;
        }
    }
    return {rho, std::min(p, 1.0), false};
}

double quantile(std::span<const double> data, double q) {
    if (data.empty()) throw EmptyInput("quantile of empty data");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

RateFit rate_regression(std::span<const double> ns, std::span<const double> values, double exponent) {
    if (ns.size() != values.size()) throw DomainError("rate_regression: length mismatch");
    if (ns.size() < 2) throw DomainError("rate_regression: need at least 2 points");
    if (std::any_of(ns.begin(), ns.end(), [](double v) { return !(v > 0.0); }))
        throw DomainError("rate_regression: ns must be positive");
    if (is_constant(ns)) throw DegenerateInput("rate_regression: all ns equal");

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = std::pow(ns[i], exponent);
        sxy += x * values[i];
        sxx += x * x;
        syy += values[i] * values[i];
    }
    const double coef = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double r = values[i] - coef * std::pow(ns[i], exponent);
        ss_res += r * r;
    }
    const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return {exponent, coef, r2};
}

}  // namespace exp3mle::stats
