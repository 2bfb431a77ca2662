#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lonrec/errors.hpp"
#include "lonrec/optimize.hpp"

namespace lonrec {

enum class FitFamily { weibull, burr12 };

inline std::string to_string(FitFamily f) {
    return f == FitFamily::weibull ? "weibull" : "burr12";
}

inline FitFamily fit_family_from_string(const std::string& s) {
    if (s == "weibull") return FitFamily::weibull;
    if (s == "burr12") return FitFamily::burr12;
    throw FormatError("unknown fit family: " + s);
}

/// Weibull density f(x; k, lambda) = (k/lambda) (x/lambda)^{k-1} e^{-(x/lambda)^k}.
inline double weibull_pdf(double x, double k, double lambda) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return k > 1.0 ? 0.0 : (k == 1.0 ? 1.0 / lambda : std::numeric_limits<double>::infinity());
    const double z = x / lambda;
    return (k / lambda) * std::pow(z, k - 1.0) * std::exp(-std::pow(z, k));
}

/// Burr type XII density with scale:
/// f(x; c, k, s) = (c k / s) (x/s)^{c-1} (1 + (x/s)^c)^{-(k+1)}.
inline double burr12_pdf(double x, double c, double k, double s) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return c > 1.0 ? 0.0 : (c == 1.0 ? k / s : std::numeric_limits<double>::infinity());
    const double z = x / s;
    return (c * k / s) * std::pow(z, c - 1.0) * std::pow(1.0 + std::pow(z, c), -(k + 1.0));
}

/// Summary of one fitted distribution. For fidelity data the fit runs on
/// infidelities x = 1 - F and `mode` is reported back on the fidelity scale;
/// for quality scores `mode` is on the raw scale. The 1/e half-widths are the
/// distances from the mode to the two abscissae where the fitted density has
/// dropped to peak/e.
struct FitSummary {
    FitFamily family = FitFamily::weibull;
    double p1 = 0.0; ///< Weibull: shape k;   Burr: c
    double p2 = 0.0; ///< Weibull: scale;     Burr: k
    double p3 = 0.0; ///< Burr: scale s
    double mode = 0.0;
    double err_left = 0.0;
    double err_right = 0.0;
    bool degenerate = false;
    int bins = 50;
    int n = 0;
};

namespace detail {

inline void require_samples(const std::vector<double>& xs, std::size_t minimum) {
    if (xs.size() < minimum)
        throw FitError("distribution fit: need at least " + std::to_string(minimum) + " samples");
    for (double x : xs)
        if (!(x > 0.0) || !std::isfinite(x))
            throw FitError("distribution fit: samples must be positive and finite");
}

inline bool all_identical(const std::vector<double>& xs) {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return *hi - *lo <= 1e-14 * std::max(1.0, std::abs(*hi));
}

} // namespace detail

/// Maximum-likelihood Weibull parameters (shape k, scale lambda). The shape
/// equation g(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x) is monotone in k
/// and solved by bracketed bisection; samples are rescaled by their maximum
/// first to keep x^k in range.
inline std::pair<double, double> weibull_mle(const std::vector<double>& xs) {
    detail::require_samples(xs, 2);
    const double scale = *std::max_element(xs.begin(), xs.end());
    const std::size_t n = xs.size();

    double mean_log = 0.0;
    for (double x : xs) mean_log += std::log(x / scale);
    mean_log /= static_cast<double>(n);

    auto g = [&](double k) {
        double swl = 0.0, sw = 0.0;
        for (double x : xs) {
            const double z = x / scale;
            const double w = std::pow(z, k);
            sw += w;
            swl += w * std::log(z);
        }
        return swl / sw - 1.0 / k - mean_log;
    };

    double lo = 1e-3, hi = 1.0;
    while (g(hi) < 0.0 && hi < 1e6) hi *= 2.0;
    if (g(hi) < 0.0) throw FitError("weibull_mle: shape solve failed to bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);

    double sw = 0.0;
    for (double x : xs) sw += std::pow(x / scale, k);
    const double lambda = scale * std::pow(sw / static_cast<double>(n), 1.0 / k);
    return {k, lambda};
}

/// Maximum-likelihood Burr XII parameters (c, k, s). k has a closed form for
/// fixed (c, s); the profile likelihood over (log c, log s) is minimized with
/// the quasi-Newton optimizer from several deterministic starts.
inline std::array<double, 3> burr12_mle(const std::vector<double>& xs) {
    detail::require_samples(xs, 2);
    const std::size_t n = xs.size();
    std::vector<double> sorted(xs);
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[n / 2];

    double mean_log = 0.0;
    for (double x : xs) mean_log += std::log(x);
    mean_log /= static_cast<double>(n);

    auto profile_nll = [&](const Eigen::VectorXd& p) {
        const double c = std::exp(p(0));
        const double s = std::exp(p(1));
        if (!(c > 1e-6 && c < 1e6 && s > 1e-12 && s < 1e12))
            return 1e100;
        double sum_l1p = 0.0;
        for (double x : xs) sum_l1p += std::log1p(std::pow(x / s, c));
        const double k = static_cast<double>(n) / sum_l1p;
        // -log L with the profiled k substituted in
        double nll = -static_cast<double>(n) * (std::log(c) + std::log(k) - std::log(s));
        nll -= (c - 1.0) * static_cast<double>(n) * (mean_log - std::log(s));
        nll += (k + 1.0) * sum_l1p;
        return std::isfinite(nll) ? nll : 1e100;
    };

    MinimizeOptions opt;
    opt.fd_step = 1e-6;
    opt.max_iterations = 500;
    double best_nll = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(2);
    for (double c0 : {0.7, 1.5, 3.0, 6.0}) {
        Eigen::VectorXd p0(2);
        p0 << std::log(c0), std::log(median);
        MinimizeResult run = minimize_bfgs(profile_nll, p0, opt);
        if (run.cost < best_nll) {
            best_nll = run.cost;
            best = run.x;
        }
    }
    const double c = std::exp(best(0));
    const double s = std::exp(best(1));
    double sum_l1p = 0.0;
    for (double x : xs) sum_l1p += std::log1p(std::pow(x / s, c));
    const double k = static_cast<double>(n) / sum_l1p;
    return {c, k, s};
}

namespace detail {

/// Distance from the mode to the abscissa (on the given side) where the
/// density falls to peak/e, found by bisection.
template <typename Pdf>
double one_over_e_width(const Pdf& pdf, double mode, double peak, bool left) {
    const double target = peak / M_E;
    double lo, hi; // invariant: pdf(hi side away from mode) < target <= pdf(near mode)
    if (left) {
        lo = 0.0;
        hi = mode;
        if (pdf(lo) >= target) return mode; // density never dips below peak/e on [0, mode]
    } else {
        lo = mode;
        hi = std::max(mode * 2.0, mode + 1e-12);
        while (pdf(hi) >= target && hi < 1e12) hi = hi * 2.0 + 1e-12;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool above = pdf(mid) >= target;
        if (left) {
            (above ? hi : lo) = mid;
        } else {
            (above ? lo : hi) = mid;
        }
        if (hi - lo < 1e-14 + 1e-10 * mode) break;
    }
    const double x = 0.5 * (lo + hi);
    return left ? mode - x : x - mode;
}

} // namespace detail

/// Fit a distribution to positive samples and extract the mode and the 1/e
/// half-widths from the fitted density. A fitted shape <= 1 has no interior
/// mode; the mode is then taken at the smallest sample and flagged degenerate.
inline FitSummary fit_positive_samples(const std::vector<double>& xs, FitFamily family) {
    detail::require_samples(xs, 20);
    FitSummary out;
    out.family = family;
    out.n = static_cast<int>(xs.size());

    if (detail::all_identical(xs)) {
        out.degenerate = true;
        out.mode = xs.front();
        return out;
    }

    auto finish = [&](auto pdf, double mode_x, bool interior) {
        out.mode = mode_x;
        if (!interior) {
            out.degenerate = true;
            out.mode = *std::min_element(xs.begin(), xs.end());
        }
        const double peak = pdf(out.mode);
        if (!(peak > 0.0) || !std::isfinite(peak)) {
            out.degenerate = true;
            return;
        }
        out.err_left = detail::one_over_e_width(pdf, out.mode, peak, true);
        out.err_right = detail::one_over_e_width(pdf, out.mode, peak, false);
    };

    if (family == FitFamily::weibull) {
        const auto [k, lambda] = weibull_mle(xs);
        out.p1 = k;
        out.p2 = lambda;
        const bool interior = k > 1.0;
        const double mode_x = interior ? lambda * std::pow((k - 1.0) / k, 1.0 / k) : 0.0;
        finish([k = k, lambda = lambda](double x) { return weibull_pdf(x, k, lambda); }, mode_x,
               interior);
    } else {
        const auto [c, k, s] = burr12_mle(xs);
        out.p1 = c;
        out.p2 = k;
        out.p3 = s;
        const bool interior = c > 1.0;
        const double mode_x = interior ? s * std::pow((c - 1.0) / (c * k + 1.0), 1.0 / c) : 0.0;
        finish([c = c, k = k, s = s](double x) { return burr12_pdf(x, c, k, s); }, mode_x, interior);
    }
    return out;
}

/// Weibull fit of fidelity samples. The fit runs on infidelities x = 1 - F
/// (positive support); the mode maps back to the fidelity scale, so err_left
/// extends toward lower and err_right toward higher fidelity.
inline FitSummary fit_weibull(const std::vector<double>& fidelities) {
    std::vector<double> xs;
    xs.reserve(fidelities.size());
    for (double f : fidelities) {
        if (!(f > 0.0 && f <= 1.0 + 1e-12))
            throw FitError("fit_weibull: fidelities must lie in (0, 1]");
        xs.push_back(std::max(1.0 - f, 1e-15));
    }
    FitSummary fit = fit_positive_samples(xs, FitFamily::weibull);
    const double mode_x = fit.mode;
    fit.mode = 1.0 - mode_x;
    std::swap(fit.err_left, fit.err_right); // the 1-x flip mirrors the sides
    return fit;
}

/// Burr XII fit of positive-valued samples (quality scores, infidelities).
inline FitSummary fit_burr12(const std::vector<double>& values) {
    return fit_positive_samples(values, FitFamily::burr12);
}

/// One histogram, 50 bins over the sample range by default.
struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<long> counts;

    long total() const {
        long t = 0;
        for (long c : counts) t += c;
        return t;
    }
};

inline Histogram histogram(const std::vector<double>& values, int bins = 50) {
    if (values.empty() || bins < 1) throw FitError("histogram: no data");
    Histogram h;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    h.lo = *lo;
    h.hi = *hi > *lo ? *hi : *lo + 1.0;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        int b = static_cast<int>(static_cast<double>(bins) * (v - h.lo) / (h.hi - h.lo));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

} // namespace lonrec
