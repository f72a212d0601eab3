// Small statistics helpers: autocorrelation-aware error bars, batch means,
// binomial intervals, whiteness diagnostics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "tracedyn/common.hpp"

namespace tracedyn {

struct MeanErr {
    double mean = 0;
    double stderr_ = 0;
    double tau_int = 1;  // integrated autocorrelation time (1 = independent)
    std::size_t n = 0;
};

inline double sample_mean(const std::vector<double>& x) {
    if (x.empty()) return 0;
    return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double sample_variance(const std::vector<double>& x, double mean) {
    if (x.size() < 2) return 0;
    double s = 0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / double(x.size() - 1);
}

// Sokal windowing: sum rho_k until k >= c * tau_int(k).
inline MeanErr autocorr_mean_err(const std::vector<double>& x, double c = 6.0) {
    MeanErr r;
    r.n = x.size();
    if (x.empty()) throw NumericsError("autocorr_mean_err: empty sample set");
    r.mean = sample_mean(x);
    double var = sample_variance(x, r.mean);
    if (var <= 0 || x.size() < 8) {
        r.stderr_ = std::sqrt(var / std::max<std::size_t>(x.size(), 1));
        return r;
    }
    const std::size_t n = x.size();
    double tau = 1.0;
    std::size_t kmax = n / 2;
    for (std::size_t k = 1; k < kmax; ++k) {
        double acc = 0;
        for (std::size_t i = 0; i + k < n; ++i) acc += (x[i] - r.mean) * (x[i + k] - r.mean);
        double rho = acc / (double(n - k) * var);
        tau += 2.0 * rho;
        if (double(k) >= c * tau) break;
        if (k > 2000) break;  // pathological chains: cap the window
    }
    tau = std::max(tau, 1.0);
    r.tau_int = tau;
    r.stderr_ = std::sqrt(var * tau / double(n));
    return r;
}

// Batch-means error bar: robust to autocorrelation, O(n).
inline MeanErr batch_mean_err(const std::vector<double>& x, std::size_t n_batches = 50) {
    MeanErr r;
    r.n = x.size();
    if (x.empty()) throw NumericsError("batch_mean_err: empty sample set");
    r.mean = sample_mean(x);
    n_batches = std::min(n_batches, x.size());
    if (n_batches < 2) {
        r.stderr_ = 0;
        return r;
    }
    std::size_t len = x.size() / n_batches;
    std::vector<double> bm;
    bm.reserve(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        double s = 0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
        bm.push_back(s / double(len));
    }
    double m = sample_mean(bm);
    double v = sample_variance(bm, m);
    r.stderr_ = std::sqrt(v / double(bm.size()));
    return r;
}

// Regularized incomplete beta via Lentz continued fraction.
inline double betainc(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    auto cont_frac = [](double a, double b, double x) {
        const int max_iter = 300;
        const double eps = 1e-14, tiny = 1e-300;
        double qab = a + b, qap = a + 1, qam = a - 1;
        double c = 1, d = 1 - qab * x / qap;
        if (std::abs(d) < tiny) d = tiny;
        d = 1 / d;
        double h = d;
        for (int m = 1; m <= max_iter; ++m) {
            int m2 = 2 * m;
            double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1 + aa * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1 + aa / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1 / d;
            h *= d * c;
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1 + aa * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1 + aa / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1) < eps) break;
        }
        return h;
    };
    double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    double front = std::exp(a * std::log(x) + b * std::log1p(-x) - ln_beta);
    if (x < (a + 1) / (a + b + 2)) return front * cont_frac(a, b, x) / a;
    return 1 - std::exp(b * std::log1p(-x) + a * std::log(x) - ln_beta) * cont_frac(b, a, 1 - x) / b;
}

// Clopper-Pearson interval for k successes in n trials.
struct BinomialCI {
    double lo = 0, hi = 1;
};
inline BinomialCI clopper_pearson(std::size_t k, std::size_t n, double alpha = 0.0027) {
    BinomialCI ci;
    if (n == 0) return ci;
    auto solve = [&](double target, double a, double b) {
        // invert betainc(a, b, p) = target by bisection
        double lo = 0, hi = 1;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (betainc(a, b, mid) < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    ci.lo = (k == 0) ? 0.0 : solve(1 - alpha / 2, double(k), double(n - k + 1));
    ci.hi = (k == n) ? 1.0 : solve(alpha / 2, double(k + 1), double(n - k));
    return ci;
}

// Lag autocorrelations and a crude spectral-flatness statistic for a series.
struct WhitenessReport {
    double tau_int = 1;
    double max_abs_rho = 0;    // over lags 1..L against the 1/sqrt(n) band
    double band_z = 0;         // max |rho_k| * sqrt(n)
    double flatness_z = 0;     // low-band vs high-band periodogram power
    std::size_t n = 0;
};

inline WhitenessReport whiteness_diagnostic(const std::vector<double>& x, std::size_t max_lag = 50) {
    WhitenessReport w;
    w.n = x.size();
    if (x.size() < 16) return w;
    MeanErr me = autocorr_mean_err(x);
    w.tau_int = me.tau_int;
    double mean = me.mean;
    double var = sample_variance(x, mean);
    if (var <= 0) return w;
    const std::size_t n = x.size();
    max_lag = std::min(max_lag, n / 4);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double acc = 0;
        for (std::size_t i = 0; i + k < n; ++i) acc += (x[i] - mean) * (x[i + k] - mean);
        double rho = acc / (double(n - k) * var);
        w.max_abs_rho = std::max(w.max_abs_rho, std::abs(rho));
    }
    w.band_z = w.max_abs_rho * std::sqrt(double(n));
    // Periodogram over a capped window; white noise has flat expected power.
    std::size_t m = std::min<std::size_t>(n, 2048);
    std::size_t half = m / 2;
    double low = 0, high = 0;
    for (std::size_t f = 1; f < half; ++f) {
        double re = 0, im = 0;
        for (std::size_t t = 0; t < m; ++t) {
            double ang = -2.0 * M_PI * double(f) * double(t) / double(m);
            re += (x[t] - mean) * std::cos(ang);
            im += (x[t] - mean) * std::sin(ang);
        }
        double p = (re * re + im * im) / double(m);
        (f < half / 2 ? low : high) += p;
    }
    double total = low + high;
    if (total > 0) {
        // each band ~ chi^2; compare the low/high split to 1/2
        double frac = low / total;
        double se = 0.5 / std::sqrt(double(half / 2));
        w.flatness_z = (frac - 0.5) / se;
    }
    return w;
}

}  // namespace tracedyn
