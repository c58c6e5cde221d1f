#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfaffect/signal.hpp"
#include "rfaffect/time_series.hpp"
#include "rfaffect/transform.hpp"

namespace rfaffect {

struct FeatureVector {
    std::vector<double> values;
    std::vector<std::string> names;
};

struct IbiSeries {
    std::vector<double> rr_intervals;  // seconds
    std::vector<double> beat_times;    // seconds, ascending
};

inline void validate(const IbiSeries& ibi) {
    if (ibi.beat_times.size() != ibi.rr_intervals.size() + 1)
        throw std::invalid_argument("IbiSeries: beat_times must have one more entry than rr_intervals");
    for (std::size_t i = 0; i < ibi.rr_intervals.size(); ++i) {
        double rr = ibi.rr_intervals[i];
        if (!(rr > 0.2 && rr < 3.0))
            throw std::invalid_argument("IbiSeries: RR interval outside (0.2, 3.0) s");
        if (std::abs(rr - (ibi.beat_times[i + 1] - ibi.beat_times[i])) > 1e-9)
            throw std::invalid_argument("IbiSeries: rr_intervals inconsistent with beat_times");
    }
}

/// Shannon entropy of ordinal patterns, normalized by log(order!) so the
/// result lies in [0,1]. Ties rank by order of appearance (earlier index
/// lower).
inline double permutation_entropy(const TimeSeries& ts, int order, int delay) {
    validate(ts);
    if (order < 2 || order > 7)
        throw std::invalid_argument("permutation_entropy: order must be in [2,7]");
    if (delay < 1)
        throw std::invalid_argument("permutation_entropy: delay must be >= 1");
    const std::size_t n = ts.samples.size();
    const std::size_t reach = static_cast<std::size_t>(order - 1) * static_cast<std::size_t>(delay);
    if (n <= reach + 1)
        throw std::invalid_argument("permutation_entropy: series too short for order/delay");

    const std::size_t n_windows = n - reach;
    std::map<std::vector<int>, std::size_t> counts;
    std::vector<int> idx(static_cast<std::size_t>(order));
    std::vector<double> window(static_cast<std::size_t>(order));
    for (std::size_t w = 0; w < n_windows; ++w) {
        for (int j = 0; j < order; ++j) {
            idx[static_cast<std::size_t>(j)] = j;
            window[static_cast<std::size_t>(j)] =
                ts.samples[w + static_cast<std::size_t>(j) * static_cast<std::size_t>(delay)];
        }
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return window[static_cast<std::size_t>(a)] <
                                                    window[static_cast<std::size_t>(b)]; });
        ++counts[idx];
    }
    double h = 0.0;
    for (const auto& [pattern, c] : counts) {
        double p = static_cast<double>(c) / static_cast<double>(n_windows);
        h -= p * std::log(p);
    }
    double log_factorial = 0.0;
    for (int k = 2; k <= order; ++k)
        log_factorial += std::log(static_cast<double>(k));
    return h / log_factorial;
}

/// Trapezoidal band-power integral over [lo, hi]; bins straddling the edges
/// contribute fractionally. A band fully outside the spectrum support yields
/// 0 and sets *out_of_range when provided.
inline double band_power(const PowerSpectrum& ps, double lo, double hi,
                         bool* out_of_range = nullptr) {
    if (!(lo < hi))
        throw std::invalid_argument("band_power: need lo < hi");
    if (ps.frequencies.size() != ps.power.size() || ps.frequencies.size() < 2)
        throw std::invalid_argument("band_power: malformed spectrum");
    if (out_of_range)
        *out_of_range = false;
    const double f0 = ps.frequencies.front(), f1 = ps.frequencies.back();
    const double a = std::max(lo, f0), b = std::min(hi, f1);
    if (!(a < b)) {
        if (out_of_range)
            *out_of_range = true;
        return 0.0;
    }
    auto value_at = [&](double f, std::size_t seg) {
        double fa = ps.frequencies[seg], fb = ps.frequencies[seg + 1];
        double t = (f - fa) / (fb - fa);
        return ps.power[seg] + t * (ps.power[seg + 1] - ps.power[seg]);
    };
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < ps.frequencies.size(); ++seg) {
        double fa = std::max(a, ps.frequencies[seg]);
        double fb = std::min(b, ps.frequencies[seg + 1]);
        if (fa >= fb)
            continue;
        total += 0.5 * (value_at(fa, seg) + value_at(fb, seg)) * (fb - fa);
    }
    return total;
}

struct Moments {
    double variance = 0.0;  // population m2
    double skewness = 0.0;  // m3 / m2^1.5
    double kurtosis = 0.0;  // m4 / m2^2, non-excess
};

inline Moments moments(const TimeSeries& ts) {
    validate(ts);
    const std::size_t n = ts.samples.size();
    if (n < 2)
        throw std::invalid_argument("moments: need at least 2 samples");
    double mean = std::accumulate(ts.samples.begin(), ts.samples.end(), 0.0) / static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : ts.samples) {
        double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    if (m2 <= 0.0)
        throw std::domain_error("moments: constant series, skewness/kurtosis undefined");
    Moments mo;
    mo.variance = m2;
    mo.skewness = m3 / std::pow(m2, 1.5);
    mo.kurtosis = m4 / (m2 * m2);
    return mo;
}

inline const std::vector<std::string>& rf_feature_names() {
    static const std::vector<std::string> names = {
        "permutation_entropy", "bp_0.15_2", "bp_2_4", "bp_4_8",
        "variance", "skewness", "kurtosis"};
    return names;
}

/// The seven RF parameters: permutation entropy (order 3, delay 1), PSD band
/// powers over 0.15-2, 2-4 and 4-8 Hz, and the variance/skewness/kurtosis of
/// the preprocessed phase series.
inline FeatureVector rf_feature_vector(const TimeSeries& ts) {
    FeatureVector fv;
    fv.names = rf_feature_names();
    const PowerSpectrum ps = periodogram(ts);
    const Moments mo = moments(ts);
    fv.values = {permutation_entropy(ts, 3, 1),
                 band_power(ps, 0.15, 2.0),
                 band_power(ps, 2.0, 4.0),
                 band_power(ps, 4.0, 8.0),
                 mo.variance,
                 mo.skewness,
                 mo.kurtosis};
    return fv;
}

/// Pan-Tompkins style R-peak detector: bandpass 5-15 Hz, five-point
/// derivative, squaring, 150 ms moving-window integration, adaptive
/// signal/noise thresholds with a 200 ms refractory period.
inline IbiSeries detect_r_peaks(const TimeSeries& ecg) {
    validate(ecg);
    const double fs = ecg.sample_rate;
    if (ecg.duration() < 3.0)
        throw std::invalid_argument("detect_r_peaks: recording too short");

    const double hi = std::min(15.0, 0.45 * fs);
    TimeSeries band = butterworth_bandpass(ecg, 5.0, hi, 2);

    const std::size_t n = band.samples.size();
    std::vector<double> deriv(n, 0.0);
    for (std::size_t i = 4; i < n; ++i)
        deriv[i] = (2.0 * band.samples[i] + band.samples[i - 1] - band.samples[i - 3] -
                    2.0 * band.samples[i - 4]) / 8.0;
    for (auto& v : deriv)
        v *= v;

    const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.150 * fs)));
    std::vector<double> integ(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += deriv[i];
        if (i >= win)
            acc -= deriv[i - win];
        integ[i] = acc / static_cast<double>(std::min(i + 1, win));
    }

    // Initialize running estimates from the first two seconds.
    const auto init_n = std::min(n, static_cast<std::size_t>(std::lround(2.0 * fs)));
    double init_max = *std::max_element(integ.begin(), integ.begin() + static_cast<std::ptrdiff_t>(init_n));
    double spki = 0.5 * init_max;
    double npki = 0.1 * init_max;
    if (init_max <= 0.0)
        throw std::invalid_argument("detect_r_peaks: no beats found (flat signal)");

    const auto refractory = static_cast<std::size_t>(std::lround(0.200 * fs));
    const auto search_half = static_cast<std::size_t>(std::lround(0.100 * fs));
    std::vector<double> beat_times;
    std::size_t last_beat_idx = 0;
    bool have_beat = false;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(integ[i] > integ[i - 1] && integ[i] >= integ[i + 1]))
            continue;  // local maxima of the integrated signal only
        double threshold = npki + 0.25 * (spki - npki);
        if (integ[i] > threshold) {
            if (have_beat && i - last_beat_idx < refractory)
                continue;
            // refine: strongest bandpassed excursion near the integrator peak
            std::size_t lo = i > search_half ? i - search_half : 0;
            std::size_t hi_idx = std::min(n - 1, i + search_half);
            std::size_t best = lo;
            for (std::size_t j = lo; j <= hi_idx; ++j)
                if (std::abs(band.samples[j]) > std::abs(band.samples[best]))
                    best = j;
            double t = band.time_at(best);
            if (!beat_times.empty() && t - beat_times.back() < 0.2)
                continue;
            beat_times.push_back(t);
            last_beat_idx = i;
            have_beat = true;
            spki = 0.125 * integ[i] + 0.875 * spki;
        } else {
            npki = 0.125 * integ[i] + 0.875 * npki;
        }
    }
    if (beat_times.size() < 2)
        throw std::invalid_argument("detect_r_peaks: fewer than 2 beats detected");

    IbiSeries ibi;
    ibi.beat_times = beat_times;
    for (std::size_t i = 0; i + 1 < beat_times.size(); ++i) {
        double rr = beat_times[i + 1] - beat_times[i];
        if (!(rr > 0.2 && rr < 3.0))
            throw std::invalid_argument("detect_r_peaks: nonphysiological RR interval " +
                                        std::to_string(rr));
        ibi.rr_intervals.push_back(rr);
    }
    return ibi;
}

namespace ibidetail {

inline double mean_of(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double percentile(std::vector<double> x, double p) {
    // linear interpolation between closest ranks
    std::sort(x.begin(), x.end());
    if (x.size() == 1)
        return x[0];
    double pos = p / 100.0 * static_cast<double>(x.size() - 1);
    auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= x.size() - 1)
        return x.back();
    double frac = pos - static_cast<double>(i0);
    return x[i0] + frac * (x[i0 + 1] - x[i0]);
}

inline double median_of(const std::vector<double>& x) { return percentile(x, 50.0); }

inline double sample_std(const std::vector<double>& x) {
    if (x.size() < 2)
        return 0.0;
    double m = mean_of(x);
    double ss = 0.0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline double population_var(const std::vector<double>& x) {
    double m = mean_of(x);
    double ss = 0.0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size());
}

inline double rms_of(const std::vector<double>& x) {
    double ss = 0.0;
    for (double v : x)
        ss += v * v;
    return std::sqrt(ss / static_cast<double>(x.size()));
}

inline double mad_of(const std::vector<double>& x) {
    double med = median_of(x);
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        dev[i] = std::abs(x[i] - med);
    return median_of(dev);
}

// Degenerate (zero-variance) series yield 0 rather than an error: the 81-entry
// registry must stay finite for any valid IBI input.
inline double safe_skewness(const std::vector<double>& x) {
    double m = mean_of(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m3 /= static_cast<double>(x.size());
    return m2 > 1e-24 ? m3 / std::pow(m2, 1.5) : 0.0;
}

inline double safe_kurtosis(const std::vector<double>& x) {
    double m = mean_of(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    return m2 > 1e-24 ? m4 / (m2 * m2) : 0.0;
}

inline std::vector<double> diff(const std::vector<double>& x) {
    std::vector<double> d;
    d.reserve(x.size() > 0 ? x.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        d.push_back(x[i + 1] - x[i]);
    return d;
}

inline void push_stat_set(FeatureVector& fv, const std::string& prefix,
                          const std::vector<double>& x) {
    auto add = [&](const std::string& name, double v) {
        fv.names.push_back(prefix + "_" + name);
        fv.values.push_back(v);
    };
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    add("mean", mean_of(x));
    add("median", median_of(x));
    add("std", sample_std(x));
    add("min", *mn);
    add("max", *mx);
    add("range", *mx - *mn);
    add("iqr", percentile(x, 75.0) - percentile(x, 25.0));
    add("mad", mad_of(x));
    add("rms", rms_of(x));
    add("skewness", safe_skewness(x));
    add("kurtosis", safe_kurtosis(x));
    add("p10", percentile(x, 10.0));
    add("p25", percentile(x, 25.0));
    add("p75", percentile(x, 75.0));
    add("p90", percentile(x, 90.0));
}

/// Sample entropy with m=2 and tolerance r; 0 when no template matches exist.
inline double sample_entropy(const std::vector<double>& x, double r) {
    const std::size_t n = x.size();
    if (n < 4)
        return 0.0;
    auto count_matches = [&](std::size_t m) {
        std::size_t count = 0;
        for (std::size_t i = 0; i + m < n; ++i) {
            for (std::size_t j = i + 1; j + m < n; ++j) {
                double dist = 0.0;
                for (std::size_t k = 0; k <= m; ++k)
                    dist = std::max(dist, std::abs(x[i + k] - x[j + k]));
                if (dist <= r)
                    ++count;
            }
        }
        return count;
    };
    const std::size_t b = count_matches(1);  // length-2 templates
    const std::size_t a = count_matches(2);  // length-3 templates
    if (a == 0 || b == 0)
        return 0.0;
    return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

inline double ls_slope(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 2)
        return 0.0;
    double xbar = static_cast<double>(n - 1) / 2.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = static_cast<double>(i) - xbar;
        num += dx * y[i];
        den += dx * dx;
    }
    return num / den;
}

}  // namespace ibidetail

/// Permutation entropy over a plain vector (used for RR series).
inline double permutation_entropy_vec(const std::vector<double>& x, int order, int delay) {
    return permutation_entropy(TimeSeries(x, 1.0), order, delay);
}

/// The 81-entry IBI/HRV registry: per-series statistics of RR and its first
/// and second differences (3 x 15), time-domain HRV (12), Poincare (3),
/// tachogram spectral bands (7), ordinal/complexity (3), and thirds-of-record
/// segment statistics (11).
inline FeatureVector ibi_features(const IbiSeries& ibi) {
    validate(ibi);
    const std::vector<double>& rr = ibi.rr_intervals;
    if (rr.size() < 10)
        throw std::invalid_argument("ibi_features: need at least 10 RR intervals");

    FeatureVector fv;
    const std::vector<double> d1 = ibidetail::diff(rr);
    const std::vector<double> d2 = ibidetail::diff(d1);
    ibidetail::push_stat_set(fv, "rr", rr);
    ibidetail::push_stat_set(fv, "d1", d1);
    ibidetail::push_stat_set(fv, "d2", d2);

    auto add = [&](const std::string& name, double v) {
        fv.names.push_back(name);
        fv.values.push_back(v);
    };

    // HRV time-domain set
    const double sdnn = ibidetail::sample_std(rr);
    double rmssd = ibidetail::rms_of(d1);
    std::size_t nn20 = 0, nn50 = 0;
    for (double d : d1) {
        if (std::abs(d) > 0.020)
            ++nn20;
        if (std::abs(d) > 0.050)
            ++nn50;
    }
    std::vector<double> hr(rr.size());
    for (std::size_t i = 0; i < rr.size(); ++i)
        hr[i] = 60.0 / rr[i];
    auto [hr_mn, hr_mx] = std::minmax_element(hr.begin(), hr.end());
    add("sdnn", sdnn);
    add("rmssd", rmssd);
    add("sdsd", std::sqrt(ibidetail::population_var(d1)));
    add("pnn20", static_cast<double>(nn20) / static_cast<double>(d1.size()));
    add("pnn50", static_cast<double>(nn50) / static_cast<double>(d1.size()));
    add("nn50_count", static_cast<double>(nn50));
    add("cv_rr", sdnn / ibidetail::mean_of(rr));
    add("hr_mean", ibidetail::mean_of(hr));
    add("hr_std", ibidetail::sample_std(hr));
    add("hr_min", *hr_mn);
    add("hr_max", *hr_mx);
    // triangular index: N over the tallest 1/128 s histogram bin
    {
        const double bin_w = 1.0 / 128.0;
        std::map<long, std::size_t> hist;
        for (double v : rr)
            ++hist[static_cast<long>(std::floor(v / bin_w))];
        std::size_t tallest = 0;
        for (const auto& [bin, c] : hist)
            tallest = std::max(tallest, c);
        add("triangular_index", static_cast<double>(rr.size()) / static_cast<double>(tallest));
    }

    // Poincare descriptors (population variance convention)
    {
        const double var_d1 = ibidetail::population_var(d1);
        const double var_rr = ibidetail::population_var(rr);
        const double sd1 = std::sqrt(0.5 * var_d1);
        const double sd2 = std::sqrt(std::max(0.0, 2.0 * var_rr - 0.5 * var_d1));
        add("sd1", sd1);
        add("sd2", sd2);
        add("sd1_sd2", sd2 > 1e-12 ? sd1 / sd2 : 0.0);
    }

    // Spectral bands of the 4 Hz-resampled tachogram
    {
        std::vector<double> tach_t(ibi.beat_times.begin() + 1, ibi.beat_times.end());
        const double t0 = tach_t.front(), t1 = tach_t.back();
        const double tach_rate = 4.0;
        const auto n_out = static_cast<std::size_t>(std::floor((t1 - t0) * tach_rate)) + 1;
        std::vector<double> tach(n_out);
        std::size_t seg = 0;
        for (std::size_t k = 0; k < n_out; ++k) {
            double t = t0 + static_cast<double>(k) / tach_rate;
            while (seg + 1 < tach_t.size() - 1 && tach_t[seg + 1] < t)
                ++seg;
            double ta = tach_t[seg], tb = tach_t[seg + 1];
            double frac = tb > ta ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 0.0;
            tach[k] = rr[seg] + frac * (rr[seg + 1] - rr[seg]);
        }
        TimeSeries tach_ts(std::move(tach), tach_rate);
        PowerSpectrum ps = periodogram(detrend(tach_ts));
        const double vlf = band_power(ps, 0.003, 0.04);
        const double lf = band_power(ps, 0.04, 0.15);
        const double hf = band_power(ps, 0.15, 0.4);
        add("vlf_power", vlf);
        add("lf_power", lf);
        add("hf_power", hf);
        add("lf_hf", hf > 1e-24 ? lf / hf : 0.0);
        add("total_power", vlf + lf + hf);
        add("lf_norm", lf + hf > 1e-24 ? lf / (lf + hf) : 0.0);
        add("hf_norm", lf + hf > 1e-24 ? hf / (lf + hf) : 0.0);
    }

    // Ordinal / complexity
    add("pe_order3", permutation_entropy_vec(rr, 3, 1));
    add("pe_order4", rr.size() > 4 ? permutation_entropy_vec(rr, 4, 1) : 0.0);
    add("sampen", ibidetail::sample_entropy(rr, 0.2 * std::sqrt(ibidetail::population_var(rr))));

    // Segment statistics over thirds of the record
    {
        const std::size_t n = rr.size();
        std::vector<double> seg_means;
        for (int s = 0; s < 3; ++s) {
            auto lo = static_cast<std::size_t>(s) * n / 3;
            auto hi = (static_cast<std::size_t>(s) + 1) * n / 3;
            std::vector<double> seg(rr.begin() + static_cast<std::ptrdiff_t>(lo),
                                    rr.begin() + static_cast<std::ptrdiff_t>(hi));
            std::string prefix = "seg" + std::to_string(s + 1);
            add(prefix + "_mean", ibidetail::mean_of(seg));
            add(prefix + "_std", ibidetail::sample_std(seg));
            add(prefix + "_slope", ibidetail::ls_slope(seg));
            seg_means.push_back(ibidetail::mean_of(seg));
        }
        auto [mn, mx] = std::minmax_element(seg_means.begin(), seg_means.end());
        add("seg_mean_range", *mx - *mn);
        add("seg_mean_std", std::sqrt(ibidetail::population_var(seg_means)));
    }

    for (double v : fv.values)
        if (!std::isfinite(v))
            throw std::runtime_error("ibi_features: non-finite feature value");
    return fv;
}

namespace mrmrdetail {

/// Equal-frequency discretization into B bins; ties resolve by original
/// index, so the binning is deterministic.
inline std::vector<int> discretize(const std::vector<double>& x, int bins) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b])
            return x[a] < x[b];
        return a < b;
    });
    std::vector<int> out(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        out[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(bins) / n);
    return out;
}

/// Mutual information (nats) of two discrete variables via joint histogram.
inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b,
                                 int ka, int kb) {
    const std::size_t n = a.size();
    std::vector<double> joint(static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0.0);
    std::vector<double> pa(static_cast<std::size_t>(ka), 0.0), pb(static_cast<std::size_t>(kb), 0.0);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(a[i]) * static_cast<std::size_t>(kb) +
              static_cast<std::size_t>(b[i])] += w;
        pa[static_cast<std::size_t>(a[i])] += w;
        pb[static_cast<std::size_t>(b[i])] += w;
    }
    double mi = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            double p = joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(kb) +
                             static_cast<std::size_t>(j)];
            if (p > 0.0)
                mi += p * std::log(p / (pa[static_cast<std::size_t>(i)] *
                                        pb[static_cast<std::size_t>(j)]));
        }
    return std::max(0.0, mi);
}

}  // namespace mrmrdetail

/// Greedy mRmR with the MID criterion: first pick maximizes I(f; y), each
/// later pick maximizes I(f; y) minus the mean MI against already-selected
/// features. MI is estimated after equal-frequency discretization into 8
/// bins; ties break toward the lowest index. Returns indices in selection
/// order.
inline std::vector<int> mrmr_select(const std::vector<std::vector<double>>& feature_matrix,
                                    const std::vector<int>& labels, int k) {
    const std::size_t n = feature_matrix.size();
    if (n == 0 || labels.size() != n)
        throw std::invalid_argument("mrmr_select: empty matrix or label size mismatch");
    const std::size_t d = feature_matrix.front().size();
    if (k < 1 || static_cast<std::size_t>(k) > d)
        throw std::invalid_argument("mrmr_select: k out of range");
    int n_classes = 0;
    for (int y : labels)
        n_classes = std::max(n_classes, y + 1);
    {
        std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
        for (int y : labels)
            present[static_cast<std::size_t>(y)] = true;
        int distinct = static_cast<int>(std::count(present.begin(), present.end(), true));
        if (distinct < 2)
            throw std::invalid_argument("mrmr_select: need at least 2 classes");
    }

    const int bins = static_cast<int>(std::min<std::size_t>(8, n));
    std::vector<std::vector<int>> disc(d);
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i)
            col[i] = feature_matrix[i][f];
        disc[f] = mrmrdetail::discretize(col, bins);
    }

    std::vector<double> relevance(d);
    for (std::size_t f = 0; f < d; ++f)
        relevance[f] = mrmrdetail::mutual_information(disc[f], labels, bins, n_classes);

    std::vector<int> selected;
    std::vector<bool> used(d, false);
    std::vector<double> redundancy_sum(d, 0.0);
    for (int pick = 0; pick < k; ++pick) {
        int best = -1;
        double best_score = -1e300;
        for (std::size_t f = 0; f < d; ++f) {
            if (used[f])
                continue;
            double score = relevance[f];
            if (!selected.empty())
                score -= redundancy_sum[f] / static_cast<double>(selected.size());
            if (score > best_score + 1e-15) {
                best_score = score;
                best = static_cast<int>(f);
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        selected.push_back(best);
        for (std::size_t f = 0; f < d; ++f)
            if (!used[f])
                redundancy_sum[f] += mrmrdetail::mutual_information(
                    disc[f], disc[static_cast<std::size_t>(best)], bins, bins);
    }
    return selected;
}

}  // namespace rfaffect
