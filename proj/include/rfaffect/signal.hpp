#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rfaffect/time_series.hpp"

namespace rfaffect {

enum class NormalizationMethod { zscore, minmax };

/// Linear-interpolation resampling. Preserves the [0, span] time extent; the
/// output covers the same instants within one output sample period.
inline TimeSeries resample(const TimeSeries& ts, double target_rate) {
    validate(ts);
    if (!(target_rate > 0.0))
        throw std::invalid_argument("resample: target_rate must be positive");
    if (ts.samples.size() < 2)
        throw std::invalid_argument("resample: need at least 2 samples");
    const double span = ts.span();
    const std::size_t n_out = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;
    std::vector<double> out(n_out);
    const double ratio = ts.sample_rate / target_rate;
    const std::size_t last = ts.samples.size() - 1;
    for (std::size_t k = 0; k < n_out; ++k) {
        double pos = static_cast<double>(k) * ratio;
        std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 >= last) {
            out[k] = ts.samples[last];
            continue;
        }
        double frac = pos - static_cast<double>(i0);
        out[k] = ts.samples[i0] + frac * (ts.samples[i0 + 1] - ts.samples[i0]);
    }
    return TimeSeries(std::move(out), target_rate, ts.start_time);
}

/// Resamples to an exact output length over the input's span. Used where a
/// fixed-size vector is needed (e.g. network input channels).
inline std::vector<double> resample_to_length(const std::vector<double>& x, std::size_t n_out) {
    if (x.empty() || n_out == 0)
        throw std::invalid_argument("resample_to_length: empty input or zero length");
    if (x.size() == 1)
        return std::vector<double>(n_out, x[0]);
    std::vector<double> out(n_out);
    const double step = static_cast<double>(x.size() - 1) / static_cast<double>(n_out == 1 ? 1 : n_out - 1);
    for (std::size_t k = 0; k < n_out; ++k) {
        double pos = static_cast<double>(k) * step;
        std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 >= x.size() - 1) {
            out[k] = x.back();
            continue;
        }
        double frac = pos - static_cast<double>(i0);
        out[k] = x[i0] + frac * (x[i0 + 1] - x[i0]);
    }
    return out;
}

struct Biquad {
    double b0, b1, b2;  // numerator, a0 normalized to 1
    double a1, a2;      // denominator
};

namespace detail {

/// Analytic Butterworth bandpass design: prototype lowpass poles, analog
/// bandpass transform, bilinear mapping, grouped into conjugate biquads.
/// `order` is the prototype order (attenuation slope per band edge).
inline std::vector<Biquad> design_butterworth_bandpass(double low, double high, int order,
                                                       double fs) {
    using cd = std::complex<double>;
    const double nyquist = fs / 2.0;
    if (!(low > 0.0 && low < high && high < nyquist))
        throw std::invalid_argument("butterworth_bandpass: need 0 < low < high < sample_rate/2");
    if (order != 2 && order != 4 && order != 6 && order != 8)
        throw std::invalid_argument("butterworth_bandpass: order must be one of {2,4,6,8}");

    const double k = 2.0 * fs;
    const double w1 = k * std::tan(M_PI * low / fs);   // prewarped edges
    const double w2 = k * std::tan(M_PI * high / fs);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    std::vector<Biquad> sections;
    sections.reserve(static_cast<std::size_t>(order));
    // Even prototype order: poles come in conjugate pairs, upper half only.
    for (int i = 0; i < order / 2; ++i) {
        double theta = M_PI * (2.0 * i + 1.0) / (2.0 * order);
        cd p(-std::sin(theta), std::cos(theta));  // unit-circle LHP pole
        cd bp = bw * p;
        cd disc = std::sqrt(bp * bp - 4.0 * w0 * w0);
        for (cd q : {(bp + disc) / 2.0, (bp - disc) / 2.0}) {
            cd z = (k + q) / (k - q);  // bilinear
            Biquad s;
            s.b0 = 1.0;
            s.b1 = 0.0;
            s.b2 = -1.0;  // zeros at z = +1 and z = -1
            s.a1 = -2.0 * z.real();
            s.a2 = std::norm(z);
            sections.push_back(s);
        }
    }

    // Normalize to unit gain at the (digital) center frequency.
    const double omega_c = 2.0 * std::atan(w0 / k);
    cd ejw = std::polar(1.0, omega_c);
    cd ejw2 = ejw * ejw;
    cd h(1.0, 0.0);
    for (const Biquad& s : sections)
        h *= (s.b0 * ejw2 + s.b1 * ejw + s.b2) / (ejw2 + s.a1 * ejw + s.a2);
    double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sections.size()));
    for (Biquad& s : sections) {
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return sections;
}

inline void biquad_filter_inplace(std::vector<double>& x, const Biquad& s) {
    double z1 = 0.0, z2 = 0.0;  // direct form II transposed
    for (double& v : x) {
        double in = v;
        double out = s.b0 * in + z1;
        z1 = s.b1 * in - s.a1 * out + z2;
        z2 = s.b2 * in - s.a2 * out;
        v = out;
    }
}

}  // namespace detail

/// Zero-phase Butterworth bandpass: the biquad cascade is applied forward and
/// backward, so the magnitude response is squared and phase distortion
/// cancels. Edges are odd-extended before filtering and trimmed after.
inline TimeSeries butterworth_bandpass(const TimeSeries& ts, double low, double high, int order) {
    validate(ts);
    auto sections = detail::design_butterworth_bandpass(low, high, order, ts.sample_rate);

    const std::size_t n = ts.samples.size();
    const std::size_t pad = std::min(n - 1, static_cast<std::size_t>(12 * order));
    std::vector<double> x;
    x.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i)
        x.push_back(2.0 * ts.samples.front() - ts.samples[i]);
    x.insert(x.end(), ts.samples.begin(), ts.samples.end());
    for (std::size_t i = 1; i <= pad; ++i)
        x.push_back(2.0 * ts.samples.back() - ts.samples[n - 1 - i]);

    for (const auto& s : sections)
        detail::biquad_filter_inplace(x, s);
    std::reverse(x.begin(), x.end());
    for (const auto& s : sections)
        detail::biquad_filter_inplace(x, s);
    std::reverse(x.begin(), x.end());

    std::vector<double> out(x.begin() + static_cast<std::ptrdiff_t>(pad),
                            x.begin() + static_cast<std::ptrdiff_t>(pad + n));
    return TimeSeries(std::move(out), ts.sample_rate, ts.start_time);
}

/// Analytic magnitude response of the zero-phase bandpass at frequency f,
/// i.e. |H(f)|^2 of the underlying cascade mapped through the bilinear
/// prewarp. Test oracle companion to butterworth_bandpass.
inline double butterworth_bandpass_gain(double f, double low, double high, int order, double fs) {
    const double k = 2.0 * fs;
    const double w1 = k * std::tan(M_PI * low / fs);
    const double w2 = k * std::tan(M_PI * high / fs);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;
    const double W = k * std::tan(M_PI * f / fs);
    const double u = (W * W - w0 * w0) / (bw * W);
    const double mag2 = 1.0 / (1.0 + std::pow(u * u, order));  // |H|^2 of single pass
    return mag2;                                               // forward-backward applies H twice
}

inline TimeSeries normalize(const TimeSeries& ts, NormalizationMethod method) {
    validate(ts);
    const std::size_t n = ts.samples.size();
    std::vector<double> out(n);
    if (method == NormalizationMethod::minmax) {
        auto [mn_it, mx_it] = std::minmax_element(ts.samples.begin(), ts.samples.end());
        double mn = *mn_it, mx = *mx_it;
        if (mx == mn)
            throw std::domain_error("normalize(minmax): constant signal");
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (ts.samples[i] - mn) / (mx - mn);
    } else {
        if (n < 2)
            throw std::domain_error("normalize(zscore): need at least 2 samples");
        double mean = std::accumulate(ts.samples.begin(), ts.samples.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : ts.samples)
            ss += (v - mean) * (v - mean);
        double sd = std::sqrt(ss / static_cast<double>(n - 1));  // sample std
        if (sd == 0.0)
            throw std::domain_error("normalize(zscore): constant signal");
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (ts.samples[i] - mean) / sd;
    }
    return TimeSeries(std::move(out), ts.sample_rate, ts.start_time);
}

/// Returns the final `seconds` of the signal; length = round(seconds * rate).
inline TimeSeries crop_tail(const TimeSeries& ts, double seconds) {
    validate(ts);
    const auto n = ts.samples.size();
    const auto want = static_cast<std::size_t>(std::llround(seconds * ts.sample_rate));
    if (want < 1)
        throw std::invalid_argument("crop_tail: requested window is empty");
    if (want > n)
        throw std::invalid_argument("crop_tail: requested window longer than signal");
    std::vector<double> out(ts.samples.end() - static_cast<std::ptrdiff_t>(want), ts.samples.end());
    double t0 = ts.start_time + static_cast<double>(n - want) / ts.sample_rate;
    return TimeSeries(std::move(out), ts.sample_rate, t0);
}

/// Subtracts the least-squares linear trend.
inline TimeSeries detrend(const TimeSeries& ts) {
    validate(ts);
    const std::size_t n = ts.samples.size();
    if (n < 2)
        throw std::invalid_argument("detrend: need at least 2 samples");
    // Fit y = a + b*i over sample index.
    double sy = 0.0, sxy = 0.0;
    const double sx = static_cast<double>(n - 1) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        sy += ts.samples[i];
        sxy += static_cast<double>(i) * ts.samples[i];
    }
    const double mean_y = sy / static_cast<double>(n);
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(i) - sx;
        sxx += d * d;
    }
    const double b = (sxy - sx * sy) / sxx;
    const double a = mean_y - b * sx;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = ts.samples[i] - (a + b * static_cast<double>(i));
    return TimeSeries(std::move(out), ts.sample_rate, ts.start_time);
}

}  // namespace rfaffect
