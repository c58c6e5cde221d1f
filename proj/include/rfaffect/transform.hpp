#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfaffect/fft.hpp"
#include "rfaffect/time_series.hpp"

namespace rfaffect {

using Matrix = std::vector<std::vector<double>>;

struct PowerSpectrum {
    std::vector<double> frequencies;  // Hz, ascending from 0 to Nyquist
    std::vector<double> power;        // signal units^2 per Hz
};

struct Scaleogram {
    Matrix magnitudes;           // [n_scales x n_times], nonnegative
    std::vector<double> scales;  // seconds, ascending
    double sample_rate = 0.0;
};

/// One-sided periodogram P(f_k) = |X_k|^2 / (fs*N) with interior bins
/// doubled, so the integral over frequency approximates the mean power.
/// Rectangular window only; detrend the input first for clean estimates.
inline PowerSpectrum periodogram(const TimeSeries& ts) {
    validate(ts);
    const std::size_t n = ts.samples.size();
    if (n < 2)
        throw std::invalid_argument("periodogram: need at least 2 samples");
    auto spec = fft_real(ts.samples);
    const std::size_t half = n / 2;
    PowerSpectrum ps;
    ps.frequencies.resize(half + 1);
    ps.power.resize(half + 1);
    const double fs = ts.sample_rate;
    for (std::size_t k = 0; k <= half; ++k) {
        ps.frequencies[k] = static_cast<double>(k) * fs / static_cast<double>(n);
        double p = std::norm(spec[k]) / (fs * static_cast<double>(n));
        bool interior = k != 0 && !(n % 2 == 0 && k == half);
        ps.power[k] = interior ? 2.0 * p : p;
    }
    return ps;
}

namespace cwtdetail {

constexpr double kMorletOmega = 6.0;  // center frequency parameter

/// Morlet pseudo-frequency for a scale in seconds.
inline double pseudo_frequency(double scale) { return kMorletOmega / (2.0 * M_PI * scale); }
inline double scale_for_frequency(double f) { return kMorletOmega / (2.0 * M_PI * f); }

}  // namespace cwtdetail

/// Complex Morlet CWT magnitude. Scales are log-spaced so pseudo-frequencies
/// span [f_min, f_max]; each sampled wavelet is normalized to unit discrete
/// L2 energy. Convolution is done per scale via FFT with zero padding, so
/// columns near the edges sit inside the cone of influence.
inline Scaleogram cwt_morlet(const TimeSeries& ts, int n_scales, double f_min, double f_max) {
    validate(ts);
    if (n_scales < 2)
        throw std::invalid_argument("cwt_morlet: need at least 2 scales");
    const double nyquist = ts.sample_rate / 2.0;
    if (!(f_min > 0.0 && f_min < f_max && f_max <= nyquist))
        throw std::invalid_argument("cwt_morlet: need 0 < f_min < f_max <= Nyquist");

    const std::size_t n = ts.samples.size();
    const double fs = ts.sample_rate;
    const double s_min = cwtdetail::scale_for_frequency(f_max);
    const double s_max = cwtdetail::scale_for_frequency(f_min);

    Scaleogram sg;
    sg.sample_rate = fs;
    sg.scales.resize(static_cast<std::size_t>(n_scales));
    const double ratio = std::log(s_max / s_min) / static_cast<double>(n_scales - 1);
    for (int i = 0; i < n_scales; ++i)
        sg.scales[static_cast<std::size_t>(i)] = s_min * std::exp(ratio * i);

    const std::size_t max_half = static_cast<std::size_t>(std::ceil(4.0 * s_max * fs));
    const std::size_t len = fftdetail::next_pow2(n + 2 * max_half + 1);

    std::vector<std::complex<double>> sig_fft(len);
    for (std::size_t i = 0; i < n; ++i)
        sig_fft[i] = ts.samples[i];
    fft(sig_fft);

    sg.magnitudes.assign(static_cast<std::size_t>(n_scales), std::vector<double>(n));
    std::vector<std::complex<double>> kern(len);
    for (int si = 0; si < n_scales; ++si) {
        const double s = sg.scales[static_cast<std::size_t>(si)];
        const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * s * fs));
        std::fill(kern.begin(), kern.end(), std::complex<double>(0.0, 0.0));
        double energy = 0.0;
        for (std::ptrdiff_t m = -half; m <= half; ++m) {
            double t = static_cast<double>(m) / fs / s;
            double envelope = std::pow(M_PI, -0.25) * std::exp(-0.5 * t * t);
            std::complex<double> w = envelope * std::polar(1.0, cwtdetail::kMorletOmega * t);
            energy += std::norm(w);
            std::size_t idx = m >= 0 ? static_cast<std::size_t>(m)
                                     : len - static_cast<std::size_t>(-m);
            kern[idx] = w;
        }
        const double inv_norm = 1.0 / std::sqrt(energy);
        for (auto& v : kern)
            v *= inv_norm;
        fft(kern);
        for (std::size_t k = 0; k < len; ++k)
            kern[k] = sig_fft[k] * std::conj(kern[k]);
        fft(kern, true);
        auto& row = sg.magnitudes[static_cast<std::size_t>(si)];
        for (std::size_t k = 0; k < n; ++k)
            row[k] = std::abs(kern[k]);
    }
    return sg;
}

/// Block-average pooling to [height x width]. Total mass is preserved
/// (weighted by block sizes); bounds partition rows/cols evenly.
inline Matrix block_average(const Matrix& m, int height, int width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("block_average: target dims must be >= 1");
    if (m.empty() || m.front().empty())
        throw std::invalid_argument("block_average: empty matrix");
    const std::size_t rows = m.size(), cols = m.front().size();
    const auto h = static_cast<std::size_t>(height);
    const auto w = static_cast<std::size_t>(width);
    auto bound = [](std::size_t i, std::size_t target, std::size_t total) {
        return i * total / target;
    };
    Matrix out(h, std::vector<double>(w, 0.0));
    for (std::size_t r = 0; r < h; ++r) {
        std::size_t r0 = bound(r, h, rows), r1 = std::max(bound(r + 1, h, rows), r0 + 1);
        for (std::size_t c = 0; c < w; ++c) {
            std::size_t c0 = bound(c, w, cols), c1 = std::max(bound(c + 1, w, cols), c0 + 1);
            double sum = 0.0;
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j)
                    sum += m[i][j];
            out[r][c] = sum / (static_cast<double>(r1 - r0) * static_cast<double>(c1 - c0));
        }
    }
    return out;
}

/// Min-max scales a matrix to [0,1]; a constant matrix maps to all zeros.
inline Matrix minmax01(const Matrix& m) {
    double mn = m[0][0], mx = m[0][0];
    for (const auto& row : m)
        for (double v : row) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    Matrix out = m;
    const double range = mx - mn;
    for (auto& row : out)
        for (double& v : row)
            v = range > 0.0 ? (v - mn) / range : 0.0;
    return out;
}

/// Pools a scaleogram to the CNN input shape and min-max scales it to [0,1].
inline Matrix scaleogram_resize(const Scaleogram& sg, int height, int width) {
    return minmax01(block_average(sg.magnitudes, height, width));
}

/// ASCII PGM export (maxval 65535) plus a CSV of the scale axis for
/// inspection alongside the image.
inline void write_scaleogram_pgm(const Scaleogram& sg, const std::string& pgm_path,
                                 const std::string& scale_csv_path) {
    const Matrix img = minmax01(sg.magnitudes);
    std::ofstream out(pgm_path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + pgm_path);
    out << "P2\n" << img.front().size() << ' ' << img.size() << "\n65535\n";
    for (const auto& row : img) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << static_cast<int>(std::lround(row[j] * 65535.0)) << (j + 1 < row.size() ? ' ' : '\n');
    }
    std::ofstream sc(scale_csv_path);
    if (!sc)
        throw std::runtime_error("cannot open for writing: " + scale_csv_path);
    sc << "scale_s,pseudo_freq_hz\n";
    for (double s : sg.scales)
        sc << detail::format_g17(s) << ',' << detail::format_g17(cwtdetail::pseudo_frequency(s)) << '\n';
}

}  // namespace rfaffect
