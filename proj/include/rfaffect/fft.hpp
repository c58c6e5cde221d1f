#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "rfaffect/time_series.hpp"

namespace rfaffect {
namespace fftdetail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Iterative radix-2 Cooley-Tukey, in place. n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1)
        return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// Bluestein chirp-z transform for arbitrary n, built on the radix-2 kernel.
inline void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // angle = pi * k^2 / n, k^2 reduced mod 2n to keep the argument small
        std::size_t k2 = (k * k) % (2 * n);
        double ang = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = std::complex<double>(std::cos(ang), std::sin(ang));
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<std::complex<double>> fa(m), fb(m);
    for (std::size_t k = 0; k < n; ++k)
        fa[k] = a[k] * chirp[k];
    fb[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k)
        fb[k] = fb[m - k] = std::conj(chirp[k]);
    fft_radix2(fa, false);
    fft_radix2(fb, false);
    for (std::size_t k = 0; k < m; ++k)
        fa[k] *= fb[k];
    fft_radix2(fa, true);
    for (std::size_t k = 0; k < n; ++k)
        a[k] = fa[k] / static_cast<double>(m) * chirp[k];
}

}  // namespace fftdetail

/// In-place DFT of arbitrary length: radix-2 for powers of two, Bluestein
/// otherwise. The inverse includes the 1/N scaling.
inline void fft(std::vector<std::complex<double>>& a, bool inverse = false) {
    if (a.empty())
        return;
    if (fftdetail::is_pow2(a.size()))
        fftdetail::fft_radix2(a, inverse);
    else
        fftdetail::fft_bluestein(a, inverse);
    if (inverse)
        for (auto& v : a)
            v /= static_cast<double>(a.size());
}

inline std::vector<std::complex<double>> fft_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft(a);
    return a;
}

/// One-sided magnitude spectrum, length floor(N/2)+1.
inline std::vector<double> fft_magnitude(const TimeSeries& ts) {
    validate(ts);
    if (ts.samples.size() < 2)
        throw std::invalid_argument("fft_magnitude: need at least 2 samples");
    auto spec = fft_real(ts.samples);
    std::vector<double> mag(ts.samples.size() / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k)
        mag[k] = std::abs(spec[k]);
    return mag;
}

}  // namespace rfaffect
