#pragma once

// Reference implementations written the slow, obvious way. Tests compare the
// library against these, never against itself.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "rfaffect/tensor.hpp"

namespace oracle {

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -2.0 * M_PI * static_cast<double>(k * t % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson: size mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

struct MomentSet {
    double mean = 0, variance = 0, skewness = 0, kurtosis = 0;
};

// Population moments; kurtosis is the plain fourth standardized moment.
inline MomentSet moments(const std::vector<double>& x) {
    MomentSet m;
    const double n = static_cast<double>(x.size());
    for (double v : x)
        m.mean += v;
    m.mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        double c = v - m.mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.variance = m2;
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
    return m;
}

inline rfaffect::Tensor conv1d(const rfaffect::Tensor& in, const rfaffect::Tensor& k,
                               const std::vector<double>& bias) {
    const int ci = in.shape[0], len = in.shape[1];
    const int co = k.shape[0], kw = k.shape[2];
    const int lo = len - kw + 1;
    rfaffect::Tensor out({co, lo});
    for (int oc = 0; oc < co; ++oc)
        for (int t = 0; t < lo; ++t) {
            double acc = bias[static_cast<std::size_t>(oc)];
            for (int ic = 0; ic < ci; ++ic)
                for (int j = 0; j < kw; ++j)
                    acc += in.at(ic, t + j) * k.at(oc, ic, j);
            out.at(oc, t) = acc;
        }
    return out;
}

inline rfaffect::Tensor conv2d(const rfaffect::Tensor& in, const rfaffect::Tensor& k,
                               const std::vector<double>& bias) {
    const int ci = in.shape[0], h = in.shape[1], w = in.shape[2];
    const int co = k.shape[0], kh = k.shape[2], kw = k.shape[3];
    const int ho = h - kh + 1, wo = w - kw + 1;
    rfaffect::Tensor out({co, ho, wo});
    for (int oc = 0; oc < co; ++oc)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                double acc = bias[static_cast<std::size_t>(oc)];
                for (int ic = 0; ic < ci; ++ic)
                    for (int dy = 0; dy < kh; ++dy)
                        for (int dx = 0; dx < kw; ++dx)
                            acc += in.at(ic, y + dy, x + dx) * k.at(oc, ic, dy, dx);
                out.at(oc, y, x) = acc;
            }
    return out;
}

inline rfaffect::Tensor maxpool1d(const rfaffect::Tensor& in, int size, int stride) {
    const int c = in.shape[0], len = in.shape[1];
    const int lo = (len - size) / stride + 1;
    rfaffect::Tensor out({c, lo});
    for (int ch = 0; ch < c; ++ch)
        for (int t = 0; t < lo; ++t) {
            double best = in.at(ch, t * stride);
            for (int j = 1; j < size; ++j)
                best = std::max(best, in.at(ch, t * stride + j));
            out.at(ch, t) = best;
        }
    return out;
}

inline rfaffect::Tensor maxpool2d(const rfaffect::Tensor& in, int size, int stride) {
    const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
    const int ho = (h - size) / stride + 1, wo = (w - size) / stride + 1;
    rfaffect::Tensor out({c, ho, wo});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                double best = in.at(ch, y * stride, x * stride);
                for (int dy = 0; dy < size; ++dy)
                    for (int dx = 0; dx < size; ++dx)
                        best = std::max(best, in.at(ch, y * stride + dy, x * stride + dx));
                out.at(ch, y, x) = best;
            }
    return out;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Final hidden state of a step-by-step LSTM, gates ordered i,f,g,o.
inline std::vector<double> lstm(const rfaffect::Tensor& seq, const rfaffect::Tensor& wx,
                                const rfaffect::Tensor& wh, const std::vector<double>& b,
                                int hidden) {
    const int t_steps = seq.shape[0], d = seq.shape[1];
    std::vector<double> h(static_cast<std::size_t>(hidden), 0.0);
    std::vector<double> c(static_cast<std::size_t>(hidden), 0.0);
    for (int t = 0; t < t_steps; ++t) {
        std::vector<double> z(static_cast<std::size_t>(4 * hidden), 0.0);
        for (int r = 0; r < 4 * hidden; ++r) {
            double acc = b[static_cast<std::size_t>(r)];
            for (int j = 0; j < d; ++j)
                acc += wx.at(r, j) * seq.at(t, j);
            for (int j = 0; j < hidden; ++j)
                acc += wh.at(r, j) * h[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(r)] = acc;
        }
        for (int j = 0; j < hidden; ++j) {
            double i_g = sigmoid(z[static_cast<std::size_t>(j)]);
            double f_g = sigmoid(z[static_cast<std::size_t>(hidden + j)]);
            double g_g = std::tanh(z[static_cast<std::size_t>(2 * hidden + j)]);
            double o_g = sigmoid(z[static_cast<std::size_t>(3 * hidden + j)]);
            c[static_cast<std::size_t>(j)] = f_g * c[static_cast<std::size_t>(j)] + i_g * g_g;
            h[static_cast<std::size_t>(j)] = o_g * std::tanh(c[static_cast<std::size_t>(j)]);
        }
    }
    return h;
}

// Probability that a positive outranks a negative, ties counting half.
inline double mann_whitney_auc(const std::vector<int>& y, const std::vector<double>& s) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (y[i] != 1 || y[j] != 0)
                continue;
            ++pairs;
            if (s[i] > s[j])
                wins += 1.0;
            else if (s[i] == s[j])
                wins += 0.5;
        }
    return wins / static_cast<double>(pairs);
}

inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    const int ka = *std::max_element(a.begin(), a.end()) + 1;
    const int kb = *std::max_element(b.begin(), b.end()) + 1;
    const double n = static_cast<double>(a.size());
    std::vector<std::vector<double>> joint(static_cast<std::size_t>(ka),
                                           std::vector<double>(static_cast<std::size_t>(kb), 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        joint[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0 / n;
    double mi = 0.0;
    for (int x = 0; x < ka; ++x)
        for (int y = 0; y < kb; ++y) {
            double pxy = joint[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
            if (pxy <= 0.0)
                continue;
            double px = 0, py = 0;
            for (int t = 0; t < kb; ++t)
                px += joint[static_cast<std::size_t>(x)][static_cast<std::size_t>(t)];
            for (int t = 0; t < ka; ++t)
                py += joint[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
            mi += pxy * std::log(pxy / (px * py));
        }
    return mi;
}

inline double silhouette(const std::vector<std::array<double, 2>>& pts,
                         const std::vector<int>& labels) {
    const std::size_t n = pts.size();
    auto dist = [&](std::size_t i, std::size_t j) {
        double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
        return std::sqrt(dx * dx + dy * dy);
    };
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> mean_d(static_cast<std::size_t>(k), 0.0);
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            mean_d[static_cast<std::size_t>(labels[j])] += dist(i, j);
            ++count[static_cast<std::size_t>(labels[j])];
        }
        double a = 0.0, b = 1e300;
        for (int c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] == 0)
                continue;
            double m = mean_d[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
            if (c == labels[i])
                a = m;
            else
                b = std::min(b, m);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

}  // namespace oracle
