#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfaffect/synth.hpp"  // seedmix
#include "rfaffect/tensor.hpp"

namespace rfaffect {

namespace nn {

struct ParamBlock {
    std::vector<double> w;
    std::vector<double> g;

    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

namespace detail {

inline double uniform01(std::uint64_t& state) {
    return static_cast<double>(seedmix::next(state) >> 11) * 0x1.0p-53;
}

inline void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, std::uint64_t& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w)
        v = a * (2.0 * uniform01(rng) - 1.0);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

/// 1-D cross-correlation, valid padding, stride 1.
/// in {C_in, L}, kernels {C_out, C_in, K} -> {C_out, L-K+1}.
inline Tensor conv1d_forward(const Tensor& in, const Tensor& kernels,
                             const std::vector<double>& bias) {
    if (in.shape.size() != 2 || kernels.shape.size() != 3)
        throw std::invalid_argument("conv1d: expected input {C,L}, kernels {Co,Ci,K}");
    const int c_in = in.shape[0], len = in.shape[1];
    const int c_out = kernels.shape[0], k = kernels.shape[2];
    if (kernels.shape[1] != c_in)
        throw std::invalid_argument("conv1d: channel mismatch");
    if (k > len)
        throw std::invalid_argument("conv1d: kernel longer than input");
    if (static_cast<int>(bias.size()) != c_out)
        throw std::invalid_argument("conv1d: bias size mismatch");
    const int out_len = len - k + 1;
    Tensor out({c_out, out_len});
    for (int o = 0; o < c_out; ++o) {
        double* dst = &out.at(o, 0);
        for (int t = 0; t < out_len; ++t)
            dst[t] = bias[static_cast<std::size_t>(o)];
        for (int ci = 0; ci < c_in; ++ci) {
            const double* src = &in.at(ci, 0);
            for (int kk = 0; kk < k; ++kk) {
                const double w = kernels.at(o, ci, kk);
                const double* s = src + kk;
                for (int t = 0; t < out_len; ++t)
                    dst[t] += w * s[t];
            }
        }
    }
    return out;
}

/// 2-D cross-correlation, valid padding, stride 1.
/// in {C_in, H, W}, kernels {C_out, C_in, KH, KW}.
inline Tensor conv2d_forward(const Tensor& in, const Tensor& kernels,
                             const std::vector<double>& bias) {
    if (in.shape.size() != 3 || kernels.shape.size() != 4)
        throw std::invalid_argument("conv2d: expected input {C,H,W}, kernels {Co,Ci,Kh,Kw}");
    const int c_in = in.shape[0], h = in.shape[1], w = in.shape[2];
    const int c_out = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    if (kernels.shape[1] != c_in)
        throw std::invalid_argument("conv2d: channel mismatch");
    if (kh > h || kw > w)
        throw std::invalid_argument("conv2d: kernel larger than input");
    if (static_cast<int>(bias.size()) != c_out)
        throw std::invalid_argument("conv2d: bias size mismatch");
    const int oh = h - kh + 1, ow = w - kw + 1;
    Tensor out({c_out, oh, ow});
    for (int o = 0; o < c_out; ++o) {
        for (int y = 0; y < oh; ++y) {
            double* dst = &out.at(o, y, 0);
            for (int x = 0; x < ow; ++x)
                dst[x] = bias[static_cast<std::size_t>(o)];
        }
        for (int ci = 0; ci < c_in; ++ci)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    const double wv = kernels.at(o, ci, ky, kx);
                    for (int y = 0; y < oh; ++y) {
                        const double* src = &in.at(ci, y + ky, kx);
                        double* dst = &out.at(o, y, 0);
                        for (int x = 0; x < ow; ++x)
                            dst[x] += wv * src[x];
                    }
                }
    }
    return out;
}

/// Windowed max; ties keep the first index. Trailing samples that do not fill
/// a window are dropped. argmax (flat input indices) drives backward routing.
inline Tensor maxpool1d_forward(const Tensor& in, int size, int stride,
                                std::vector<int>* argmax = nullptr) {
    if (in.shape.size() != 2)
        throw std::invalid_argument("maxpool1d: expected {C,L}");
    const int c = in.shape[0], len = in.shape[1];
    if (size < 1 || stride < 1 || size > len)
        throw std::invalid_argument("maxpool1d: bad window");
    const int out_len = (len - size) / stride + 1;
    Tensor out({c, out_len});
    if (argmax)
        argmax->assign(out.size(), 0);
    for (int ch = 0; ch < c; ++ch)
        for (int t = 0; t < out_len; ++t) {
            int base = t * stride;
            int best = base;
            for (int j = 1; j < size; ++j)
                if (in.at(ch, base + j) > in.at(ch, best))
                    best = base + j;
            out.at(ch, t) = in.at(ch, best);
            if (argmax)
                (*argmax)[static_cast<std::size_t>(ch * out_len + t)] = ch * len + best;
        }
    return out;
}

inline Tensor maxpool2d_forward(const Tensor& in, int size, int stride,
                                std::vector<int>* argmax = nullptr) {
    if (in.shape.size() != 3)
        throw std::invalid_argument("maxpool2d: expected {C,H,W}");
    const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
    if (size < 1 || stride < 1 || size > h || size > w)
        throw std::invalid_argument("maxpool2d: bad window");
    const int oh = (h - size) / stride + 1, ow = (w - size) / stride + 1;
    Tensor out({c, oh, ow});
    if (argmax)
        argmax->assign(out.size(), 0);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                int by = y * stride, bx = x * stride;
                int best_y = by, best_x = bx;
                for (int jy = 0; jy < size; ++jy)
                    for (int jx = 0; jx < size; ++jx)
                        if (in.at(ch, by + jy, bx + jx) > in.at(ch, best_y, best_x)) {
                            best_y = by + jy;
                            best_x = bx + jx;
                        }
                out.at(ch, y, x) = in.at(ch, best_y, best_x);
                if (argmax)
                    (*argmax)[static_cast<std::size_t>((ch * oh + y) * ow + x)] =
                        (ch * h + best_y) * w + best_x;
            }
    return out;
}

struct LstmParams {
    // Gate order along the 4H axis: input, forget, candidate, output.
    Tensor wx;  // {4H, d}
    Tensor wh;  // {4H, H}
    std::vector<double> b;
    int hidden = 0;
};

struct LstmCache {
    std::vector<std::vector<double>> x, h_prev, c_prev, i, f, g, o, tanh_c;
};

/// Runs the LSTM recurrence over seq {T, d} with zero initial state and
/// returns h_T.
inline std::vector<double> lstm_forward(const Tensor& seq, const LstmParams& p,
                                        LstmCache* cache = nullptr) {
    if (seq.shape.size() != 2)
        throw std::invalid_argument("lstm: expected sequence {T,d}");
    const int t_steps = seq.shape[0], d = seq.shape[1];
    const int hidden = p.hidden;
    if (p.wx.shape != std::vector<int>{4 * hidden, d} ||
        p.wh.shape != std::vector<int>{4 * hidden, hidden} ||
        static_cast<int>(p.b.size()) != 4 * hidden)
        throw std::invalid_argument("lstm: parameter shape mismatch");
    std::vector<double> h(static_cast<std::size_t>(hidden), 0.0);
    std::vector<double> c(static_cast<std::size_t>(hidden), 0.0);
    std::vector<double> z(static_cast<std::size_t>(4 * hidden));
    if (cache)
        *cache = {};
    for (int t = 0; t < t_steps; ++t) {
        const double* x = &seq.at(t, 0);
        for (int r = 0; r < 4 * hidden; ++r) {
            double sum = p.b[static_cast<std::size_t>(r)];
            const double* wx = &p.wx.at(r, 0);
            for (int j = 0; j < d; ++j)
                sum += wx[j] * x[j];
            const double* wh = &p.wh.at(r, 0);
            for (int j = 0; j < hidden; ++j)
                sum += wh[j] * h[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(r)] = sum;
        }
        std::vector<double> gi(static_cast<std::size_t>(hidden)), gf(gi), gg(gi), go(gi),
            tc(gi);
        if (cache) {
            cache->x.emplace_back(x, x + d);
            cache->h_prev.push_back(h);
            cache->c_prev.push_back(c);
        }
        for (int j = 0; j < hidden; ++j) {
            double vi = detail::sigmoid(z[static_cast<std::size_t>(j)]);
            double vf = detail::sigmoid(z[static_cast<std::size_t>(hidden + j)]);
            double vg = std::tanh(z[static_cast<std::size_t>(2 * hidden + j)]);
            double vo = detail::sigmoid(z[static_cast<std::size_t>(3 * hidden + j)]);
            double cn = vf * c[static_cast<std::size_t>(j)] + vi * vg;
            double tn = std::tanh(cn);
            c[static_cast<std::size_t>(j)] = cn;
            h[static_cast<std::size_t>(j)] = vo * tn;
            gi[static_cast<std::size_t>(j)] = vi;
            gf[static_cast<std::size_t>(j)] = vf;
            gg[static_cast<std::size_t>(j)] = vg;
            go[static_cast<std::size_t>(j)] = vo;
            tc[static_cast<std::size_t>(j)] = tn;
        }
        if (cache) {
            cache->i.push_back(std::move(gi));
            cache->f.push_back(std::move(gf));
            cache->g.push_back(std::move(gg));
            cache->o.push_back(std::move(go));
            cache->tanh_c.push_back(std::move(tc));
        }
    }
    return h;
}

class Layer {
  public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& in) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect(std::vector<ParamBlock*>& out) { (void)out; }
    /// While frozen, selection layers replay the routing from their last
    /// unfrozen forward instead of re-deciding it.
    virtual void set_frozen(bool on) { (void)on; }
    virtual const char* name() const = 0;
};

class Conv1d final : public Layer {
  public:
    Conv1d(int c_in, int c_out, int k, std::uint64_t& rng) : c_in_(c_in), c_out_(c_out), k_(k) {
        weights_.w.resize(static_cast<std::size_t>(c_out) * static_cast<std::size_t>(c_in) *
                          static_cast<std::size_t>(k));
        detail::xavier_fill(weights_.w, c_in * k, c_out * k, rng);
        weights_.g.assign(weights_.w.size(), 0.0);
        bias_.w.assign(static_cast<std::size_t>(c_out), 0.0);
        bias_.g.assign(bias_.w.size(), 0.0);
    }

    Tensor forward(const Tensor& in) override {
        in_ = in;
        Tensor kern({c_out_, c_in_, k_}, weights_.w);
        return conv1d_forward(in, kern, bias_.w);
    }

    Tensor backward(const Tensor& grad_out) override {
        const int out_len = grad_out.shape[1];
        Tensor grad_in(in_.shape);
        Tensor kern({c_out_, c_in_, k_}, weights_.w);
        Tensor gw({c_out_, c_in_, k_}, weights_.g);
        for (int o = 0; o < c_out_; ++o) {
            const double* go = &grad_out.at(o, 0);
            double acc = 0.0;
            for (int t = 0; t < out_len; ++t)
                acc += go[t];
            bias_.g[static_cast<std::size_t>(o)] += acc;
            for (int ci = 0; ci < c_in_; ++ci) {
                const double* src = &in_.at(ci, 0);
                double* gi = &grad_in.at(ci, 0);
                for (int kk = 0; kk < k_; ++kk) {
                    const double w = kern.at(o, ci, kk);
                    double dw = 0.0;
                    const double* s = src + kk;
                    double* g = gi + kk;
                    for (int t = 0; t < out_len; ++t) {
                        dw += go[t] * s[t];
                        g[t] += w * go[t];
                    }
                    gw.at(o, ci, kk) += dw;
                }
            }
        }
        weights_.g = std::move(gw.data);
        return grad_in;
    }

    void collect(std::vector<ParamBlock*>& out) override {
        out.push_back(&weights_);
        out.push_back(&bias_);
    }
    const char* name() const override { return "conv1d"; }

  private:
    int c_in_, c_out_, k_;
    ParamBlock weights_, bias_;
    Tensor in_;
};

class Conv2d final : public Layer {
  public:
    Conv2d(int c_in, int c_out, int k, std::uint64_t& rng) : c_in_(c_in), c_out_(c_out), k_(k) {
        weights_.w.resize(static_cast<std::size_t>(c_out) * static_cast<std::size_t>(c_in) *
                          static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
        detail::xavier_fill(weights_.w, c_in * k * k, c_out * k * k, rng);
        weights_.g.assign(weights_.w.size(), 0.0);
        bias_.w.assign(static_cast<std::size_t>(c_out), 0.0);
        bias_.g.assign(bias_.w.size(), 0.0);
    }

    Tensor forward(const Tensor& in) override {
        in_ = in;
        Tensor kern({c_out_, c_in_, k_, k_}, weights_.w);
        return conv2d_forward(in, kern, bias_.w);
    }

    Tensor backward(const Tensor& grad_out) override {
        const int oh = grad_out.shape[1], ow = grad_out.shape[2];
        Tensor grad_in(in_.shape);
        Tensor kern({c_out_, c_in_, k_, k_}, weights_.w);
        Tensor gw({c_out_, c_in_, k_, k_}, weights_.g);
        for (int o = 0; o < c_out_; ++o) {
            double acc = 0.0;
            for (int y = 0; y < oh; ++y) {
                const double* go = &grad_out.at(o, y, 0);
                for (int x = 0; x < ow; ++x)
                    acc += go[x];
            }
            bias_.g[static_cast<std::size_t>(o)] += acc;
            for (int ci = 0; ci < c_in_; ++ci)
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx) {
                        const double wv = kern.at(o, ci, ky, kx);
                        double dw = 0.0;
                        for (int y = 0; y < oh; ++y) {
                            const double* go = &grad_out.at(o, y, 0);
                            const double* src = &in_.at(ci, y + ky, kx);
                            double* gi = &grad_in.at(ci, y + ky, kx);
                            for (int x = 0; x < ow; ++x) {
                                dw += go[x] * src[x];
                                gi[x] += wv * go[x];
                            }
                        }
                        gw.at(o, ci, ky, kx) += dw;
                    }
        }
        weights_.g = std::move(gw.data);
        return grad_in;
    }

    void collect(std::vector<ParamBlock*>& out) override {
        out.push_back(&weights_);
        out.push_back(&bias_);
    }
    const char* name() const override { return "conv2d"; }

  private:
    int c_in_, c_out_, k_;
    ParamBlock weights_, bias_;
    Tensor in_;
};

class MaxPool1d final : public Layer {
  public:
    explicit MaxPool1d(int size = 2, int stride = 2) : size_(size), stride_(stride) {}

    Tensor forward(const Tensor& in) override {
        if (frozen_ && !argmax_.empty() && in.shape == in_shape_) {
            Tensor out(out_shape_);
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = in.data[static_cast<std::size_t>(argmax_[i])];
            return out;
        }
        in_shape_ = in.shape;
        Tensor out = maxpool1d_forward(in, size_, stride_, &argmax_);
        out_shape_ = out.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(in_shape_);
        for (std::size_t i = 0; i < grad_out.data.size(); ++i)
            grad_in.data[static_cast<std::size_t>(argmax_[i])] += grad_out.data[i];
        return grad_in;
    }

    void set_frozen(bool on) override { frozen_ = on; }
    const char* name() const override { return "maxpool1d"; }

  private:
    int size_, stride_;
    std::vector<int> argmax_;
    std::vector<int> in_shape_, out_shape_;
    bool frozen_ = false;
};

class MaxPool2d final : public Layer {
  public:
    explicit MaxPool2d(int size = 2, int stride = 2) : size_(size), stride_(stride) {}

    Tensor forward(const Tensor& in) override {
        if (frozen_ && !argmax_.empty() && in.shape == in_shape_) {
            Tensor out(out_shape_);
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = in.data[static_cast<std::size_t>(argmax_[i])];
            return out;
        }
        in_shape_ = in.shape;
        Tensor out = maxpool2d_forward(in, size_, stride_, &argmax_);
        out_shape_ = out.shape;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in(in_shape_);
        for (std::size_t i = 0; i < grad_out.data.size(); ++i)
            grad_in.data[static_cast<std::size_t>(argmax_[i])] += grad_out.data[i];
        return grad_in;
    }

    void set_frozen(bool on) override { frozen_ = on; }
    const char* name() const override { return "maxpool2d"; }

  private:
    int size_, stride_;
    std::vector<int> argmax_;
    std::vector<int> in_shape_, out_shape_;
    bool frozen_ = false;
};

class Relu final : public Layer {
  public:
    Tensor forward(const Tensor& in) override {
        Tensor out = in;
        if (frozen_ && mask_.size() == in.data.size()) {
            for (std::size_t i = 0; i < out.data.size(); ++i)
                if (!mask_[i])
                    out.data[i] = 0.0;
            return out;
        }
        mask_.assign(in.data.size(), false);
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            if (out.data[i] > 0.0)
                mask_[i] = true;
            else
                out.data[i] = 0.0;
        }
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in = grad_out;
        for (std::size_t i = 0; i < grad_in.data.size(); ++i)
            if (!mask_[i])
                grad_in.data[i] = 0.0;
        return grad_in;
    }

    void set_frozen(bool on) override { frozen_ = on; }
    const char* name() const override { return "relu"; }

  private:
    std::vector<bool> mask_;
    bool frozen_ = false;
};

class Flatten final : public Layer {
  public:
    Tensor forward(const Tensor& in) override {
        in_shape_ = in.shape;
        Tensor out({static_cast<int>(in.data.size())}, in.data);
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        return Tensor(in_shape_, grad_out.data);
    }

    const char* name() const override { return "flatten"; }

  private:
    std::vector<int> in_shape_;
};

/// {C, L} -> {L, C}; feeds channel vectors to the LSTM as time steps.
class Transpose final : public Layer {
  public:
    Tensor forward(const Tensor& in) override {
        if (in.shape.size() != 2)
            throw std::invalid_argument("transpose: expected rank-2 input");
        rows_ = in.shape[0];
        cols_ = in.shape[1];
        Tensor out({cols_, rows_});
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c)
                out.at(c, r) = in.at(r, c);
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in({rows_, cols_});
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c)
                grad_in.at(r, c) = grad_out.at(c, r);
        return grad_in;
    }

    const char* name() const override { return "transpose"; }

  private:
    int rows_ = 0, cols_ = 0;
};

class Lstm final : public Layer {
  public:
    Lstm(int input_dim, int hidden, std::uint64_t& rng) : d_(input_dim), h_(hidden) {
        wx_.w.resize(static_cast<std::size_t>(4 * hidden) * static_cast<std::size_t>(input_dim));
        detail::xavier_fill(wx_.w, input_dim, hidden, rng);
        wx_.g.assign(wx_.w.size(), 0.0);
        wh_.w.resize(static_cast<std::size_t>(4 * hidden) * static_cast<std::size_t>(hidden));
        detail::xavier_fill(wh_.w, hidden, hidden, rng);
        wh_.g.assign(wh_.w.size(), 0.0);
        b_.w.assign(static_cast<std::size_t>(4 * hidden), 0.0);
        for (int j = 0; j < hidden; ++j)
            b_.w[static_cast<std::size_t>(hidden + j)] = 1.0;  // forget-gate bias
        b_.g.assign(b_.w.size(), 0.0);
    }

    Tensor forward(const Tensor& in) override {
        LstmParams p = params();
        std::vector<double> h = lstm_forward(in, p, &cache_);
        t_steps_ = in.shape[0];
        Tensor out({h_});
        out.data = std::move(h);
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        LstmParams p = params();
        Tensor grad_seq({t_steps_, d_});
        std::vector<double> dh = grad_out.data;
        std::vector<double> dc(static_cast<std::size_t>(h_), 0.0);
        std::vector<double> dz(static_cast<std::size_t>(4 * h_));
        for (int t = t_steps_ - 1; t >= 0; --t) {
            const auto ti = static_cast<std::size_t>(t);
            for (int j = 0; j < h_; ++j) {
                const auto ji = static_cast<std::size_t>(j);
                double vo = cache_.o[ti][ji], vi = cache_.i[ti][ji], vf = cache_.f[ti][ji];
                double vg = cache_.g[ti][ji], tn = cache_.tanh_c[ti][ji];
                double dco = dc[ji] + dh[ji] * vo * (1.0 - tn * tn);
                double dzo = dh[ji] * tn * vo * (1.0 - vo);
                double dzi = dco * vg * vi * (1.0 - vi);
                double dzf = dco * cache_.c_prev[ti][ji] * vf * (1.0 - vf);
                double dzg = dco * vi * (1.0 - vg * vg);
                dz[ji] = dzi;
                dz[static_cast<std::size_t>(h_) + ji] = dzf;
                dz[static_cast<std::size_t>(2 * h_) + ji] = dzg;
                dz[static_cast<std::size_t>(3 * h_) + ji] = dzo;
                dc[ji] = dco * vf;
            }
            double* dx = &grad_seq.at(t, 0);
            std::fill(dh.begin(), dh.end(), 0.0);
            for (int r = 0; r < 4 * h_; ++r) {
                const auto ri = static_cast<std::size_t>(r);
                const double dzr = dz[ri];
                if (dzr == 0.0)
                    continue;
                b_.g[ri] += dzr;
                double* gwx = &wx_.g[ri * static_cast<std::size_t>(d_)];
                const double* wx = &p.wx.at(r, 0);
                const double* xt = cache_.x[ti].data();
                for (int j = 0; j < d_; ++j) {
                    gwx[j] += dzr * xt[j];
                    dx[j] += wx[j] * dzr;
                }
                double* gwh = &wh_.g[ri * static_cast<std::size_t>(h_)];
                const double* wh = &p.wh.at(r, 0);
                const double* hp = cache_.h_prev[ti].data();
                for (int j = 0; j < h_; ++j) {
                    gwh[j] += dzr * hp[j];
                    dh[static_cast<std::size_t>(j)] += wh[j] * dzr;
                }
            }
        }
        return grad_seq;
    }

    void collect(std::vector<ParamBlock*>& out) override {
        out.push_back(&wx_);
        out.push_back(&wh_);
        out.push_back(&b_);
    }
    const char* name() const override { return "lstm"; }

  private:
    LstmParams params() const {
        LstmParams p;
        p.hidden = h_;
        p.wx = Tensor({4 * h_, d_}, wx_.w);
        p.wh = Tensor({4 * h_, h_}, wh_.w);
        p.b = b_.w;
        return p;
    }

    int d_, h_;
    ParamBlock wx_, wh_, b_;
    LstmCache cache_;
    int t_steps_ = 0;
};

class Dense final : public Layer {
  public:
    Dense(int in_dim, int out_dim, std::uint64_t& rng) : in_(in_dim), out_(out_dim) {
        w_.w.resize(static_cast<std::size_t>(out_dim) * static_cast<std::size_t>(in_dim));
        detail::xavier_fill(w_.w, in_dim, out_dim, rng);
        w_.g.assign(w_.w.size(), 0.0);
        b_.w.assign(static_cast<std::size_t>(out_dim), 0.0);
        b_.g.assign(b_.w.size(), 0.0);
    }

    Tensor forward(const Tensor& in) override {
        if (static_cast<int>(in.data.size()) != in_)
            throw std::invalid_argument("dense: input width mismatch");
        x_ = in.data;
        Tensor out({out_});
        for (int r = 0; r < out_; ++r) {
            const double* w = &w_.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(in_)];
            double sum = b_.w[static_cast<std::size_t>(r)];
            for (int j = 0; j < in_; ++j)
                sum += w[j] * x_[static_cast<std::size_t>(j)];
            out.at(r) = sum;
        }
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor grad_in({in_});
        for (int r = 0; r < out_; ++r) {
            const double g = grad_out.at(r);
            b_.g[static_cast<std::size_t>(r)] += g;
            const auto row = static_cast<std::size_t>(r) * static_cast<std::size_t>(in_);
            for (int j = 0; j < in_; ++j) {
                w_.g[row + static_cast<std::size_t>(j)] += g * x_[static_cast<std::size_t>(j)];
                grad_in.at(j) += w_.w[row + static_cast<std::size_t>(j)] * g;
            }
        }
        return grad_in;
    }

    void collect(std::vector<ParamBlock*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }
    const char* name() const override { return "dense"; }

  private:
    int in_, out_;
    ParamBlock w_, b_;
    std::vector<double> x_;
};

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        total += p[i];
    }
    for (auto& v : p)
        v /= total;
    return p;
}

inline double cross_entropy(const std::vector<double>& proba, int label) {
    return -std::log(std::max(proba[static_cast<std::size_t>(label)], 1e-300));
}

struct ModelSpec {
    std::string kind;  // "rf" or "ecg"
    int signal_len = 0;
    int channels = 0;
    int image_h = 0;
    int image_w = 0;
    int n_features = 0;
    int n_classes = 0;
    std::uint64_t init_seed = 0;
};

/// Two input branches fused by concatenation ahead of a dense softmax head.
class Model {
  public:
    ModelSpec spec;
    std::vector<std::unique_ptr<Layer>> branch_a;
    std::vector<std::unique_ptr<Layer>> branch_b;
    std::unique_ptr<Dense> head;

    Tensor forward(const Tensor& in_a, const Tensor& in_b) {
        Tensor a = in_a;
        for (auto& layer : branch_a)
            a = layer->forward(a);
        Tensor b = in_b;
        for (auto& layer : branch_b)
            b = layer->forward(b);
        na_ = static_cast<int>(a.data.size());
        nb_ = static_cast<int>(b.data.size());
        Tensor joined({na_ + nb_});
        std::copy(a.data.begin(), a.data.end(), joined.data.begin());
        std::copy(b.data.begin(), b.data.end(),
                  joined.data.begin() + static_cast<std::ptrdiff_t>(na_));
        return head->forward(joined);
    }

    void backward(const Tensor& grad_logits) {
        Tensor grad_joined = head->backward(grad_logits);
        Tensor ga({na_});
        std::copy(grad_joined.data.begin(), grad_joined.data.begin() + na_, ga.data.begin());
        Tensor gb({nb_});
        std::copy(grad_joined.data.begin() + na_, grad_joined.data.end(), gb.data.begin());
        for (auto it = branch_a.rbegin(); it != branch_a.rend(); ++it)
            ga = (*it)->backward(ga);
        for (auto it = branch_b.rbegin(); it != branch_b.rend(); ++it)
            gb = (*it)->backward(gb);
    }

    std::vector<ParamBlock*> blocks() {
        std::vector<ParamBlock*> out;
        for (auto& layer : branch_a)
            layer->collect(out);
        for (auto& layer : branch_b)
            layer->collect(out);
        head->collect(out);
        return out;
    }

    std::vector<std::pair<std::string, ParamBlock*>> blocks_by_layer() {
        std::vector<std::pair<std::string, ParamBlock*>> out;
        auto grab = [&](Layer& layer) {
            std::vector<ParamBlock*> tmp;
            layer.collect(tmp);
            for (auto* block : tmp)
                out.emplace_back(layer.name(), block);
        };
        for (auto& layer : branch_a)
            grab(*layer);
        for (auto& layer : branch_b)
            grab(*layer);
        grab(*head);
        return out;
    }

    void zero_grads() {
        for (auto* block : blocks())
            block->zero_grad();
    }

    void set_frozen(bool on) {
        for (auto& layer : branch_a)
            layer->set_frozen(on);
        for (auto& layer : branch_b)
            layer->set_frozen(on);
        head->set_frozen(on);
    }

    std::vector<double> predict_proba(const Tensor& in_a, const Tensor& in_b) {
        Tensor logits = forward(in_a, in_b);
        if (!logits.all_finite())
            throw std::runtime_error("model forward produced non-finite logits");
        return softmax(logits.data);
    }

  private:
    int na_ = 0, nb_ = 0;
};

namespace detail {

inline int pooled(int len, int size, int stride) { return (len - size) / stride + 1; }

inline void check_dim(int v, const char* what) {
    if (v < 1)
        throw std::invalid_argument(std::string("model build: ") + what +
                                    " collapses below 1 sample; enlarge the input");
}

inline void build_image_branch(Model& m, int image_h, int image_w, std::uint64_t& rng,
                               int& flat_out) {
    m.branch_b.push_back(std::make_unique<Conv2d>(1, 32, 3, rng));
    int h = image_h - 2, w = image_w - 2;
    check_dim(h, "conv2d #1 height");
    check_dim(w, "conv2d #1 width");
    m.branch_b.push_back(std::make_unique<Relu>());
    m.branch_b.push_back(std::make_unique<MaxPool2d>(2, 2));
    h = pooled(h, 2, 2);
    w = pooled(w, 2, 2);
    check_dim(h, "maxpool2d #1 height");
    m.branch_b.push_back(std::make_unique<Conv2d>(32, 64, 3, rng));
    h -= 2;
    w -= 2;
    check_dim(h, "conv2d #2 height");
    check_dim(w, "conv2d #2 width");
    m.branch_b.push_back(std::make_unique<Relu>());
    m.branch_b.push_back(std::make_unique<MaxPool2d>(2, 2));
    h = pooled(h, 2, 2);
    w = pooled(w, 2, 2);
    check_dim(h, "maxpool2d #2 height");
    m.branch_b.push_back(std::make_unique<Flatten>());
    flat_out = 64 * h * w;
}

}  // namespace detail

/// The Y-shaped fusion network. Branch A consumes the {channels, signal_len}
/// pair (normalized series + spectrum), branch B the {1, H, W} scaleogram.
inline Model build_rf_model(int signal_len, int channels, std::pair<int, int> image_hw,
                            int n_classes, std::uint64_t seed) {
    if (n_classes < 2)
        throw std::invalid_argument("model build: need at least 2 classes");
    Model m;
    m.spec = {"rf", signal_len, channels, image_hw.first, image_hw.second, 0, n_classes, seed};
    std::uint64_t rng = seedmix::derive(seed, 0xA0);

    m.branch_a.push_back(std::make_unique<Conv1d>(channels, 32, 7, rng));
    int len = signal_len - 6;
    detail::check_dim(len, "conv1d #1 length");
    m.branch_a.push_back(std::make_unique<Relu>());
    m.branch_a.push_back(std::make_unique<MaxPool1d>(2, 2));
    len = detail::pooled(len, 2, 2);
    detail::check_dim(len - 6, "conv1d #2 length");
    m.branch_a.push_back(std::make_unique<Conv1d>(32, 64, 7, rng));
    len -= 6;
    m.branch_a.push_back(std::make_unique<Relu>());
    m.branch_a.push_back(std::make_unique<MaxPool1d>(2, 2));
    len = detail::pooled(len, 2, 2);
    detail::check_dim(len, "maxpool1d #2 length");
    m.branch_a.push_back(std::make_unique<Transpose>());
    m.branch_a.push_back(std::make_unique<Lstm>(64, 64, rng));

    int flat_b = 0;
    detail::build_image_branch(m, image_hw.first, image_hw.second, rng, flat_b);
    m.head = std::make_unique<Dense>(64 + flat_b, n_classes, rng);
    return m;
}

/// The ECG variant: the recurrent branch is replaced by dense(32)+relu over
/// the selected feature vector; the image branch is unchanged.
inline Model build_ecg_model(std::pair<int, int> image_hw, int n_features, int n_classes,
                             std::uint64_t seed) {
    if (n_classes < 2)
        throw std::invalid_argument("model build: need at least 2 classes");
    if (n_features < 1)
        throw std::invalid_argument("model build: need at least 1 feature");
    Model m;
    m.spec = {"ecg", 0, 0, image_hw.first, image_hw.second, n_features, n_classes, seed};
    std::uint64_t rng = seedmix::derive(seed, 0xA1);

    m.branch_a.push_back(std::make_unique<Dense>(n_features, 32, rng));
    m.branch_a.push_back(std::make_unique<Relu>());

    int flat_b = 0;
    detail::build_image_branch(m, image_hw.first, image_hw.second, rng, flat_b);
    m.head = std::make_unique<Dense>(32 + flat_b, n_classes, rng);
    return m;
}

inline Model build_from_spec(const ModelSpec& spec) {
    if (spec.kind == "rf")
        return build_rf_model(spec.signal_len, spec.channels, {spec.image_h, spec.image_w},
                              spec.n_classes, spec.init_seed);
    if (spec.kind == "ecg")
        return build_ecg_model({spec.image_h, spec.image_w}, spec.n_features, spec.n_classes,
                               spec.init_seed);
    throw std::invalid_argument("unknown model kind '" + spec.kind + "'");
}

struct NnSample {
    Tensor a;
    Tensor b;
    int label = 0;
};

struct TrainConfig {
    enum class Optimizer { sgd, adam };
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-3;
    int batch_size = 8;
    int epochs = 30;
    std::uint64_t seed = 1;
    double stop_loss = 0.0;  // > 0: stop once the epoch mean loss drops below
};

/// Mini-batch training on softmax cross-entropy. Batch order comes from a
/// per-epoch permutation derived from the seed, so results do not depend on
/// scheduling. Returns the per-epoch mean loss trace.
inline std::vector<double> train(Model& m, const std::vector<NnSample>& data,
                                 const TrainConfig& cfg) {
    if (data.empty())
        throw std::invalid_argument("train: empty dataset");
    if (cfg.learning_rate < 0.0)
        throw std::invalid_argument("train: negative learning rate");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("train: epochs and batch_size must be >= 1");
    for (const auto& s : data)
        if (s.label < 0 || s.label >= m.spec.n_classes)
            throw std::invalid_argument("train: label out of range");

    std::vector<ParamBlock*> blocks = m.blocks();
    std::vector<std::vector<double>> adam_m(blocks.size()), adam_v(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        adam_m[i].assign(blocks[i]->w.size(), 0.0);
        adam_v[i].assign(blocks[i]->w.size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    std::vector<double> trace;
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::uint64_t rng = seedmix::derive(cfg.seed, 0xE0, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = perm.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(seedmix::next(rng) % i);
            std::swap(perm[i - 1], perm[j]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(perm.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const auto batch_n = static_cast<double>(stop - start);
            m.zero_grads();
            for (std::size_t i = start; i < stop; ++i) {
                const NnSample& s = data[perm[i]];
                Tensor logits = m.forward(s.a, s.b);
                std::vector<double> proba = softmax(logits.data);
                epoch_loss += cross_entropy(proba, s.label);
                Tensor grad({m.spec.n_classes});
                for (int c = 0; c < m.spec.n_classes; ++c)
                    grad.at(c) = (proba[static_cast<std::size_t>(c)] -
                                  (c == s.label ? 1.0 : 0.0)) /
                                 batch_n;
                m.backward(grad);
            }
            ++step;
            for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                ParamBlock& block = *blocks[bi];
                if (cfg.optimizer == TrainConfig::Optimizer::sgd) {
                    for (std::size_t j = 0; j < block.w.size(); ++j)
                        block.w[j] -= cfg.learning_rate * block.g[j];
                    continue;
                }
                const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t j = 0; j < block.w.size(); ++j) {
                    adam_m[bi][j] = beta1 * adam_m[bi][j] + (1.0 - beta1) * block.g[j];
                    adam_v[bi][j] = beta2 * adam_v[bi][j] + (1.0 - beta2) * block.g[j] * block.g[j];
                    block.w[j] -= cfg.learning_rate * (adam_m[bi][j] / bc1) /
                                  (std::sqrt(adam_v[bi][j] / bc2) + eps);
                }
            }
        }
        epoch_loss /= static_cast<double>(data.size());
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error(
                "train: loss became non-finite at epoch " + std::to_string(epoch) +
                "; reduce learning_rate (current " + std::to_string(cfg.learning_rate) + ")");
        trace.push_back(epoch_loss);
        if (cfg.stop_loss > 0.0 && epoch_loss < cfg.stop_loss)
            break;
    }
    return trace;
}

/// Central-difference check of every parameter block; samples up to 200
/// parameters per block. Relu masks and pool routing stay pinned to the
/// analytic pass while probing, so a near-tie selection cannot flip inside
/// the +/-h window and measure across two linear regions. Gradients under
/// 1e-6 are held to absolute agreement instead of relative: differencing an
/// O(1) loss leaves rounding noise near 1e-11. Returns the max relative
/// error.
inline double gradient_check(Model& m, const NnSample& sample, double h = 1e-5,
                             std::uint64_t seed = 42) {
    auto loss_now = [&]() {
        Tensor logits = m.forward(sample.a, sample.b);
        return cross_entropy(softmax(logits.data), sample.label);
    };
    m.zero_grads();
    Tensor logits = m.forward(sample.a, sample.b);
    std::vector<double> proba = softmax(logits.data);
    Tensor grad({m.spec.n_classes});
    for (int c = 0; c < m.spec.n_classes; ++c)
        grad.at(c) = proba[static_cast<std::size_t>(c)] - (c == sample.label ? 1.0 : 0.0);
    m.backward(grad);

    double worst = 0.0;
    std::uint64_t rng = seedmix::derive(seed, 0xC0);
    m.set_frozen(true);
    for (auto* block : m.blocks()) {
        const std::size_t n = block->w.size();
        const std::size_t samples = std::min<std::size_t>(n, 200);
        for (std::size_t s = 0; s < samples; ++s) {
            std::size_t j = samples == n
                                ? s
                                : static_cast<std::size_t>(seedmix::next(rng) %
                                                           static_cast<std::uint64_t>(n));
            const double keep = block->w[j];
            block->w[j] = keep + h;
            const double up = loss_now();
            block->w[j] = keep - h;
            const double down = loss_now();
            block->w[j] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = block->g[j];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    m.set_frozen(false);
    return worst;
}

inline constexpr const char* kCheckpointMagic = "RFAFFECT-NN-v1";

inline void save_checkpoint(std::ostream& os, Model& m) {
    os << kCheckpointMagic << '\n';
    const ModelSpec& s = m.spec;
    os << s.kind << ' ' << s.signal_len << ' ' << s.channels << ' ' << s.image_h << ' '
       << s.image_w << ' ' << s.n_features << ' ' << s.n_classes << ' ' << s.init_seed << '\n';
    std::size_t total = 0;
    for (auto* block : m.blocks())
        total += block->w.size();
    os << total << '\n';
    for (auto* block : m.blocks())
        os.write(reinterpret_cast<const char*>(block->w.data()),
                 static_cast<std::streamsize>(block->w.size() * sizeof(double)));
    if (!os)
        throw std::runtime_error("checkpoint save: stream failure");
}

inline Model load_checkpoint(std::istream& is) {
    std::string magic;
    if (!std::getline(is, magic) || magic != kCheckpointMagic)
        throw std::runtime_error("checkpoint load: bad magic line");
    ModelSpec s;
    std::string header;
    if (!std::getline(is, header))
        throw std::runtime_error("checkpoint load: missing spec line");
    std::istringstream hs(header);
    if (!(hs >> s.kind >> s.signal_len >> s.channels >> s.image_h >> s.image_w >> s.n_features >>
          s.n_classes >> s.init_seed))
        throw std::runtime_error("checkpoint load: malformed spec line");
    std::string count_line;
    if (!std::getline(is, count_line))
        throw std::runtime_error("checkpoint load: missing parameter count");
    const auto expected = static_cast<std::size_t>(std::stoull(count_line));

    Model m = build_from_spec(s);
    std::size_t total = 0;
    for (auto* block : m.blocks())
        total += block->w.size();
    if (total != expected)
        throw std::runtime_error("checkpoint load: parameter count mismatch");
    for (auto* block : m.blocks()) {
        is.read(reinterpret_cast<char*>(block->w.data()),
                static_cast<std::streamsize>(block->w.size() * sizeof(double)));
        if (!is)
            throw std::runtime_error("checkpoint load: truncated parameter block");
    }
    return m;
}

}  // namespace nn

}  // namespace rfaffect
