#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rfaffect {

/// Dense n-dimensional real array, row-major.
struct Tensor {
    std::vector<double> data;
    std::vector<int> shape;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(count(shape)), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d) : data(std::move(d)), shape(std::move(s)) {
        if (data.size() != static_cast<std::size_t>(count(shape)))
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    static long count(const std::vector<int>& s) {
        long n = 1;
        for (int dim : s) {
            if (dim <= 0)
                throw std::invalid_argument("Tensor: nonpositive dimension");
            n *= dim;
        }
        return n;
    }

    std::size_t size() const { return data.size(); }

    double& at(int i) { return data[static_cast<std::size_t>(i)]; }
    const double& at(int i) const { return data[static_cast<std::size_t>(i)]; }

    // 2-D and 3-D indexers; shape checked only via offset arithmetic.
    double& at(int i, int j) { return data[static_cast<std::size_t>(i * shape[1] + j)]; }
    const double& at(int i, int j) const {
        return data[static_cast<std::size_t>(i * shape[1] + j)];
    }
    double& at(int i, int j, int k) {
        return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    const double& at(int i, int j, int k) const {
        return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    double& at(int i, int j, int k, int l) {
        return data[static_cast<std::size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
    const double& at(int i, int j, int k, int l) const {
        return data[static_cast<std::size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v))
                return false;
        return true;
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace rfaffect
