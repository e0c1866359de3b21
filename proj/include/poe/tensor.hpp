#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "poe/common.hpp"
#include "poe/rng.hpp"

namespace poe {

// Dense row-major tensor of 64-bit floats. Rank is 1 or 2 in practice
// (scalars are stored as {1, 1}).
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<std::size_t>(numel()), 0.0);
    }

    Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        require(static_cast<std::int64_t>(data_.size()) == numel(), ErrorKind::usage,
                "Tensor: data length does not match shape");
    }

    static Tensor zeros(std::int64_t rows, std::int64_t cols) {
        return Tensor({rows, cols});
    }

    static Tensor scalar(double value) {
        return Tensor({1, 1}, {value});
    }

    static Tensor row(std::vector<double> values) {
        const auto n = static_cast<std::int64_t>(values.size());
        return Tensor({1, n}, std::move(values));
    }

    static Tensor column(std::vector<double> values) {
        const auto n = static_cast<std::int64_t>(values.size());
        return Tensor({n, 1}, std::move(values));
    }

    static Tensor full(std::vector<std::int64_t> shape, double value) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) {
            x = value;
        }
        return t;
    }

    static Tensor uniform(std::vector<std::int64_t> shape, Rng& rng, double lo, double hi) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) {
            x = rng.uniform(lo, hi);
        }
        return t;
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::int64_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (std::int64_t d : shape_) {
            n *= d;
        }
        return shape_.empty() ? 0 : n;
    }

    bool is_scalar() const { return numel() == 1; }

    double scalar_value() const {
        require(is_scalar(), ErrorKind::usage, "scalar_value on non-scalar tensor");
        return data_[0];
    }

    double& at(std::int64_t r, std::int64_t c) {
        return data_[static_cast<std::size_t>(r * cols() + c)];
    }
    double at(std::int64_t r, std::int64_t c) const {
        return data_[static_cast<std::size_t>(r * cols() + c)];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (double x : data_) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
        return true;
    }

    bool bitwise_equal(const Tensor& other) const {
        if (shape_ != other.shape_) {
            return false;
        }
        return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
    }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a_bytes(data_.data(), data_.size() * sizeof(double));
        for (std::int64_t d : shape_) {
            h = fnv1a_bytes(&d, sizeof(d), h);
        }
        return h;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : data_) {
            m = std::max(m, std::abs(x));
        }
        return m;
    }

    std::string shape_string() const {
        std::ostringstream out;
        out << "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            out << (i ? "," : "") << shape_[i];
        }
        out << "]";
        return out.str();
    }

private:
    void validate_shape() const {
        require(!shape_.empty(), ErrorKind::usage, "Tensor: empty shape");
        for (std::int64_t d : shape_) {
            require(d > 0, ErrorKind::usage, "Tensor: non-positive dimension");
        }
    }

    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

// ---- plain matrix kernels shared by forward and backward ----

// C += A(m,k) * B(k,n)
inline void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const double aip = a.at(i, p);
            if (aip == 0.0) {
                continue;
            }
            for (std::int64_t j = 0; j < n; ++j) {
                c.at(i, j) += aip * b.at(p, j);
            }
        }
    }
}

// C += A(m,k) * B(n,k)^T
inline void matmul_trans_b_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::int64_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t p = 0; p < k; ++p) {
                acc += a.at(i, p) * b.at(j, p);
            }
            c.at(i, j) += acc;
        }
    }
}

// C += A(k,m)^T * B(k,n)
inline void matmul_trans_a_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::int64_t k = a.rows(), m = a.cols(), n = b.cols();
    for (std::int64_t p = 0; p < k; ++p) {
        for (std::int64_t i = 0; i < m; ++i) {
            const double api = a.at(p, i);
            if (api == 0.0) {
                continue;
            }
            for (std::int64_t j = 0; j < n; ++j) {
                c.at(i, j) += api * b.at(p, j);
            }
        }
    }
}

}  // namespace poe
