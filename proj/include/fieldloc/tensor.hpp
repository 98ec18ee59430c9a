#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fieldloc/errors.hpp"
#include "fieldloc/rng.hpp"

namespace fieldloc {

// Dense row-major tensor of doubles. Rank 1 or 2 in practice; the shape
// vector keeps the two cases uniform.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)),
          data(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<>()),
               fill) {}

    static Tensor row(std::initializer_list<double> vals) {
        Tensor t({1, vals.size()});
        std::copy(vals.begin(), vals.end(), t.data.begin());
        return t;
    }
    static Tensor vec(std::initializer_list<double> vals) {
        Tensor t({vals.size()});
        std::copy(vals.begin(), vals.end(), t.data.begin());
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const {
        if (shape.size() >= 2) return shape[1];
        return shape.empty() ? 1 : 1;
    }
    bool is_scalar() const { return numel() == 1; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i)
        s += (i ? "x" : "") + std::to_string(t.shape[i]);
    return s + "]";
}

inline void check_finite(const Tensor& t, const char* what) {
    for (double v : t.data)
        if (!std::isfinite(v))
            throw NumericError(std::string("non-finite value after op: ") + what);
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline ECMap as_mat(const Tensor& t) {
    return ECMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.numel() / t.rows()));
}
inline EMap as_mat(Tensor& t) {
    return EMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.numel() / t.rows()));
}

// Value-level kernels. The autodiff tape and the inference-only paths both
// call exactly these, which keeps forward values bit-identical between
// training and deployment code.
namespace kernels {

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
        throw DimensionError("matmul: incompatible shapes " + shape_str(a) +
                             " * " + shape_str(b));
    Tensor out({a.shape[0], b.shape[1]});
    as_mat(out).noalias() = as_mat(a) * as_mat(b);
    return out;
}

// A^T * B, used by backward passes.
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[0] != b.shape[0])
        throw DimensionError("matmul_tn: incompatible shapes");
    Tensor out({a.shape[1], b.shape[1]});
    as_mat(out).noalias() = as_mat(a).transpose() * as_mat(b);
    return out;
}

// A * B^T, used by backward passes.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[1])
        throw DimensionError("matmul_nt: incompatible shapes");
    Tensor out({a.shape[0], b.shape[0]});
    as_mat(out).noalias() = as_mat(a) * as_mat(b).transpose();
    return out;
}

inline Tensor softmax_rows(const Tensor& x) {
    if (x.shape.size() != 2) throw DimensionError("softmax_rows: rank-2 input required");
    Tensor out = x;
    auto m = as_mat(out);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
    return out;
}

inline Tensor mean_pool(const Tensor& x) {
    if (x.shape.size() != 2 || x.shape[0] == 0)
        throw ContractError("mean_pool: non-empty rank-2 input required");
    Tensor out({x.shape[1]});
    EMap(out.data.data(), 1, static_cast<Eigen::Index>(x.shape[1])) =
        as_mat(x).colwise().mean();
    return out;
}

inline Tensor transpose(const Tensor& x) {
    if (x.shape.size() != 2) throw DimensionError("transpose: rank-2 input required");
    Tensor out({x.shape[1], x.shape[0]});
    as_mat(out) = as_mat(x).transpose();
    return out;
}

inline Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    if (x.shape.size() != 2) throw DimensionError("slice_cols: rank-2 input required");
    if (c0 >= c1 || c1 > x.shape[1]) throw DimensionError("slice_cols: bad column range");
    Tensor out({x.shape[0], c1 - c0});
    for (std::size_t r = 0; r < x.shape[0]; ++r)
        std::copy(x.data.begin() + r * x.shape[1] + c0,
                  x.data.begin() + r * x.shape[1] + c1,
                  out.data.begin() + r * (c1 - c0));
    return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    if (a.shape.size() != b.shape.size())
        throw DimensionError("concat: rank mismatch");
    const int rank = static_cast<int>(a.shape.size());
    if (axis < 0 || axis >= rank) throw DimensionError("concat: axis out of range");
    for (int i = 0; i < rank; ++i)
        if (i != axis && a.shape[i] != b.shape[i])
            throw DimensionError("concat: non-concat dims disagree");
    if (rank == 1) {
        Tensor out({a.shape[0] + b.shape[0]});
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
        return out;
    }
    if (axis == 0) {
        Tensor out({a.shape[0] + b.shape[0], a.shape[1]});
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
        return out;
    }
    Tensor out({a.shape[0], a.shape[1] + b.shape[1]});
    for (std::size_t r = 0; r < a.shape[0]; ++r) {
        std::copy(a.data.begin() + r * a.shape[1], a.data.begin() + (r + 1) * a.shape[1],
                  out.data.begin() + r * out.shape[1]);
        std::copy(b.data.begin() + r * b.shape[1], b.data.begin() + (r + 1) * b.shape[1],
                  out.data.begin() + r * out.shape[1] + a.shape[1]);
    }
    return out;
}

// Broadcast support is deliberately narrow: same shape, or a rank-1 vector
// against the trailing dimension of a rank-2 matrix. Anything else throws.
enum class Broadcast { kNone, kSame, kBRowVec, kARowVec };

inline Broadcast broadcast_kind(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return Broadcast::kSame;
    if (a.shape.size() == 2 && b.shape.size() == 1 && a.shape[1] == b.shape[0])
        return Broadcast::kBRowVec;
    if (b.shape.size() == 2 && a.shape.size() == 1 && b.shape[1] == a.shape[0])
        return Broadcast::kARowVec;
    return Broadcast::kNone;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F&& f, const char* what) {
    switch (broadcast_kind(a, b)) {
        case Broadcast::kSame: {
            Tensor out = a;
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = f(a.data[i], b.data[i]);
            return out;
        }
        case Broadcast::kBRowVec: {
            Tensor out = a;
            const std::size_t n = a.shape[1];
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = f(a.data[i], b.data[i % n]);
            return out;
        }
        case Broadcast::kARowVec: {
            Tensor out = b;
            const std::size_t n = b.shape[1];
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = f(a.data[i % n], b.data[i]);
            return out;
        }
        default:
            throw DimensionError(std::string(what) + ": shapes " + shape_str(a) +
                                 " and " + shape_str(b) + " do not broadcast");
    }
}

inline double softplus_scalar(double x) {
    // Overflow-safe: softplus(x) = max(x, 0) + log1p(exp(-|x|)).
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = scale * normal_unit(rng);
    return t;
}

}  // namespace kernels
}  // namespace fieldloc
