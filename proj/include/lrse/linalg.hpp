#pragma once

// Dense real linear algebra for the secure kNN construction: conditioned random
// invertible matrices, inversion with a residual contract, transpose products.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "lrse/rng.hpp"

namespace lrse::linalg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultCondMax = 1e6;
/// Condition numbers above this are treated as singular by invert().
inline constexpr double kSingularCondLimit = 1e12;
inline constexpr int kMaxRedraws = 64;

class LinalgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Induced 1-norm: maximum absolute column sum.
inline double norm1(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

struct Inversion {
    Matrix inverse;
    double cond1 = 0.0;  // ||M||_1 * ||M^-1||_1
};

namespace detail {

inline void check_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw LinalgError("invert: matrix must be square and non-empty");
    }
    if (!m.allFinite()) throw LinalgError("invert: non-finite entry");
}

/// Inverse from an existing factorization; throws when the factor's rcond
/// estimate or the exact 1-norm condition number exceeds `limit`.
inline Inversion inverse_from(const Matrix& m, const Eigen::PartialPivLU<Matrix>& lu, double limit) {
    const double rcond = lu.rcond();
    if (!(rcond > 1.0 / limit)) {
        throw LinalgError("invert: condition estimate " + std::to_string(1.0 / rcond) + " exceeds " +
                          std::to_string(limit));
    }
    Inversion out;
    out.inverse = lu.inverse();
    if (!out.inverse.allFinite()) throw LinalgError("invert: non-finite inverse");
    out.cond1 = norm1(m) * norm1(out.inverse);
    if (!(out.cond1 <= limit)) {
        throw LinalgError("invert: condition number " + std::to_string(out.cond1) + " exceeds " +
                          std::to_string(limit));
    }
    return out;
}

}  // namespace detail

/// LU with partial pivoting. Throws LinalgError when M is singular or its
/// 1-norm condition number exceeds kSingularCondLimit.
inline Inversion invert_with_condition(const Matrix& m) {
    detail::check_square(m);
    Eigen::PartialPivLU<Matrix> lu(m);
    return detail::inverse_from(m, lu, kSingularCondLimit);
}

inline Matrix invert(const Matrix& m) { return invert_with_condition(m).inverse; }

struct ConditionedMatrix {
    Matrix matrix;
    Matrix inverse;
    double cond1 = 0.0;
    int draws = 0;
};

/// Draws i.i.d. standard-normal entries (row-major order) from `rng` until the
/// 1-norm condition number is at most cond_max; gives up after kMaxRedraws.
/// The LU's rcond estimate screens draws before the inverse is formed.
inline ConditionedMatrix random_invertible_from(Eigen::Index d, Rng& rng, double cond_max) {
    if (d < 1) throw LinalgError("random_invertible: order must be >= 1");
    if (!(cond_max > 1.0)) throw LinalgError("random_invertible: cond_max must be > 1");

    std::normal_distribution<double> normal(0.0, 1.0);
    ConditionedMatrix out;
    out.matrix.resize(d, d);
    for (int draw = 1; draw <= kMaxRedraws; ++draw) {
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) out.matrix(i, j) = normal(rng);
        }
        try {
            Eigen::PartialPivLU<Matrix> lu(out.matrix);
            auto inv = detail::inverse_from(out.matrix, lu, std::min(cond_max, kSingularCondLimit));
            out.inverse = std::move(inv.inverse);
            out.cond1 = inv.cond1;
            out.draws = draw;
            return out;
        } catch (const LinalgError&) {
            // too ill-conditioned; redraw
        }
    }
    throw LinalgError("random_invertible: no draw met cond_max " + std::to_string(cond_max) +
                      " after " + std::to_string(kMaxRedraws) + " attempts");
}

inline ConditionedMatrix random_invertible_with_inverse(Eigen::Index d, std::uint64_t seed,
                                                        double cond_max = kDefaultCondMax) {
    Rng rng(seed);
    return random_invertible_from(d, rng, cond_max);
}

inline Matrix random_invertible(Eigen::Index d, std::uint64_t seed,
                                double cond_max = kDefaultCondMax) {
    return random_invertible_with_inverse(d, seed, cond_max).matrix;
}

/// Computes M^T v.
inline Vector mat_vec_T(const Matrix& m, const Vector& v) {
    if (m.rows() != v.size()) {
        throw LinalgError("mat_vec_T: dimension mismatch (" + std::to_string(m.rows()) + " rows vs " +
                          std::to_string(v.size()) + ")");
    }
    return m.transpose() * v;
}

/// Computes M v.
inline Vector mat_vec(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size()) {
        throw LinalgError("mat_vec: dimension mismatch (" + std::to_string(m.cols()) + " cols vs " +
                          std::to_string(v.size()) + ")");
    }
    return m * v;
}

inline double max_abs_deviation_from_identity(const Matrix& product) {
    return (product - Matrix::Identity(product.rows(), product.cols())).cwiseAbs().maxCoeff();
}

}  // namespace lrse::linalg
