#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "daestab/errors.hpp"

namespace daestab {

using Vector = std::vector<double>;

// Dense real matrix, row-major, sized for small systems (a few hundred).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
    }
    Matrix(int rows, int cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), a_(std::move(entries)) {
        if (a_.size() != static_cast<std::size_t>(rows) * cols)
            throw DimensionError("entry count does not match rows*cols");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const noexcept { return a_; }

    bool all_finite() const {
        return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : a_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
        Matrix c(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i) {
            for (int k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    friend Vector operator*(const Matrix& a, const Vector& x) {
        if (a.cols_ != static_cast<int>(x.size()))
            throw DimensionError("matrix-vector shape mismatch");
        Vector y(a.rows_, 0.0);
        for (int i = 0; i < a.rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    // max_i sum_j |a_ij|
    double norm_inf() const {
        double best = 0.0;
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    double norm_fro() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double best = 0.0;
        for (double v : a_) best = std::max(best, std::abs(v));
        return best;
    }

private:
    void check_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionError("matrix shape mismatch");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// ---- vector helpers ------------------------------------------------------

inline double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm_inf(const Vector& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline Vector vsub(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector vadd(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector vscale(const Vector& a, double s) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return r;
}

// r = a + s*b
inline Vector vaxpy(const Vector& a, double s, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
}

// ---- LU factorization ----------------------------------------------------

// Partial-pivoting LU of a square matrix. A pivot below rel_tol * norm_inf(A)
// is treated as singular; the offending pivot magnitude is carried in the
// exception so callers can distinguish "invertible" from "degenerate" paths.
class LuFactor {
public:
    static constexpr double kDefaultRelTol = 1e-12;

    explicit LuFactor(const Matrix& a, double rel_tol = kDefaultRelTol) : lu_(a) {
        if (!a.square()) throw DimensionError("LU requires a square matrix");
        if (!a.all_finite()) throw NumericError("LU input has non-finite entries");
        n_ = a.rows();
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), 0);
        const double scale = std::max(a.norm_inf(), 1e-300);
        pivot_floor_ = rel_tol * scale;
        for (int k = 0; k < n_; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n_; ++i) {
                const double v = std::abs(lu_(i, k));
                if (v > best) { best = v; p = i; }
            }
            min_pivot_ = std::min(min_pivot_, best);
            if (best < pivot_floor_)
                throw SingularMatrixError(
                    "matrix singular to tolerance (pivot " + std::to_string(best) + ")", best);
            if (p != k) {
                for (int j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[k], perm_[p]);
                sign_ = -sign_;
            }
            const double piv = lu_(k, k);
            for (int i = k + 1; i < n_; ++i) {
                lu_(i, k) /= piv;
                const double m = lu_(i, k);
                if (m == 0.0) continue;
                for (int j = k + 1; j < n_; ++j) lu_(i, j) -= m * lu_(k, j);
            }
        }
    }

    int size() const noexcept { return n_; }
    double min_pivot() const noexcept { return min_pivot_; }

    Vector solve(const Vector& b) const {
        if (static_cast<int>(b.size()) != n_) throw DimensionError("rhs length mismatch");
        Vector x(n_);
        for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (int i = 1; i < n_; ++i) {
            double s = x[i];
            for (int j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = x[i];
            for (int j = i + 1; j < n_; ++j) s -= lu_(i, j) * x[j];
            x[i] = s / lu_(i, i);
        }
        return x;
    }

    Matrix solve(const Matrix& b) const {
        if (b.rows() != n_) throw DimensionError("rhs rows mismatch");
        Matrix x(n_, b.cols());
        Vector col(n_);
        for (int j = 0; j < b.cols(); ++j) {
            for (int i = 0; i < n_; ++i) col[i] = b(i, j);
            Vector s = solve(col);
            for (int i = 0; i < n_; ++i) x(i, j) = s[i];
        }
        return x;
    }

    Matrix inverse() const { return solve(Matrix::identity(n_)); }

    double determinant() const {
        double d = sign_;
        for (int i = 0; i < n_; ++i) d *= lu_(i, i);
        return d;
    }

private:
    Matrix lu_;
    std::vector<int> perm_;
    int n_ = 0;
    int sign_ = 1;
    double min_pivot_ = std::numeric_limits<double>::infinity();
    double pivot_floor_ = 0.0;
};

// Solves A X = B; see LuFactor for the singularity contract.
inline Matrix linear_solve(const Matrix& a, const Matrix& b) {
    return LuFactor(a).solve(b);
}

inline Vector linear_solve(const Matrix& a, const Vector& b) {
    return LuFactor(a).solve(b);
}

// Pivot test only; never throws on singular input.
inline bool is_invertible(const Matrix& a, double rel_tol = LuFactor::kDefaultRelTol) {
    if (!a.square()) return false;
    if (a.rows() == 0) return true;
    try {
        LuFactor f(a, rel_tol);
        return true;
    } catch (const SingularMatrixError&) {
        return false;
    }
}

} // namespace daestab
