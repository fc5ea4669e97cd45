#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "daestab/matrix.hpp"

namespace daestab {

// Full eigenvalue set of a real square matrix.
struct Spectrum {
    std::vector<std::complex<double>> values; // sorted by (re, im)
    std::vector<int> multiplicity;            // cluster size per entry

    double spectral_abscissa() const {
        double a = -std::numeric_limits<double>::infinity();
        for (const auto& z : values) a = std::max(a, z.real());
        return a;
    }
};

namespace detail {

inline double sign_like(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Osborne balancing: diagonal similarity scaling by powers of 2 to make
// row and column norms comparable. Eigenvalues are unchanged.
inline void balance(Matrix& a) {
    const int n = a.rows();
    const double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (int i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0;
            const double s = c + r;
            while (c < r / radix) { c *= radix; r /= radix; f *= radix; }
            while (c >= r * radix) { c /= radix; r *= radix; f /= radix; }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double g = 1.0 / f;
                for (int j = 0; j < n; ++j) a(i, j) *= g;
                for (int j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form (similarity, in place).
inline void hessenberg(Matrix& a) {
    const int n = a.rows();
    Vector v(n);
    for (int k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (int i = k + 1; i < n; ++i) scale = std::max(scale, std::abs(a(i, k)));
        if (scale == 0.0) continue;
        double xnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) {
            v[i] = a(i, k) / scale;
            xnorm2 += v[i] * v[i];
        }
        const double alpha = -sign_like(std::sqrt(xnorm2), v[k + 1]);
        double vtv = xnorm2 - 2.0 * alpha * v[k + 1] + alpha * alpha;
        v[k + 1] -= alpha;
        if (vtv <= 0.0) continue;
        const double beta = 2.0 / vtv;
        // A := P A, rows k+1..n-1
        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (int i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // A := A P, cols k+1..n-1
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (int j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = alpha * scale;
        for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only,
// classic EISPACK HQR scheme). Throws NumericError if a block does not
// deflate within the iteration budget.
inline std::vector<std::complex<double>> hqr(Matrix& a) {
    const int n = a.rows();
    std::vector<std::complex<double>> w(n);
    const double eps = std::numeric_limits<double>::epsilon();

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
    if (anorm == 0.0) anorm = 1.0;

    int nn = n - 1;
    double t = 0.0;
    long total_its = 0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                w[nn--] = std::complex<double>(x + t, 0.0);
            } else {
                double y = a(nn - 1, nn - 1);
                double ww = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_like(z, p);
                        double r1 = x + z;
                        double r2 = (z != 0.0) ? x - ww / z : x + z;
                        w[nn - 1] = std::complex<double>(r1, 0.0);
                        w[nn] = std::complex<double>(r2, 0.0);
                    } else {
                        w[nn - 1] = std::complex<double>(x + p, z);
                        w[nn] = std::complex<double>(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (its == 40)
                        throw NumericError("eigenvalue QR iteration failed to converge",
                                           total_its);
                    if (its == 10 || its == 20) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s =
                            std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    ++total_its;
                    int m;
                    double p = 0.0, q = 0.0, r = 0.0;
                    for (m = nn - 2; m >= l; --m) {
                        const double z = a(m, m);
                        const double rr = x - z;
                        const double ss = y - z;
                        p = (rr * ss - ww) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - rr - ss;
                        r = a(m + 2, m + 1);
                        const double s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) +
                                                        std::abs(z) +
                                                        std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = (k != nn - 1) ? a(k + 2, k - 1) : 0.0;
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_like(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        double yy = q / s;
                        double z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            double pp = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                pp += r * a(k + 2, j);
                                a(k + 2, j) -= pp * z;
                            }
                            a(k + 1, j) -= pp * yy;
                            a(k, j) -= pp * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            double pp = x * a(i, k) + yy * a(i, k + 1);
                            if (k != nn - 1) {
                                pp += z * a(i, k + 2);
                                a(i, k + 2) -= pp * r;
                            }
                            a(i, k + 1) -= pp * q;
                            a(i, k) -= pp;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return w;
}

} // namespace detail

// All eigenvalues of a real square matrix, conjugate pairs exact by
// construction, sorted by (real, imag). Multiplicity is the size of the
// cluster each eigenvalue belongs to (within a relative tolerance).
inline Spectrum eigenvalues(const Matrix& m) {
    if (!m.square()) throw DimensionError("eigenvalues: matrix must be square");
    if (!m.all_finite()) throw NumericError("eigenvalues: non-finite entries");
    const int n = m.rows();
    Spectrum sp;
    if (n == 0) return sp;

    Matrix a = m;
    detail::balance(a);
    detail::hessenberg(a);
    sp.values = detail::hqr(a);

    std::sort(sp.values.begin(), sp.values.end(), [](const auto& p, const auto& q) {
        if (p.real() != q.real()) return p.real() < q.real();
        return p.imag() < q.imag();
    });

    double scale = 0.0;
    for (const auto& z : sp.values) scale = std::max(scale, std::abs(z));
    const double tol = 1e-8 * std::max(1.0, scale);
    sp.multiplicity.assign(n, 1);
    for (int i = 0; i < n; ++i) {
        int count = 0;
        for (int j = 0; j < n; ++j)
            if (std::abs(sp.values[i] - sp.values[j]) <= tol) ++count;
        sp.multiplicity[i] = count;
    }
    return sp;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline Vector symmetric_eigenvalues(const Matrix& m) {
    if (!m.square()) throw DimensionError("symmetric_eigenvalues: matrix must be square");
    const int n = m.rows();
    Matrix b = m;
    const double scale = std::max(b.max_abs(), 1e-300);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += b(p, q) * b(p, q);
        if (std::sqrt(off) <= 1e-15 * scale * n) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(b(p, q)) <= 1e-300) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * b(p, q));
                const double tau = detail::sign_like(1.0, theta) /
                                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(tau * tau + 1.0);
                const double s = tau * c;
                for (int k = 0; k < n; ++k) {
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = c * bkp - s * bkq;
                    b(k, q) = s * bkp + c * bkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double bpk = b(p, k), bqk = b(q, k);
                    b(p, k) = c * bpk - s * bqk;
                    b(q, k) = s * bpk + c * bqk;
                }
            }
        }
    }
    Vector ev(n);
    for (int i = 0; i < n; ++i) ev[i] = b(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Induced 2-norm (largest singular value), via the symmetric spectrum of AᵀA.
inline double operator_norm(const Matrix& m) {
    if (!m.all_finite()) throw NumericError("operator_norm: non-finite entries");
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    const Matrix g = m.transpose() * m;
    const Vector ev = symmetric_eigenvalues(g);
    return std::sqrt(std::max(0.0, ev.back()));
}

} // namespace daestab
