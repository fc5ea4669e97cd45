#pragma once

#include <cmath>

#include "daestab/matrix.hpp"

namespace daestab {

// exp(M t) by scaling-and-squaring with a [6/6] Pade approximant.
// The argument is scaled so its inf-norm is at most 1/2, where the
// approximant is accurate to full double precision.
inline Matrix matrix_exponential(const Matrix& m, double t = 1.0) {
    if (!m.square()) throw DimensionError("matrix_exponential: matrix must be square");
    if (!std::isfinite(t)) throw NumericError("matrix_exponential: non-finite time");
    const int n = m.rows();
    if (n == 0) return Matrix(0, 0);

    Matrix a = m * t;
    if (!a.all_finite()) throw NumericError("matrix_exponential: non-finite entries");

    const double nrm = a.norm_inf();
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm))) + 1;
    const Matrix x = a * std::ldexp(1.0, -s);

    // [6/6] Pade coefficients for e^x
    static const double c[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0, 1.0 / 66.0,
                                1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
    const Matrix x2 = x * x;
    const Matrix x4 = x2 * x2;
    const Matrix x6 = x4 * x2;
    const Matrix ident = Matrix::identity(n);
    const Matrix u = x * (ident * c[1] + x2 * c[3] + x4 * c[5]);
    const Matrix v = ident * c[0] + x2 * c[2] + x4 * c[4] + x6 * c[6];

    Matrix f = LuFactor(v - u).solve(v + u);
    for (int k = 0; k < s; ++k) f = f * f;
    if (!f.all_finite())
        throw NumericError("matrix_exponential: overflow for ||Mt|| = " + std::to_string(nrm));
    return f;
}

} // namespace daestab
