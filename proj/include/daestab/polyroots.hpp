#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "daestab/eigen.hpp"
#include "daestab/matrix.hpp"

namespace daestab {

struct PolyRoot {
    double value;
    bool simple; // |p'(root)| above tolerance relative to the local term scale
};

namespace detail {

// Horner evaluation of p and p' at w; coeffs ascending (coeffs[s] * w^s).
inline void poly_eval(const std::vector<double>& c, double w, double& p, double& dp) {
    p = 0.0;
    dp = 0.0;
    for (int s = static_cast<int>(c.size()) - 1; s >= 0; --s) {
        dp = dp * w + p;
        p = p * w + c[s];
    }
}

} // namespace detail

// All real roots of sum_s coeffs[s] * w^s, sorted ascending. Clustered
// near-equal roots are merged into one entry; a root is flagged simple iff
// |p'(root)| exceeds 1e-8 relative to the natural magnitude of p' there,
// so the verdict is invariant under positive scaling of the coefficients.
inline std::vector<PolyRoot> polynomial_real_roots(std::vector<double> coeffs) {
    while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.empty()) throw DomainError("polynomial_real_roots: zero polynomial");
    const int degree = static_cast<int>(coeffs.size()) - 1;
    if (degree < 1)
        throw PreconditionError("polynomial_real_roots: degree must be at least 1");

    // normalize monic
    const double lead = coeffs.back();
    for (double& v : coeffs) v /= lead;

    std::vector<double> candidates;
    if (degree == 1) {
        candidates.push_back(-coeffs[0]);
    } else {
        Matrix companion(degree, degree);
        for (int i = 0; i + 1 < degree; ++i) companion(i + 1, i) = 1.0;
        for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -coeffs[i];
        const Spectrum sp = eigenvalues(companion);
        for (const auto& z : sp.values) {
            if (std::abs(z.imag()) <= 1e-8 * std::max(1.0, std::abs(z)))
                candidates.push_back(z.real());
        }
        // Newton polish, guarded
        for (double& w : candidates) {
            for (int it = 0; it < 8; ++it) {
                double p, dp;
                detail::poly_eval(coeffs, w, p, dp);
                if (dp == 0.0) break;
                const double step = p / dp;
                if (!std::isfinite(step) || std::abs(step) > 1.0 + std::abs(w)) break;
                w -= step;
                if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(w))) break;
            }
        }
        // discard anything Newton pushed off the root set
        candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                        [&](double w) {
                                            double p, dp, scale = 0.0, pw = 1.0;
                                            detail::poly_eval(coeffs, w, p, dp);
                                            for (double cs : coeffs) {
                                                scale += std::abs(cs) * pw;
                                                pw *= std::abs(w);
                                            }
                                            return std::abs(p) > 1e-6 * std::max(scale, 1e-300);
                                        }),
                         candidates.end());
    }

    std::sort(candidates.begin(), candidates.end());

    std::vector<PolyRoot> roots;
    std::size_t i = 0;
    while (i < candidates.size()) {
        std::size_t j = i + 1;
        double sum = candidates[i];
        while (j < candidates.size() &&
               candidates[j] - candidates[j - 1] <=
                   1e-7 * std::max(1.0, std::abs(candidates[j]))) {
            sum += candidates[j];
            ++j;
        }
        const double w = sum / static_cast<double>(j - i);
        double p, dp;
        detail::poly_eval(coeffs, w, p, dp);
        double dscale = 0.0, pw = 1.0;
        for (std::size_t s = 1; s < coeffs.size(); ++s) {
            dscale += static_cast<double>(s) * std::abs(coeffs[s]) * pw;
            pw *= std::abs(w);
        }
        roots.push_back({w, std::abs(dp) > 1e-8 * dscale});
        i = j;
    }
    return roots;
}

} // namespace daestab
