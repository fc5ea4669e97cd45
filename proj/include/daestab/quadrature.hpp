#pragma once

#include <cmath>
#include <vector>

#include "daestab/errors.hpp"

namespace daestab {

// Nodes and weights on [0,1]; weights are positive and sum to one.
struct QuadratureScheme {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const noexcept { return static_cast<int>(nodes.size()); }

    void validate() const {
        if (nodes.size() != weights.size() || nodes.empty())
            throw ValidationError("quadrature", "node/weight count mismatch or empty");
        double sum = 0.0;
        for (double w : weights) {
            if (w <= 0.0) throw ValidationError("quadrature", "non-positive weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ValidationError("quadrature", "weights sum to " + std::to_string(sum));
    }

    static QuadratureScheme trapezoid(int n) {
        if (n < 2) throw ValidationError("quadrature", "trapezoid needs at least 2 nodes");
        QuadratureScheme q;
        q.nodes.resize(n);
        q.weights.resize(n);
        const double h = 1.0 / (n - 1);
        for (int i = 0; i < n; ++i) {
            q.nodes[i] = i * h;
            q.weights[i] = (i == 0 || i == n - 1) ? h / 2.0 : h;
        }
        return q;
    }

    // Gauss-Legendre on [0,1]: Newton iteration on P_n with the usual
    // Chebyshev initial guesses.
    static QuadratureScheme gauss_legendre(int n) {
        if (n < 1) throw ValidationError("quadrature", "gauss needs at least 1 node");
        QuadratureScheme q;
        q.nodes.resize(n);
        q.weights.resize(n);
        const int half = (n + 1) / 2;
        for (int i = 0; i < half; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                // Legendre recurrence for P_n(x) and P'_n(x)
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            // map [-1,1] -> [0,1], symmetric counterpart included
            const double w = 2.0 / ((1.0 - x * x) * pp * pp);
            q.nodes[i] = 0.5 * (1.0 - x);
            q.nodes[n - 1 - i] = 0.5 * (1.0 + x);
            q.weights[i] = 0.5 * w;
            q.weights[n - 1 - i] = 0.5 * w;
        }
        return q;
    }
};

} // namespace daestab
