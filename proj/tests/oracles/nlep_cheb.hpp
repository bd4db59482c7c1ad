// Independent check for the inner moment R(lambda): Chebyshev collocation
// with dense LU and Clenshaw-Curtis quadrature, no code shared with the
// Numerov production path.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct ChebGrid {
    std::vector<double> xi;       // collocation points, descending from +L
    Eigen::MatrixXd deriv;        // first-derivative matrix on xi
    std::vector<double> weights;  // Clenshaw-Curtis weights on xi
};

inline ChebGrid cheb_grid(int n, double L) {
    ChebGrid g;
    int np = n + 1;
    std::vector<double> y(np);
    for (int k = 0; k < np; ++k) y[k] = std::cos(M_PI * k / n);
    g.xi.resize(np);
    for (int k = 0; k < np; ++k) g.xi[k] = L * y[k];

    Eigen::MatrixXd D(np, np);
    auto c = [&](int i) { return (i == 0 || i == n) ? 2.0 : 1.0; };
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j)
            if (i != j)
                D(i, j) = (c(i) / c(j)) * ((i + j) % 2 ? -1.0 : 1.0) / (y[i] - y[j]);
    for (int i = 0; i < np; ++i) {
        double s = 0.0;
        for (int j = 0; j < np; ++j)
            if (j != i) s += D(i, j);
        D(i, i) = -s;
    }
    g.deriv = D / L;

    // Clenshaw-Curtis on [-1, 1], scaled by L.
    g.weights.assign(np, 0.0);
    for (int k = 0; k < np; ++k) {
        double theta = M_PI * k / n;
        double sum = 0.0;
        for (int j = 1; j <= n / 2; ++j) {
            double b = (2 * j == n) ? 1.0 : 2.0;
            sum += b * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
        }
        double w = (1.0 - sum) * 2.0 / n;
        if (k == 0 || k == n) w *= 0.5;
        g.weights[k] = w * L;
    }
    return g;
}

// Solves v'' - (1 + lambda) v + 2 w v = w^2 with decay-matched Robin ends
// and returns the moment integral of w v.
inline std::complex<double> cheb_R(std::complex<double> lambda, int n = 400, double L = 30.0) {
    using cd = std::complex<double>;
    ChebGrid g = cheb_grid(n, L);
    int np = n + 1;
    std::vector<double> w(np);
    for (int k = 0; k < np; ++k) {
        double s = 1.0 / std::cosh(0.5 * g.xi[k]);
        w[k] = 1.5 * s * s;
    }
    cd kappa = std::sqrt(cd(1.0, 0.0) + lambda);
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(np, np);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(np);
    Eigen::MatrixXd D2 = g.deriv * g.deriv;
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < np; ++j) M(i, j) = D2(i, j);
        M(i, i) += -(cd(1.0, 0.0) + lambda) + 2.0 * w[i];
        rhs(i) = w[i] * w[i];
    }
    // xi = +L: v' + kappa v = 0; xi = -L: v' - kappa v = 0.
    for (int j = 0; j < np; ++j) {
        M(0, j) = g.deriv(0, j);
        M(n, j) = g.deriv(n, j);
    }
    M(0, 0) += kappa;
    M(n, n) -= kappa;
    Eigen::VectorXcd v = M.partialPivLu().solve(rhs);
    cd moment(0.0, 0.0);
    for (int k = 0; k < np; ++k) moment += g.weights[k] * w[k] * v(k);
    return moment;
}

}  // namespace oracle
