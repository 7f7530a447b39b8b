#pragma once

// Shared test helpers: random instances and independent finite-difference
// oracles. Everything here stays test-only so the oracles cannot leak into
// the implementation they check.

#include <random>

#include "dufm/model.hpp"

namespace dufm::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sigma = 1.0) {
    std::normal_distribution<double> gauss(0.0, sigma);
    Matrix M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = gauss(rng);
    return M;
}

inline ParamStack random_stack(int K, int d, int L, std::mt19937_64& rng, double sigma = 1.0) {
    ParamStack p = ParamStack::zeros(K, d, L);
    for (Matrix& m : p.mats) m = random_matrix(m.rows(), m.cols(), rng, sigma);
    return p;
}

// Second-order central differences of the loss, entry pair by entry pair.
// Step is h * (1 + |entry|) per coordinate.
inline Matrix finite_difference_hessian(const ParamStack& params, const ModelKind& kind, const HyperParams& hp,
                                        double h = 1e-4) {
    ParamStack work = params;
    struct Coord {
        std::size_t mat;
        Eigen::Index i, j;
        double step;
    };
    std::vector<Coord> coords;
    for (std::size_t m = 0; m < work.mats.size(); ++m)
        for (Eigen::Index i = 0; i < work.mats[m].rows(); ++i)
            for (Eigen::Index j = 0; j < work.mats[m].cols(); ++j)
                coords.push_back({m, i, j, h * (1.0 + std::abs(work.mats[m](i, j)))});

    auto shift_eval = [&](const Coord& a, double sa, const Coord& b, double sb) {
        work.mats[a.mat](a.i, a.j) += sa * a.step;
        work.mats[b.mat](b.i, b.j) += sb * b.step;
        const double v = loss(work, kind, hp);
        work.mats[a.mat](a.i, a.j) -= sa * a.step;
        work.mats[b.mat](b.i, b.j) -= sb * b.step;
        return v;
    };

    const Eigen::Index n = static_cast<Eigen::Index>(coords.size());
    Matrix H(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) {
            const double fpp = shift_eval(coords[a], 1, coords[b], 1);
            const double fpm = shift_eval(coords[a], 1, coords[b], -1);
            const double fmp = shift_eval(coords[a], -1, coords[b], 1);
            const double fmm = shift_eval(coords[a], -1, coords[b], -1);
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * coords[a].step * coords[b].step);
            H(a, b) = v;
            H(b, a) = v;
        }
    return H;
}

inline double relative_error(const std::vector<Matrix>& got, const std::vector<Matrix>& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num += (got[i] - want[i]).squaredNorm();
        den += want[i].squaredNorm();
    }
    return std::sqrt(num) / std::max(1e-300, std::sqrt(den));
}

}  // namespace dufm::testing
