#include "dufm/construct.hpp"

#include <algorithm>
#include <cmath>

namespace dufm {

Matrix lowrank_frame_linear(int K) {
    if (K < 2) throw InvalidDimension("lowrank_frame_linear: K must be >= 2");
    Matrix F = Matrix::Zero(K, K);
    const int m = K / 2;
    for (int b = 0; b < m; ++b) {
        F(2 * b, 2 * b) = 1.0;
        F(2 * b + 1, 2 * b + 1) = 1.0;
        F(2 * b, 2 * b + 1) = -1.0;
        F(2 * b + 1, 2 * b) = -1.0;
    }
    if (K % 2 == 1) F(K - 1, K - 1) = 1.0;
    return F;
}

Matrix relu_frame_X(int K) {
    Matrix F = lowrank_frame_linear(K);
    if (K % 2 == 1) F(K - 1, K - 1) = 2.0;
    return F;
}

Matrix relu_frame_Y(int K) {
    if (K < 2) throw InvalidDimension("relu_frame_Y: K must be >= 2");
    Matrix Y = Matrix::Ones(K, K);
    if (K % 2 == 1) {
        Y.row(K - 1).setZero();
        Y.col(K - 1).setZero();
    }
    return Y;
}

namespace {

std::vector<Matrix> free_factors(int count, int d, const FactorOptions& opts) {
    std::vector<Matrix> U(static_cast<std::size_t>(count));
    if (opts.random_free_factors) {
        std::mt19937_64 rng(opts.seed);
        for (auto& m : U) m = random_orthogonal(d, rng);
    } else {
        for (auto& m : U) m = Matrix::Identity(d, d);
    }
    return U;
}

}  // namespace

std::vector<Matrix> balanced_factors(const Matrix& target, int num_factors, int d, const FactorOptions& opts) {
    if (num_factors < 2)
        throw InvalidParameter("balanced_factors: need at least 2 factors, got " + std::to_string(num_factors));
    const int rows = static_cast<int>(target.rows());
    const int cols = static_cast<int>(target.cols());
    if (d < std::max(rows, cols))
        throw InvalidDimension("balanced_factors: width d=" + std::to_string(d) +
                               " is below max(rows, cols)=" + std::to_string(std::max(rows, cols)));

    const SVDFactors f = svd_full(target);
    const int ns = static_cast<int>(f.singular_values.size());
    // Numerical zeros must not survive the m-th root (eps^(1/m) is large);
    // rank is decided by the shared relative cutoff.
    const double cutoff = ns > 0 ? kRankRelTol * f.singular_values[0] : 0.0;
    Vector root_s(ns);
    for (int i = 0; i < ns; ++i)
        root_s[i] = f.singular_values[i] > cutoff ? std::pow(f.singular_values[i], 1.0 / num_factors) : 0.0;

    // Interior free factors U_1 .. U_{m-1} in R^{d x d}; the outer singular
    // vector matrices come from the target's SVD.
    std::vector<Matrix> U = free_factors(num_factors - 1, d, opts);

    auto sigma_block = [&](int r, int c) {
        Matrix S = Matrix::Zero(r, c);
        for (int i = 0; i < std::min({r, c, ns}); ++i) S(i, i) = root_s[i];
        return S;
    };

    std::vector<Matrix> factors(static_cast<std::size_t>(num_factors));
    factors[0] = U[0] * sigma_block(d, cols) * f.V.transpose();
    for (int l = 1; l < num_factors - 1; ++l)
        factors[static_cast<std::size_t>(l)] =
            U[static_cast<std::size_t>(l)] * sigma_block(d, d) * U[static_cast<std::size_t>(l) - 1].transpose();
    factors[static_cast<std::size_t>(num_factors) - 1] =
        f.U * sigma_block(rows, d) * U[static_cast<std::size_t>(num_factors) - 2].transpose();
    return factors;
}

namespace {

ParamStack stack_from_factors(int K, int d, int L, std::vector<Matrix> factors) {
    ParamStack p;
    p.K = K;
    p.d = d;
    p.L = L;
    p.mats = std::move(factors);
    p.validate();
    return p;
}

}  // namespace

ParamStack balanced_factorization(const Matrix& Z_target, int num_factors, int d, const FactorOptions& opts) {
    if (Z_target.rows() != Z_target.cols())
        throw InvalidDimension("balanced_factorization: target must be square (use balanced_factors otherwise)");
    const int K = static_cast<int>(Z_target.rows());
    return stack_from_factors(K, d, num_factors - 1, balanced_factors(Z_target, num_factors, d, opts));
}

ParamStack build_dnc(int K, int d, int L, double alpha, const FactorOptions& opts) {
    if (d < K) throw InvalidDimension("build_dnc: need d >= K");
    if (alpha < 0.0) throw InvalidParameter("build_dnc: alpha must be >= 0");
    // Balanced factorization of alpha * S keeps the simplex diagonalizer as
    // the outer singular vectors by construction (S = Q diag(1,..,1,0) Q^T).
    const Matrix Q = simplex_diagonalizer(K);
    const double sigma = std::pow(alpha, 1.0 / (L + 1));

    std::vector<Matrix> U = free_factors(L, d, opts);
    Matrix D_dK = Matrix::Zero(d, K);
    for (int i = 0; i < K - 1; ++i) D_dK(i, i) = sigma;

    std::vector<Matrix> factors(static_cast<std::size_t>(L) + 1);
    factors[0] = U[0] * D_dK * Q.transpose();
    for (int l = 1; l < L; ++l) {
        Matrix D_dd = Matrix::Zero(d, d);
        for (int i = 0; i < K - 1; ++i) D_dd(i, i) = sigma;
        factors[static_cast<std::size_t>(l)] =
            U[static_cast<std::size_t>(l)] * D_dd * U[static_cast<std::size_t>(l) - 1].transpose();
    }
    factors[static_cast<std::size_t>(L)] = Q * D_dK.transpose() * U[static_cast<std::size_t>(L) - 1].transpose();
    return stack_from_factors(K, d, L, std::move(factors));
}

ParamStack build_lowrank_linear(int K, int d, int L, double beta, const FactorOptions& opts) {
    if (d < K) throw InvalidDimension("build_lowrank_linear: need d >= K");
    if (beta < 0.0) throw InvalidParameter("build_lowrank_linear: beta must be >= 0");
    return balanced_factorization(beta * lowrank_frame_linear(K), L + 1, d, opts);
}

double lowrank_relu_output_scale(int K, int L, double psi) {
    if (K % 2 == 0) return std::pow(2.0, L - 1) * std::pow(psi, L + 1) * std::pow((K + 2.0) / K, 1.5);
    return std::pow(2.0, L - 1) * std::sqrt((K + 3.0) / (K + 1.0)) * ((K + 3.0) / K) * std::pow(psi, L + 1);
}

ParamStack build_lowrank_relu(int K, int d, int L, double psi) {
    if (d < K) throw InvalidDimension("build_lowrank_relu: need d >= K");
    if (L < 2) throw InvalidParameter("build_lowrank_relu: need L >= 2");
    if (!(psi > 0.0)) throw InvalidParameter("build_lowrank_relu: psi must be positive");

    const bool even = (K % 2 == 0);
    const Matrix X = relu_frame_X(K);
    const Matrix Y = relu_frame_Y(K);

    // Equal-Frobenius-norm scales: phi_2 and psi_L follow from matching every
    // matrix norm to the interior 2(K+2) psi^2 (even) / 2(K+3) psi^2 (odd).
    const double phi2 = even ? (K + 2.0) / K * psi * psi : (K + 3.0) / K * psi * psi;
    const double psiL = even ? std::sqrt((K + 2.0) / K) * psi : std::sqrt((K + 3.0) / (K + 1.0)) * psi;
    const double chi_ratio = even ? 2.0 / K : 2.0 / (K - 1.0);

    ParamStack p = ParamStack::zeros(K, d, L);

    // H_2 = [phi_2 (X + Y); 0]; split it into W_1 H_1 through the square
    // root of its SVD so that ||W_1||_F^2 = ||H_1||_F^2 = sum sigma_i(H_2).
    Matrix H2 = Matrix::Zero(d, K);
    H2.topRows(K) = phi2 * (X + Y);
    const SVDFactors f = svd_full(H2);
    Matrix S_dd = Matrix::Zero(d, d);
    Matrix S_dK = Matrix::Zero(d, K);
    for (int i = 0; i < K; ++i) {
        const double r = std::sqrt(f.singular_values[i]);
        S_dd(i, i) = r;
        S_dK(i, i) = r;
    }
    p.W(1) = f.U * S_dd;               // U_2 Sigma^(1/2) with U-tilde = I
    p.H1() = S_dK * f.V.transpose();   // Sigma^(1/2) V_2^T

    for (int l = 2; l <= L - 1; ++l) {
        Matrix Wl = Matrix::Zero(d, d);
        Wl.topLeftCorner(K, K) = psi * X + chi_ratio * psi * Y;
        p.W(l) = Wl;
    }
    Matrix WL = Matrix::Zero(K, d);
    WL.leftCols(K) = psiL * X;
    p.W(L) = WL;
    p.validate();
    return p;
}

double dnc_scale_rhs(int K, int L, double alpha) {
    const double expnt = static_cast<double>(L - 1) / (L + 1);
    return std::pow(alpha, expnt) / ((K - 1) + std::exp(alpha));
}

namespace {

// Bisection of f(alpha) - lambda on a bracket with a sign change; refines
// until the residual meets the contract.
double bisect_root(int K, int L, double lambda, double lo, double hi) {
    double flo = dnc_scale_rhs(K, L, lo) - lambda;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = dnc_scale_rhs(K, L, mid) - lambda;
        if (std::abs(fmid) <= 1e-13 && (hi - lo) <= 1e-13 * std::max(1.0, mid)) return mid;
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

ScaleRoots solve_dnc_scale(int K, int L, double lambda) {
    if (K < 2) throw InvalidDimension("solve_dnc_scale: need K >= 2");
    if (L < 1) throw InvalidParameter("solve_dnc_scale: need L >= 1");
    if (!(lambda > 0.0)) throw InvalidParameter("solve_dnc_scale: lambda must be positive");

    ScaleRoots out;
    out.lambda = lambda;
    out.K = K;
    out.L = L;

    if (L == 1) {
        // RHS is 1/((K-1)+e^alpha): strictly decreasing from 1/K, so at most
        // one root; the supremum 1/K is approached as alpha -> 0.
        out.critical_lambda = 1.0 / K;
        out.critical_alpha = 0.0;
        if (lambda < 1.0 / K) {
            const double alpha = std::log(1.0 / lambda - (K - 1));
            if (alpha > 0.0) out.roots.push_back(alpha);
        }
        return out;
    }

    // Locate the single maximum of the RHS: f'(alpha) = 0 reduces to
    // c (K-1) = (alpha - c) e^alpha with c = (L-1)/(L+1), increasing on the
    // bracket below.
    const double c = static_cast<double>(L - 1) / (L + 1);
    double lo = c, hi = c + 1.0;
    auto turning = [&](double a) { return (a - c) * std::exp(a) - c * (K - 1); };
    while (turning(hi) < 0.0) hi += 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (turning(mid) < 0.0 ? lo : hi) = mid;
    }
    out.critical_alpha = 0.5 * (lo + hi);
    out.critical_lambda = dnc_scale_rhs(K, L, out.critical_alpha);

    if (lambda > out.critical_lambda) return out;

    // The RHS rises from zero to the critical level at critical_alpha and
    // decays back below lambda, so each side of the maximum brackets exactly
    // one root. (A log-grid sign scan misses the pair when lambda sits close
    // to the critical level and both crossings fall between grid points.)
    double tail = std::max(50.0, out.critical_alpha + 1.0);
    while (dnc_scale_rhs(K, L, tail) > lambda) tail *= 2.0;
    const double small_root = bisect_root(K, L, lambda, 0.0, out.critical_alpha);
    const double large_root = bisect_root(K, L, lambda, out.critical_alpha, tail);
    out.roots.push_back(small_root);
    if (large_root - small_root > 1e-10 * std::max(1.0, large_root))
        out.roots.push_back(large_root);  // tangent case collapses to one root
    return out;
}

}  // namespace dufm
