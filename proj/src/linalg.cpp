#include "dufm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace dufm {

Spectrum make_spectrum(const Vector& singular_values, double rel_tol) {
    Spectrum sp;
    sp.values = singular_values;
    std::sort(sp.values.data(), sp.values.data() + sp.values.size(), std::greater<double>());
    const double smax = sp.values.size() > 0 ? sp.values[0] : 0.0;
    sp.zero_tolerance = rel_tol * smax;
    return sp;
}

Matrix simplex_etf(int K) {
    if (K < 2) throw InvalidDimension("simplex_etf: class count must be >= 2, got " + std::to_string(K));
    Matrix S = Matrix::Identity(K, K);
    S.array() -= 1.0 / static_cast<double>(K);
    return S;
}

Matrix simplex_diagonalizer(int K) {
    const Matrix S = simplex_etf(K);
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success)
        throw NumericFailure("simplex_diagonalizer: eigensolver failed for K=" + std::to_string(K));
    // SelfAdjointEigenSolver sorts ascending; we want descending (1,...,1,0).
    Matrix Q(K, K);
    for (int j = 0; j < K; ++j) Q.col(j) = es.eigenvectors().col(K - 1 - j);
    return Q;
}

namespace {

void check_finite(const Matrix& A, const char* op) {
    if (!A.allFinite())
        throw InvalidParameter(std::string(op) + ": input has non-finite entries");
}

SVDFactors run_svd(const Matrix& A, unsigned options, const char* op) {
    check_finite(A, op);
    Eigen::JacobiSVD<Matrix> solver(A, options);
    SVDFactors f;
    f.U = solver.matrixU();
    f.V = solver.matrixV();
    f.singular_values = solver.singularValues();

    // Jacobi SVD converges for any finite input at this scale, but guard the
    // contract: reconstruction within 1e-10 relative and orthonormal factors.
    const Eigen::Index k = f.singular_values.size();
    const Matrix recon = f.U.leftCols(k) * f.singular_values.asDiagonal() * f.V.leftCols(k).transpose();
    const double scale = std::max(1e-300, A.norm());
    if (!f.singular_values.allFinite() || (recon - A).norm() > 1e-10 * scale)
        throw NumericFailure(std::string(op) + ": SVD failed invariants, input hash " + matrix_hash(A));
    return f;
}

}  // namespace

SVDFactors svd(const Matrix& A) { return run_svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV, "svd"); }

SVDFactors svd_full(const Matrix& A) { return run_svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV, "svd_full"); }

Vector singular_values(const Matrix& A) {
    check_finite(A, "singular_values");
    return Eigen::JacobiSVD<Matrix>(A).singularValues();
}

double schatten_quasi_norm(const Matrix& A, double q, double rel_tol) {
    if (!(q > 0.0) || !(q <= 2.0))
        throw InvalidParameter("schatten_quasi_norm: exponent must lie in (0, 2], got " + std::to_string(q));
    const Vector s = singular_values(A);
    const double cutoff = s.size() > 0 ? rel_tol * s[0] : 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) total += std::pow(s[i], q);
    return total;
}

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

std::string matrix_hash(const Matrix& A) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t dims[2] = {A.rows(), A.cols()};
    mix(dims, sizeof(dims));
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            const double v = A(i, j);
            mix(&v, sizeof(v));
        }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dufm
