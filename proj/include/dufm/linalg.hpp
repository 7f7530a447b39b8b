#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

#include "dufm/errors.hpp"

namespace dufm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative cutoff used for numerical rank decisions throughout the project:
// values below kRankRelTol * s_max are treated as zero.
inline constexpr double kRankRelTol = 1e-9;

/// Thin SVD A = U diag(s) V^T with s sorted descending.
struct SVDFactors {
    Matrix U;                 // orthonormal columns
    Vector singular_values;   // descending, non-negative
    Matrix V;                 // orthonormal columns

    Matrix reconstruct() const { return U * singular_values.asDiagonal() * V.transpose(); }
};

/// Descending singular values plus the absolute cutoff below which a value
/// does not count towards the rank.
struct Spectrum {
    Vector values;
    double zero_tolerance = 0.0;

    int rank() const {
        int r = 0;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            if (values[i] > zero_tolerance) ++r;
        return r;
    }
};

Spectrum make_spectrum(const Vector& singular_values, double rel_tol = kRankRelTol);

/// S = I_K - (1/K) 1 1^T. Symmetric projector with eigenvalues {1 x (K-1), 0}.
Matrix simplex_etf(int K);

/// Orthogonal Q with S = Q diag(1,...,1,0) Q^T; last column is 1/sqrt(K).
Matrix simplex_diagonalizer(int K);

/// Thin SVD (U: m x min(m,n), V: n x min(m,n)).
SVDFactors svd(const Matrix& A);

/// Full SVD (U: m x m, V: n x n); singular value vector has min(m,n) entries.
SVDFactors svd_full(const Matrix& A);

Vector singular_values(const Matrix& A);

/// sum_i s_i^q over singular values above the rank cutoff, q in (0, 2].
double schatten_quasi_norm(const Matrix& A, double q, double rel_tol = kRankRelTol);

/// Haar-ish random orthogonal matrix (QR of a Gaussian with positive R
/// diagonal); deterministic in the generator state.
Matrix random_orthogonal(int n, std::mt19937_64& rng);

/// FNV-1a over dimensions and raw entry bytes; used in numeric-failure
/// diagnostics.
std::string matrix_hash(const Matrix& A);

}  // namespace dufm
