#pragma once

#include <vector>

#include "dufm/model.hpp"

namespace dufm {

/// Free orthogonal factors for the balanced builders. Identity by default;
/// a seeded Haar draw is available for degeneracy experiments.
struct FactorOptions {
    bool random_free_factors = false;
    unsigned long long seed = 0;
};

/// Block frame of the linear low-rank solution: blockdiag of
/// [[1,-1],[-1,1]], with a trailing diagonal 1 when K is odd.
Matrix lowrank_frame_linear(int K);

/// ReLU-construction templates: X-bar uses a trailing diagonal 2 when K is
/// odd; Y-bar is all-ones (zero-padded last row/column when K is odd).
Matrix relu_frame_X(int K);
Matrix relu_frame_Y(int K);

/// Factor `target` (r x c) into `num_factors` matrices F_m ... F_1 whose
/// product reconstructs it, each carrying singular values s_i^(1/m) with
/// adjacent singular vectors aligned. F_1 is d x c, interior factors d x d,
/// F_m is r x d.
std::vector<Matrix> balanced_factors(const Matrix& target, int num_factors, int d,
                                     const FactorOptions& opts = {});

/// Balanced SVD-aligned stack whose output is the square target (K x K);
/// num_factors = L + 1.
ParamStack balanced_factorization(const Matrix& Z_target, int num_factors, int d,
                                  const FactorOptions& opts = {});

/// Stack with output alpha * (I_K - (1/K) 1 1^T).
ParamStack build_dnc(int K, int d, int L, double alpha, const FactorOptions& opts = {});

/// Stack with output beta * lowrank_frame_linear(K), built balanced.
ParamStack build_lowrank_linear(int K, int d, int L, double beta, const FactorOptions& opts = {});

/// Nonnegative-intermediate construction compatible with ReLU layers:
/// equal-Frobenius-norm matrices, H_l >= 0 entrywise for 2 <= l <= L, output
/// 2^(L-1) psi^(L+1) ((K+2)/K)^(3/2) X-bar for even K (odd-K analogue).
ParamStack build_lowrank_relu(int K, int d, int L, double psi);

/// Closed-form output coefficient of build_lowrank_relu (the scale
/// multiplying X-bar).
double lowrank_relu_output_scale(int K, int L, double psi);

/// Positive roots of lambda = alpha^((L-1)/(L+1)) / ((K-1) + e^alpha),
/// ascending, with the critical level above which no root exists.
struct ScaleRoots {
    double lambda = 0.0;
    int K = 0, L = 0;
    std::vector<double> roots;       // 0, 1 or 2 entries, ascending
    double critical_lambda = 0.0;    // max over alpha > 0 of the RHS
    double critical_alpha = 0.0;     // argmax (0 when L = 1)

    bool has_large_root() const { return !roots.empty(); }
    double large_root() const { return roots.back(); }
};

ScaleRoots solve_dnc_scale(int K, int L, double lambda);

/// RHS of the stationary-scale equation at the given alpha.
double dnc_scale_rhs(int K, int L, double alpha);

}  // namespace dufm
