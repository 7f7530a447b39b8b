#pragma once

#include <vector>

#include "dufm/model.hpp"

namespace dufm {

/// Total parameter count above which dense Hessian assembly is refused.
inline constexpr long long kHessianSizeGuard = 20000;

/// (L+1) x (L+1) grid of second-derivative blocks; index 0 is H_1. Parameter
/// matrices are flattened row-major.
struct HessianBlocks {
    int L = 0;
    std::vector<int> block_dims;               // flattened size per parameter
    std::vector<std::vector<Matrix>> blocks;   // blocks[l][r]

    long long total_dim() const;
    const Matrix& block(int l, int r) const { return blocks[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)]; }
    Matrix assemble() const;
};

/// Exact analytic Hessian of the linear CE loss: diagonal blocks
/// lambda I + (1/K) sum_y [A^T (diag p_y - p_y p_y^T) A] (x) [h_y h_y^T];
/// off-diagonal blocks add the first-derivative coupling term.
HessianBlocks hessian_full_linear_ce(const ParamStack& params, const HyperParams& hp);

/// Only the curvature (order alpha*lambda) part, at the given stack.
HessianBlocks hessian_curvature_part(const ParamStack& params);

/// Leading-order Hessian at the DNC stack build_dnc(K, d, L, alpha).
HessianBlocks hessian_leading_order_dnc(int K, int d, int L, double alpha);

struct ScaleSplit {
    double norm_lambda_part = 0.0;        // lambda I + coupling family
    double norm_alpha_lambda_part = 0.0;  // curvature family
    double ratio = 0.0;
    bool structure_verified = false;      // output matched alpha * S
};

/// Frobenius norms of the two Hessian term families at a DNC stack, with the
/// regularization level entering as the scale parameter through the
/// first-order identity (exact when alpha solves the stationary-scale
/// equation for hp.lambda).
ScaleSplit scale_split(const ParamStack& params, const HyperParams& hp);

struct EigenSummary {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    long long near_zero_count = 0;  // |eig| <= tolerance
    double tolerance = 0.0;
};

EigenSummary psd_check(const HessianBlocks& H, double tol);

/// Full eigenvalue spectrum (ascending) of the assembled Hessian.
Vector hessian_eigenvalues(const HessianBlocks& H);

}  // namespace dufm
