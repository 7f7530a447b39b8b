#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dufm/model.hpp"

namespace dufm {

/// K x K output frame with its singular spectrum and numerical rank.
struct StructureMatrix {
    Matrix Z;
    Spectrum spectrum;
    int rank = 0;

    static StructureMatrix from(const Matrix& Z, double rel_tol = kRankRelTol);
};

struct ReducedCeParams {
    int K = 0;
    int L = 1;
    double lambda = 1e-3;
};

/// (1/K) g(Z) + ((L+1)/2) lambda sum_i s_i^(2/(L+1)); equals the full-stack
/// linear CE loss of any balanced SVD-aligned stack with output Z.
double reduced_ce_loss(const Matrix& Z, const ReducedCeParams& p);
double reduced_ce_fit(const Matrix& Z, int K);
double reduced_ce_reg(const Matrix& Z, const ReducedCeParams& p);

struct ScaleOpt {
    double alpha_star = 0.0;
    double loss_star = 0.0;
    bool zero_collapse = false;
};

/// Global minimizer of alpha -> reduced_ce_loss(alpha * frame) over
/// alpha >= 0, to 1e-8 in alpha (log-grid seeding + golden section).
ScaleOpt optimal_scale(const Matrix& frame, const ReducedCeParams& p);

/// M_jj > M_ij for all i != j, per column j.
bool is_diagonally_superior(const Matrix& M);

enum class TheoremId { T1, T6 };

/// Exact closed-form threshold inequalities: T1 compares the low-rank and
/// DNC regularization costs; T6 is the ReLU-construction inequality (parity
/// dependent).
bool threshold_check(TheoremId theorem, int K, int L);

struct FrameResult {
    std::string id;
    int rank = 0;
    double alpha_star = 0.0;
    double fit_term = 0.0;
    double reg_term = 0.0;
    double total = 0.0;
};

/// Scale-optimize each frame independently; sorted by total loss ascending.
std::vector<FrameResult> compare_structures(const std::vector<std::pair<std::string, Matrix>>& frames,
                                            const ReducedCeParams& p);

struct ReducedMseParams {
    int K = 0;
    int d = 0;
    int L = 2;
    double lambda = 1e-3;
    Activation zeta;
};

/// (1/L) sum_i 1/(sigma~_i^2 + K lambda) + sum_i sigma_i^(2/L), sigma from X
/// and sigma~ from zeta(X); sums run over all K singular values.
double reduced_mse_loss(const Matrix& X, const ReducedMseParams& p);

/// Closed-form last layer W_L = zeta(H_L)^T [K lambda I + zeta(H_L) zeta(H_L)^T]^{-1}.
Matrix mse_optimal_WL(const Matrix& H_L, double lambda, const Activation& zeta);

/// Minimal r with binom(r + p - 1, p) >= K.
long long hadamard_min_rank(long long K, int p);

/// Rank of the block construction: K/2 (even), (K+1)/2 (odd). The witness is
/// lowrank_frame_linear(K), which is diagonally superior.
int ds_rank_upper_bound(int K);

/// Named lambda-vs-L schedules for depth sweeps.
enum class LambdaSchedule { Fixed, InvSquare, SqrtGrowth };
double schedule_lambda(LambdaSchedule schedule, double c, int L);
LambdaSchedule schedule_from_name(const std::string& name);
std::string schedule_name(LambdaSchedule schedule);

struct MinimizeOptions {
    int restarts = 10;
    unsigned long long seed = 0;
    int max_iters = 5000;
    double rel_tol = 1e-13;
    double init_scale = 1.0;
};

struct MinimizeResult {
    Matrix Z;
    double loss = 0.0;
    int best_restart = 0;
    unsigned long long best_seed = 0;
};

/// Best-of-restarts proximal gradient descent on the reduced CE loss over
/// K x K matrices Z: gradient steps on the fit term, exact singular-value
/// prox of the Schatten term. Global optimality is not claimed.
MinimizeResult minimize_reduced_ce(const ReducedCeParams& p, const MinimizeOptions& opts = {});

/// Same scheme for the reduced MSE loss over d x K matrices X.
MinimizeResult minimize_reduced_mse(const ReducedMseParams& p, const MinimizeOptions& opts = {});

/// Scalar prox argmin_{t >= 0} (t - s)^2 / 2 + w t^q for q in (0, 1]; used by
/// the minimizers and exposed for tests.
double schatten_prox_scalar(double s, double w, double q);

}  // namespace dufm
