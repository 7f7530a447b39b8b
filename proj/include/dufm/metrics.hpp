#pragma once

#include <map>
#include <vector>

#include "dufm/model.hpp"

namespace dufm {

/// Collapse metrics: trace(Sigma_W Sigma_B^+)/K, simplex-ETF deviations of
/// the centered class means, and the classifier self-duality distance.
struct NcMetrics {
    double nc1 = 0.0;
    double nc2_norm_dev = 0.0;
    double nc2_angle_dev = 0.0;
    double nc3 = 0.0;
};

/// H: d x N feature columns, labels[i] in [0, K) with K = W.rows(), W: K x d.
NcMetrics nc_metrics(const Matrix& H, const std::vector<int>& labels, const Matrix& W);

/// max over l of ||W_l^T W_l - W_{l-1} W_{l-1}^T||_F / (1 + ||W_l^T W_l||_F),
/// with W_0 = H_1.
double balancedness_residual(const ParamStack& params);

enum class DecayKind { Zero, SuperExp, Exp, Persistent };

struct DecayClass {
    DecayKind kind = DecayKind::Persistent;
    double rate = 0.0;        // Exp only: positive decay rate per unit L
    double log_slope = 0.0;   // fitted linear slope of log s vs L
    double quad_coeff = 0.0;  // fitted quadratic coefficient
    double r2 = 0.0;          // linear-fit quality
};

struct DecayThresholds {
    double slope_threshold = 0.05;  // Exp requires slope <= -slope_threshold
    double quad_threshold = 0.01;   // SuperExp requires quad coeff <= -quad_threshold
    double r2_min = 0.9;
    double zero_rel_tol = 1e-12;    // relative to the largest value across all spectra
};

/// Per-index decay classification of an L-sweep of spectra (>= 4 distinct L).
/// Values below the relative tolerance are censored from the fit, keeping one
/// clamped witness point so a collapse to zero still registers as decay.
std::vector<DecayClass> decay_classify(const std::map<int, Spectrum>& spectra,
                                       const DecayThresholds& thresholds = {});

std::string decay_kind_name(DecayKind kind);

struct LayerRatio {
    int layer = 0;       // l in [2, L]
    double r = 0.0;      // ||mu_l|| / ||H_l||_F
    double r_tilde = 0.0;
    bool satisfied = false;
};

/// Global-mean-to-norm ratios before and after the activation, per layer.
std::vector<LayerRatio> assumption1_check(const ForwardTrace& trace);

inline long long stiefel_dim(long long r, long long d) { return r * d - r * (r + 1) / 2; }
inline long long grassmann_dim(long long r, long long d) { return r * d - r * r; }

struct DimRow {
    long long d = 0;
    long long dnc_dim = 0;
    long long dim_lower = 0;   // L * (r d - r^2), Grassmann end
    long long dim_upper = 0;   // L * (r d - r(r+1)/2), Stiefel end
    double ratio_lower = 0.0;  // dnc_dim / dim_upper
    double ratio_upper = 0.0;  // dnc_dim / dim_lower
};

struct DimReport {
    int K = 0, r = 0, L = 0;
    double limit = 0.0;  // (K-1)/r
    std::vector<DimRow> rows;
};

/// Solution-space dimension bracket per width d; requires 2 <= r < K - 1.
DimReport solution_space_dims(int K, int r, const std::vector<long long>& d_values, int L);

}  // namespace dufm
