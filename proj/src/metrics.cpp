#include "dufm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dufm {

NcMetrics nc_metrics(const Matrix& H, const std::vector<int>& labels, const Matrix& W) {
    const int K = static_cast<int>(W.rows());
    const Eigen::Index d = H.rows();
    const Eigen::Index N = H.cols();
    if (W.cols() != d) throw InvalidDimension("nc_metrics: classifier width does not match features");
    if (static_cast<Eigen::Index>(labels.size()) != N)
        throw InvalidLabels("nc_metrics: one label per feature column required");

    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    Matrix mu = Matrix::Zero(d, K);
    for (Eigen::Index i = 0; i < N; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        if (c < 0 || c >= K) throw InvalidLabels("nc_metrics: label out of range: " + std::to_string(c));
        mu.col(c) += H.col(i);
        ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < K; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw InvalidLabels("nc_metrics: class " + std::to_string(c) + " has no columns");
        mu.col(c) /= counts[static_cast<std::size_t>(c)];
    }
    const Vector mu_g = mu.rowwise().mean();
    const Matrix M = mu.colwise() - mu_g;  // centered class means

    // Within/between covariances, averaged per the defining expressions.
    Matrix sigma_w = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector diff = H.col(i) - mu.col(labels[static_cast<std::size_t>(i)]);
        sigma_w += diff * diff.transpose();
    }
    sigma_w /= static_cast<double>(N);
    const Matrix sigma_b = (M * M.transpose()) / K;

    // Pseudo-inverse via SVD with the shared relative rank cutoff.
    const SVDFactors f = svd(sigma_b);
    const double cutoff = f.singular_values.size() > 0 ? kRankRelTol * f.singular_values[0] : 0.0;
    Vector inv = Vector::Zero(f.singular_values.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i)
        if (f.singular_values[i] > cutoff) inv[i] = 1.0 / f.singular_values[i];
    const Matrix sigma_b_pinv = f.V * inv.asDiagonal() * f.U.transpose();

    NcMetrics out;
    out.nc1 = (sigma_w * sigma_b_pinv).trace() / K;

    Vector norms(K);
    for (int c = 0; c < K; ++c) norms[c] = M.col(c).norm();
    const double mean_norm = norms.mean();
    if (mean_norm > 0.0) {
        for (int c = 0; c < K; ++c)
            out.nc2_norm_dev = std::max(out.nc2_norm_dev, std::abs(norms[c] - mean_norm) / mean_norm);
    }
    const double target = K > 1 ? -1.0 / (K - 1) : 0.0;
    for (int c = 0; c < K; ++c)
        for (int c2 = c + 1; c2 < K; ++c2) {
            if (norms[c] == 0.0 || norms[c2] == 0.0) continue;
            const double cosine = M.col(c).dot(M.col(c2)) / (norms[c] * norms[c2]);
            out.nc2_angle_dev = std::max(out.nc2_angle_dev, std::abs(cosine - target));
        }

    const double wn = W.norm(), mn = M.norm();
    if (wn > 0.0 && mn > 0.0)
        out.nc3 = (W.transpose() / wn - M / mn).norm();
    else
        out.nc3 = (wn > 0.0 || mn > 0.0) ? 1.0 : 0.0;
    return out;
}

double balancedness_residual(const ParamStack& params) {
    double worst = 0.0;
    Matrix prev_gram = params.H1() * params.H1().transpose();  // W_0 W_0^T
    for (int l = 1; l <= params.L; ++l) {
        const Matrix gram = params.W(l).transpose() * params.W(l);
        worst = std::max(worst, (gram - prev_gram).norm() / (1.0 + gram.norm()));
        prev_gram = params.W(l) * params.W(l).transpose();
    }
    return worst;
}

namespace {

struct PolyFit {
    double slope = 0.0;
    double intercept = 0.0;
    double quad = 0.0;
    double r2_linear = 1.0;
};

PolyFit fit_log_series(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    PolyFit out;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom != 0.0) {
        out.slope = (n * sxy - sx * sy) / denom;
        out.intercept = (sy - out.slope * sx) / n;
    }
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = out.intercept + out.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    out.r2_linear = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    if (n >= 3) {
        // Least-squares quadratic via normal equations on (1, x, x^2).
        Eigen::Matrix3d ATA = Eigen::Matrix3d::Zero();
        Eigen::Vector3d ATy = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector3d row(1.0, xs[i], xs[i] * xs[i]);
            ATA += row * row.transpose();
            ATy += row * ys[i];
        }
        out.quad = ATA.ldlt().solve(ATy)[2];
    }
    return out;
}

}  // namespace

std::vector<DecayClass> decay_classify(const std::map<int, Spectrum>& spectra, const DecayThresholds& th) {
    if (spectra.size() < 4)
        throw InsufficientData("decay_classify: need spectra at >= 4 distinct L values, got " +
                               std::to_string(spectra.size()));
    Eigen::Index width = -1;
    double overall_max = 0.0;
    for (const auto& [L, sp] : spectra) {
        if (width < 0) width = sp.values.size();
        if (sp.values.size() != width)
            throw InvalidDimension("decay_classify: spectra must all have the same length");
        if (sp.values.size() > 0) overall_max = std::max(overall_max, sp.values.maxCoeff());
    }
    const double floor = th.zero_rel_tol * overall_max;

    std::vector<DecayClass> out(static_cast<std::size_t>(width));
    for (Eigen::Index i = 0; i < width; ++i) {
        std::vector<double> xs, ys;
        bool any_above = false;
        bool censored_tail = false;
        for (const auto& [L, sp] : spectra) {
            const double v = sp.values[i];
            if (v > floor) {
                if (censored_tail) {
                    // A below-tolerance gap followed by recovery: keep the
                    // clamped point so the fit sees the dip.
                    censored_tail = false;
                }
                xs.push_back(static_cast<double>(L));
                ys.push_back(std::log(v));
                any_above = true;
            } else if (any_above && !censored_tail) {
                // First censored point after real values: clamp once as a
                // witness of the collapse, skip the rest of the plateau.
                xs.push_back(static_cast<double>(L));
                ys.push_back(std::log(std::max(floor, 1e-300)));
                censored_tail = true;
            }
        }
        DecayClass& dc = out[static_cast<std::size_t>(i)];
        if (!any_above) {
            dc.kind = DecayKind::Zero;
            continue;
        }
        if (xs.size() < 2) {
            // A single usable point: treat as collapsed-to-zero.
            dc.kind = DecayKind::Zero;
            continue;
        }
        const PolyFit fit = fit_log_series(xs, ys);
        dc.log_slope = fit.slope;
        dc.quad_coeff = fit.quad;
        dc.r2 = fit.r2_linear;
        // SuperExp means accelerating decay: concave log trajectory that
        // actually trends downward (a concave increase is not decay).
        if (xs.size() >= 3 && fit.quad <= -th.quad_threshold && fit.slope < 0.0) {
            dc.kind = DecayKind::SuperExp;
        } else if (fit.slope <= -th.slope_threshold && fit.r2_linear >= th.r2_min) {
            dc.kind = DecayKind::Exp;
            dc.rate = -fit.slope;
        } else {
            dc.kind = DecayKind::Persistent;
        }
    }
    return out;
}

std::string decay_kind_name(DecayKind kind) {
    switch (kind) {
        case DecayKind::Zero: return "zero";
        case DecayKind::SuperExp: return "super_exp";
        case DecayKind::Exp: return "exp";
        case DecayKind::Persistent: return "persistent";
    }
    return "persistent";
}

std::vector<LayerRatio> assumption1_check(const ForwardTrace& trace) {
    const int L = static_cast<int>(trace.post.size());
    if (L < 2) throw NotApplicable("assumption1_check: needs L >= 2 separated layers");
    std::vector<LayerRatio> out;
    out.reserve(static_cast<std::size_t>(L) - 1);
    for (int l = 2; l <= L; ++l) {
        const Matrix& H = trace.H(l);
        const Matrix& Lam = trace.Lambda(l);
        const double hn = H.norm(), ln = Lam.norm();
        LayerRatio row;
        row.layer = l;
        row.r = hn > 0.0 ? H.rowwise().mean().norm() / hn : 0.0;
        row.r_tilde = ln > 0.0 ? Lam.rowwise().mean().norm() / ln : 0.0;
        row.satisfied = row.r <= row.r_tilde + 1e-12;
        out.push_back(row);
    }
    return out;
}

DimReport solution_space_dims(int K, int r, const std::vector<long long>& d_values, int L) {
    if (r < 2 || r >= K - 1)
        throw InvalidParameter("solution_space_dims: rank must satisfy 2 <= r < K-1, got r=" + std::to_string(r) +
                               ", K=" + std::to_string(K));
    if (L < 1) throw InvalidParameter("solution_space_dims: need L >= 1");
    DimReport rep;
    rep.K = K;
    rep.r = r;
    rep.L = L;
    rep.limit = static_cast<double>(K - 1) / r;
    rep.rows.reserve(d_values.size());
    const long long Km1 = K - 1;
    for (long long d : d_values) {
        if (d < K) throw InvalidParameter("solution_space_dims: widths must satisfy d >= K");
        DimRow row;
        row.d = d;
        row.dnc_dim = L * (Km1 * d - Km1 * Km1);  // Grassmann degeneracy of the simplex
        row.dim_lower = L * grassmann_dim(r, d);
        row.dim_upper = L * stiefel_dim(r, d);
        row.ratio_lower = static_cast<double>(row.dnc_dim) / static_cast<double>(row.dim_upper);
        row.ratio_upper = static_cast<double>(row.dnc_dim) / static_cast<double>(row.dim_lower);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace dufm
