// Acceptance suite: every release-gating check as one pass/fail line.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dufm/construct.hpp"
#include "dufm/hessian.hpp"
#include "dufm/io.hpp"
#include "dufm/metrics.hpp"
#include "dufm/reduced.hpp"
#include "dufm/train.hpp"
#include "support.hpp"

using namespace dufm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int n, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %-34s %s\n", ok ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// --- 1. gradient oracle ----------------------------------------------------

void criterion1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int K = 2 + static_cast<int>(rng() % 4);        // K <= 5
        const int d = K + static_cast<int>(rng() % (9 - K));  // d <= 8
        const int L = 1 + static_cast<int>(rng() % 4);        // L <= 4
        const double lambda = 1e-3 * (1.0 + static_cast<double>(rng() % 100));
        const ParamStack p = testing::random_stack(K, d, L, rng);
        const auto analytic = analytic_gradients(p, {lambda});
        const auto fd = finite_difference_gradients(p, ModelKind::linear_ce(), {lambda});
        worst = std::max(worst, testing::relative_error(analytic, fd));
    }
    const double elapsed = seconds_since(t0);
    report(1, "gradient oracle", worst <= 1e-6 && elapsed < 10.0,
           "100 instances, worst rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// --- 2. structure ranking --------------------------------------------------

void criterion2() {
    const auto t0 = Clock::now();
    const std::vector<std::pair<std::string, Matrix>> frames = {
        {"dnc", simplex_etf(4)}, {"lowrank-linear", lowrank_frame_linear(4)}};
    const auto deep = compare_structures(frames, ReducedCeParams{4, 3, 1e-3});
    const bool deep_ok = deep.front().id == "lowrank-linear" && deep[1].total - deep[0].total > 1e-9;
    const auto shallow = compare_structures(frames, ReducedCeParams{4, 1, 1e-3});
    const bool shallow_ok = shallow.front().id == "dnc" && shallow[1].total - shallow[0].total > 1e-9;
    const double elapsed = seconds_since(t0);
    report(2, "structure ranking", deep_ok && shallow_ok && elapsed < 1.0,
           "L=3 gap " + fmt(deep[1].total - deep[0].total) + ", L=1 gap " +
               fmt(shallow[1].total - shallow[0].total) + ", " + fmt(elapsed) + " s");
}

// --- 3. threshold grids ----------------------------------------------------

void criterion3() {
    bool ok = true;
    for (int K = 2; K <= 12 && ok; ++K)
        for (int L = 1; L <= 6 && ok; ++L)
            ok = threshold_check(TheoremId::T1, K, L) == ((K >= 4 && L >= 3) || (K >= 6 && L == 2));
    std::string detail = ok ? "T1 region exact over K in [2,12], L in [1,6]" : "T1 region mismatch";

    bool ok6 = true;
    for (int K = 8; K <= 20 && ok6; ++K) ok6 = !threshold_check(TheoremId::T6, K, 3);
    for (int K = 8; K <= 20 && ok6; ++K) {
        const bool got4 = threshold_check(TheoremId::T6, K, 4);
        const bool got5 = threshold_check(TheoremId::T6, K, 5);
        if (K % 2 == 0)
            ok6 = got4 == (K >= 14) && got5 == (K >= 10);
        else
            ok6 = got4 == (K >= 17) && got5 == (K >= 11);
    }
    // Combined statement: K >= 16 at L = 4 and K >= 10 at L in {5, 6}.
    for (int K = 16; K <= 20 && ok6; ++K) ok6 = threshold_check(TheoremId::T6, K, 4);
    for (int K = 10; K <= 20 && ok6; ++K)
        ok6 = threshold_check(TheoremId::T6, K, 5) &&
              (K % 2 == 0 ? threshold_check(TheoremId::T6, K, 6) : (K < 11 || threshold_check(TheoremId::T6, K, 6)));
    if (!ok6) detail = "T6 parity thresholds mismatch";
    report(3, "theorem threshold grids", ok && ok6, detail + "; T6 thresholds 14/17 (L=4), 10/11 (L>=5)");
}

// --- 4. DNC stationarity and leading-order PSD ------------------------------

void criterion4() {
    const int K = 4, d = 4, L = 3;
    const double lambda = 0.01;
    const ScaleRoots roots = solve_dnc_scale(K, L, lambda);
    bool ok = roots.has_large_root();
    double grad_norm = 1e300, min_eig = -1e300, rel_floor = 0.0;
    double ratio_coarse = 0.0, ratio_fine = 0.0;
    if (ok) {
        const ParamStack dnc = build_dnc(K, d, L, roots.large_root());
        grad_norm = max_gradient_norm(analytic_gradients(dnc, {lambda}));
        ok = grad_norm <= 1e-8;

        const HessianBlocks H = hessian_leading_order_dnc(K, d, L, roots.large_root());
        const Vector eigs = hessian_eigenvalues(H);
        min_eig = eigs.minCoeff();
        rel_floor = 1e-8 * std::max(std::abs(eigs.minCoeff()), std::abs(eigs.maxCoeff()));
        ok = ok && min_eig >= -rel_floor;

        ratio_coarse = scale_split(dnc, {lambda}).ratio;
        const ScaleRoots fine_roots = solve_dnc_scale(K, L, 1e-3);
        const ParamStack fine = build_dnc(K, d, L, fine_roots.large_root());
        ratio_fine = scale_split(fine, {1e-3}).ratio;
        ok = ok && ratio_fine > ratio_coarse;
    }
    report(4, "DNC stationarity + leading PSD", ok,
           "grad " + fmt(grad_norm) + ", min eig " + fmt(min_eig) + ", ratio " + fmt(ratio_coarse) + " -> " +
               fmt(ratio_fine));
}

// --- 5. Hessian oracle -------------------------------------------------------

void criterion5() {
    std::mt19937_64 rng(1005);
    const HyperParams hp{4e-3};
    const ParamStack p = testing::random_stack(3, 3, 2, rng, 0.8);
    const Matrix analytic = hessian_full_linear_ce(p, hp).assemble();
    const Matrix fd = testing::finite_difference_hessian(p, ModelKind::linear_ce(), hp);
    const double rel = (analytic - fd).norm() / fd.norm();
    report(5, "Hessian oracle", rel <= 1e-4, "K=3 d=3 L=2 rel err " + fmt(rel));
}

// --- 6. balancedness at convergence ------------------------------------------

void criterion6() {
    TrainConfig c;
    c.kind = ModelKind::linear_ce();
    c.K = 3;
    c.d = 8;
    c.L = 3;
    c.lambda = 5e-3;
    c.learning_rate = 0.5;
    c.max_steps = 200000;
    c.grad_tol = 1e-7;
    c.init_scale = 1.0;
    c.seed = 1;
    const RunRecord r = train(c);
    const double residual = balancedness_residual(r.final_params);
    const bool ok = r.termination == StopReason::GradTol && residual <= 1e-4;
    report(6, "balancedness at convergence", ok,
           stop_reason_name(r.termination) + " after " + std::to_string(r.loss_curve.back().first) +
               " steps, residual " + fmt(residual));
}

// --- 7. depth sweep spectra ---------------------------------------------------

void criterion7() {
    std::map<int, Spectrum> spectra;
    bool rank_ok = true;
    for (int L : {2, 4, 6, 8, 10}) {
        ReducedCeParams p{6, L, 0.1 / (static_cast<double>(L) * L)};
        MinimizeOptions opts;
        opts.restarts = 10;
        opts.seed = 0;
        opts.max_iters = 5000;
        const MinimizeResult res = minimize_reduced_ce(p, opts);
        spectra[L] = make_spectrum(singular_values(res.Z));
        if (L >= 6) rank_ok = rank_ok && spectra[L].rank() <= ds_rank_upper_bound(6);
    }
    const auto classes = decay_classify(spectra);
    int persistent = 0;
    bool suppressed_ok = true;
    for (const DecayClass& c : classes) {
        if (c.kind == DecayKind::Persistent)
            ++persistent;
        else
            suppressed_ok = suppressed_ok && (c.kind == DecayKind::Zero || c.log_slope < 0.0);
    }

    // Strong-regularization regime: lambda_L = 2 / sqrt(L) collapses Z by L=16.
    ReducedCeParams pz{6, 16, 2.0 / std::sqrt(16.0)};
    MinimizeOptions oz;
    oz.restarts = 10;
    oz.seed = 0;
    oz.max_iters = 5000;
    const MinimizeResult rz = minimize_reduced_ce(pz, oz);
    const bool zero_ok = rz.Z.norm() <= 1e-3;

    const bool ok = persistent <= ds_rank_upper_bound(6) && suppressed_ok && rank_ok && zero_ok;
    report(7, "depth-sweep spectra", ok,
           std::to_string(persistent) + " persistent (bound 3), ||Z||@L16 " + fmt(rz.Z.norm()));
}

// --- 8. reduced MSE equivalence ----------------------------------------------

void criterion8() {
    std::mt19937_64 rng(1008);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + static_cast<int>(rng() % 3);
        const int d = K + static_cast<int>(rng() % (7 - K));
        const int L = 2 + static_cast<int>(rng() % 2);
        const double lambda = 1e-3 * (1.0 + static_cast<double>(rng() % 50));
        Matrix H_L(d, K);
        for (int j = 0; j < K; ++j)
            for (int i = 0; i < d; ++i) H_L(i, j) = gauss(rng);
        const Activation zeta = Activation::relu();

        const double reduced = reduced_mse_loss(H_L, ReducedMseParams{K, d, L, lambda, zeta});

        ParamStack stack;
        stack.K = K;
        stack.d = d;
        stack.L = L;
        stack.mats = balanced_factors(H_L, L, d);
        stack.mats.push_back(mse_optimal_WL(H_L, lambda, zeta));
        const double full = loss(stack, ModelKind::mse(zeta), {lambda});
        const double rescaled = 0.5 * L * lambda * reduced;
        worst = std::max(worst, std::abs(full - rescaled) / std::abs(full));
    }
    report(8, "reduced MSE equivalence", worst <= 1e-6, "20 instances, worst rel err " + fmt(worst));
}

// --- 9. Hadamard rank prediction -----------------------------------------------

void criterion9() {
    auto binom = [](long long n, int k) {
        long long b = 1;
        for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
        return b;
    };
    bool table_ok = true;
    for (int p = 1; p <= 5 && table_ok; ++p)
        for (long long K = 1; K <= 100 && table_ok; ++K) {
            long long expected = 0;
            for (long long r = 1;; ++r)
                if (binom(r + p - 1, p) >= K) {
                    expected = r;
                    break;
                }
            table_ok = hadamard_min_rank(K, p) == expected;
        }

    ReducedMseParams p{6, 8, 8, 1e-3 / 8.0, Activation::hadamard_power(2)};
    MinimizeOptions opts;
    opts.restarts = 10;
    opts.seed = 0;
    opts.max_iters = 5000;
    const MinimizeResult res = minimize_reduced_mse(p, opts);
    const int rank = make_spectrum(singular_values(res.Z)).rank();
    const long long predicted = hadamard_min_rank(6, 2);
    report(9, "Hadamard rank prediction", table_ok && rank == predicted,
           "table exact; empirical rank " + std::to_string(rank) + " vs predicted " + std::to_string(predicted));
}

// --- 10. solution-space dimensions ----------------------------------------------

void criterion10() {
    bool ok = stiefel_dim(3, 10) == 24 && grassmann_dim(3, 10) == 21;
    for (auto [K, r] : std::vector<std::pair<int, int>>{{6, 2}, {8, 3}, {10, 4}}) {
        const int L = 4;
        std::vector<long long> ds;
        for (long long d = K; d <= K + r + 5; ++d) ds.push_back(d);
        ds.push_back(1000000);
        const DimReport rep = solution_space_dims(K, r, ds, L);
        for (const DimRow& row : rep.rows) {
            ok = ok && row.dnc_dim == 1LL * L * ((K - 1) * row.d - 1LL * (K - 1) * (K - 1));
            ok = ok && row.dim_lower == 1LL * L * (r * row.d - 1LL * r * r);
            ok = ok && row.dim_upper == 1LL * L * (r * row.d - 1LL * r * (r + 1) / 2);
            if (row.d < K + r - 1) ok = ok && row.ratio_upper < 1.0;
            if (row.d == K + r - 1) ok = ok && std::abs(row.ratio_upper - 1.0) <= 1e-14;
            if (row.d > K + r - 1) ok = ok && row.ratio_upper > 1.0;
        }
        const DimRow& limit_row = rep.rows.back();
        ok = ok && std::abs(limit_row.ratio_lower - rep.limit) <= 1e-3 &&
             std::abs(limit_row.ratio_upper - rep.limit) <= 1e-3;
    }
    report(10, "solution-space dimensions", ok, "closed forms, crossover at d=K+r-1, limit (K-1)/r @ d=1e6");
}

// --- 11. ReLU construction beats the DNC bound -----------------------------------

void criterion11() {
    bool ok = true;
    std::string detail;
    for (auto [K, L] : std::vector<std::pair<int, int>>{{14, 4}, {10, 5}}) {
        const double lambda = 1e-3, psi = 1.0;
        const int d = K + 2;
        const ParamStack stack = build_lowrank_relu(K, d, L, psi);
        const ForwardTrace lin = forward(stack, ModelKind::linear_ce());
        const ForwardTrace rel = forward(stack, ModelKind::relu_ce());

        const double out_scale = lowrank_relu_output_scale(K, L, psi);
        bool nonneg = (relu_frame_X(K) + relu_frame_Y(K)).minCoeff() >= 0.0;
        double trace_gap = 0.0;
        for (int l = 2; l <= L; ++l) {
            nonneg = nonneg && rel.H(l).minCoeff() >= -1e-12 * rel.H(l).norm();
            trace_gap = std::max(trace_gap, (lin.H(l) - rel.H(l)).norm() / (1.0 + rel.H(l).norm()));
        }
        trace_gap = std::max(trace_gap, (lin.output() - rel.output()).norm() / (1.0 + rel.output().norm()));

        const double z_err = (rel.output() - out_scale * relu_frame_X(K)).norm() / (out_scale * relu_frame_X(K).norm());

        const double lr_loss = loss(stack, ModelKind::relu_ce(), {lambda});
        const double dnc_bound = std::log(1.0 + (K - 1.0) * std::exp(-out_scale)) +
                                 0.5 * lambda * (L + 1.0) * (K - 1.0) * std::pow(out_scale, 2.0 / (L + 1));
        const double gap = dnc_bound - lr_loss;

        ok = ok && nonneg && trace_gap <= 1e-12 && z_err <= 1e-10 && gap > 1e-9;
        detail += "K=" + std::to_string(K) + ",L=" + std::to_string(L) + " gap " + fmt(gap) + "; ";
    }
    report(11, "ReLU construction vs DNC bound", ok, detail);
}

// --- 12. prevalence sweep smoke test -----------------------------------------------

void criterion12() {
    TrainConfig base;
    base.kind = ModelKind::linear_ce();
    base.K = 4;
    base.L = 3;
    base.learning_rate = 0.5;
    base.max_steps = 1500;
    base.grad_tol = 1e-7;
    base.init_scale = 1.0;
    SweepGrid grid;
    grid.d = {6, 12, 24};
    grid.lambda = {1e-3, 1e-2};
    grid.learning_rate = {0.5};
    grid.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    const auto records1 = sweep(grid, base, 1);
    const std::string csv1 = sweep_csv(records1);
    const auto records2 = sweep(grid, base, 2);
    const std::string csv2 = sweep_csv(records2);

    const bool stable = csv1 == csv2;
    const bool complete = records1.size() == 60 && std::count(csv1.begin(), csv1.end(), '\n') == 61;
    bool classified = true;
    std::map<std::string, int> tally;
    for (const RunRecord& r : records1) ++tally[classify_run(r).name()];
    for (const auto& [name, count] : tally) classified = classified && count > 0;

    std::string detail = stable ? "byte-identical rerun; " : "UNSTABLE rerun; ";
    for (const auto& [name, count] : tally) detail += name + ":" + std::to_string(count) + " ";
    report(12, "prevalence sweep smoke test", stable && complete && classified, detail);
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    criterion11();
    criterion12();
    std::printf("%d/12 criteria passed in %.1f s\n", 12 - failures, seconds_since(t0));
    return failures;
}
