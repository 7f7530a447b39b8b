#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "dufm/construct.hpp"
#include "dufm/metrics.hpp"
#include "support.hpp"

using namespace dufm;

TEST_CASE("nc_metrics exact-collapse inputs map to zeros") {
    // Three classes, two duplicated columns each, distinct means.
    const int d = 4, K = 3, n = 2;
    std::mt19937_64 rng(89);
    const Matrix means = testing::random_matrix(d, K, rng);
    Matrix H(d, K * n);
    std::vector<int> labels;
    for (int c = 0; c < K; ++c)
        for (int i = 0; i < n; ++i) {
            H.col(labels.size()) = means.col(c);
            labels.push_back(c);
        }
    const Matrix W = testing::random_matrix(K, d, rng);
    const NcMetrics m = nc_metrics(H, labels, W);
    CHECK(m.nc1 <= 1e-20);

    // Centered means forming a scaled simplex embedded in d dims: both NC2
    // deviations vanish, and W proportional to M^T gives nc3 = 0.
    Matrix simplex_feats = Matrix::Zero(d, K);
    simplex_feats.topRows(K) = 2.5 * simplex_etf(K);
    std::vector<int> one_per_class{0, 1, 2};
    Matrix W_dual = Matrix::Zero(K, d);
    W_dual.leftCols(K) = 1.7 * simplex_etf(K);
    const NcMetrics ms = nc_metrics(simplex_feats, one_per_class, W_dual);
    CHECK(ms.nc2_norm_dev <= 1e-10);
    CHECK(ms.nc2_angle_dev <= 1e-10);
    CHECK(ms.nc3 <= 1e-10);
}

TEST_CASE("nc_metrics rejects empty classes and bad labels") {
    const Matrix H = Matrix::Random(3, 4);
    const Matrix W = Matrix::Random(3, 3);
    CHECK_THROWS_AS(nc_metrics(H, {0, 0, 1, 1}, W), InvalidLabels);  // class 2 empty
    CHECK_THROWS_AS(nc_metrics(H, {0, 1, 2, 5}, W), InvalidLabels);
    CHECK_THROWS_AS(nc_metrics(H, {0, 1, 2}, W), InvalidLabels);  // label count
}

TEST_CASE("nc metrics vanish at every layer split of a DNC stack") {
    const int K = 4, d = 6, L = 3;
    const ParamStack p = build_dnc(K, d, L, 1.9, FactorOptions{true, 7});
    const ForwardTrace t = forward(p, ModelKind::linear_ce());
    std::vector<int> labels{0, 1, 2, 3};
    for (int l = 1; l <= L; ++l) {
        // Features out of layer l against the remaining linear classifier.
        Matrix classifier = Matrix::Identity(K, K);
        for (int k = L; k >= l; --k) classifier = classifier * p.W(k);
        const NcMetrics m = nc_metrics(t.H(l), labels, classifier);
        CHECK(m.nc1 <= 1e-10);
        CHECK(m.nc2_norm_dev <= 1e-10);
        CHECK(m.nc2_angle_dev <= 1e-10);
        CHECK(m.nc3 <= 1e-10);
    }
}

TEST_CASE("balancedness_residual separates built from random stacks") {
    CHECK(balancedness_residual(build_dnc(4, 6, 3, 2.0)) <= 1e-10);
    std::mt19937_64 rng(42);
    const ParamStack random = testing::random_stack(4, 6, 3, rng);
    CHECK(balancedness_residual(random) > 0.01);
}

namespace {

std::map<int, Spectrum> synthetic_sweep(const std::vector<int>& Ls,
                                        const std::function<double(int, int)>& value) {
    std::map<int, Spectrum> spectra;
    for (int L : Ls) {
        Vector v(3);
        for (int i = 0; i < 3; ++i) v[i] = value(L, i);
        spectra[L] = make_spectrum(v);
    }
    return spectra;
}

}  // namespace

TEST_CASE("decay_classify on synthetic families") {
    const std::vector<int> Ls{2, 4, 6, 8, 10};
    // Index 0 constant, index 1 exponential, index 2 super-exponential; the
    // rates keep the rank order stable across the sweep (spectra are sorted).
    const auto spectra = synthetic_sweep(Ls, [](int L, int i) {
        if (i == 0) return 3.0;
        if (i == 1) return std::exp(-0.5 * L);
        return std::exp(-0.3 * L * L);
    });
    const auto classes = decay_classify(spectra);
    REQUIRE(classes.size() == 3);
    CHECK(classes[0].kind == DecayKind::Persistent);
    CHECK(classes[1].kind == DecayKind::Exp);
    CHECK(classes[1].rate == doctest::Approx(0.5).epsilon(0.02));
    CHECK(classes[2].kind == DecayKind::SuperExp);
}

TEST_CASE("decay_classify zero class and censoring") {
    const std::vector<int> Ls{2, 4, 6, 8};
    // Sorted order per depth: a persistent value, a family that collapses to
    // exact zero mid-sweep, and an identically zero trailing value.
    const auto spectra = synthetic_sweep(Ls, [](int L, int i) {
        if (i == 0) return 1.0 + 0.01 * L;
        if (i == 1) return L <= 4 ? std::exp(-2.0 * L) : 0.0;
        return 0.0;
    });
    const auto classes = decay_classify(spectra);
    CHECK(classes[0].kind == DecayKind::Persistent);
    const bool suppressed = classes[1].kind == DecayKind::Exp || classes[1].kind == DecayKind::SuperExp ||
                            classes[1].kind == DecayKind::Zero;
    CHECK(suppressed);
    CHECK(classes[1].log_slope < 0.0);
    CHECK(classes[2].kind == DecayKind::Zero);
}

TEST_CASE("decay_classify is invariant to uniform rescaling") {
    const std::vector<int> Ls{2, 4, 6, 8, 10};
    const auto base = synthetic_sweep(Ls, [](int L, int i) {
        if (i == 0) return 5.0 + 0.1 * L;
        if (i == 1) return 7.0 * std::exp(-0.8 * L);
        return L <= 6 ? 0.3 * std::exp(-1.0 * L) : 0.0;
    });
    for (double c : {1e-6, 1.0, 1e6}) {
        std::map<int, Spectrum> scaled;
        for (const auto& [L, sp] : base) scaled[L] = make_spectrum(Vector(c * sp.values));
        const auto c1 = decay_classify(base);
        const auto c2 = decay_classify(scaled);
        REQUIRE(c1.size() == c2.size());
        for (std::size_t i = 0; i < c1.size(); ++i) {
            CHECK(c1[i].kind == c2[i].kind);
            CHECK(c1[i].log_slope == doctest::Approx(c2[i].log_slope).epsilon(1e-9));
        }
    }
}

TEST_CASE("decay_classify needs at least four depths") {
    const std::vector<int> Ls{2, 4, 6};
    const auto spectra = synthetic_sweep(Ls, [](int, int) { return 1.0; });
    CHECK_THROWS_AS(decay_classify(spectra), InsufficientData);
}

TEST_CASE("assumption1_check on analytic traces") {
    // All-positive stack: ReLU is the identity, ratios match exactly.
    std::mt19937_64 rng(97);
    ParamStack pos = ParamStack::zeros(3, 4, 3);
    for (Matrix& m : pos.mats) m = testing::random_matrix(m.rows(), m.cols(), rng).cwiseAbs();
    const auto rows = assumption1_check(forward(pos, ModelKind::relu_ce()));
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.r == doctest::Approx(r.r_tilde).epsilon(1e-12));
        CHECK(r.satisfied);
    }

    // The ReLU block construction satisfies the assumption as well.
    const ParamStack relu = build_lowrank_relu(6, 8, 4, 1.1);
    for (const auto& r : assumption1_check(forward(relu, ModelKind::relu_ce()))) CHECK(r.satisfied);

    CHECK_THROWS_AS(assumption1_check(forward(ParamStack::zeros(3, 4, 1), ModelKind::relu_ce())), NotApplicable);
}

TEST_CASE("assumption1 ratio is zero for centered features") {
    // A stack whose H_2 has exactly zero row means: r_2 = 0 <= r~_2.
    ParamStack p = ParamStack::zeros(2, 3, 2);
    Matrix H1(3, 2);
    H1 << 1.0, -1.0, 2.0, -2.0, 0.5, -0.5;  // columns sum to zero per row
    p.H1() = H1;
    p.W(1) = Matrix::Identity(3, 3);
    p.W(2) = Matrix::Ones(2, 3);
    const auto rows = assumption1_check(forward(p, ModelKind::relu_ce()));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].r == 0.0);
    CHECK(rows[0].satisfied);
}

TEST_CASE("solution_space_dims closed forms") {
    CHECK(stiefel_dim(3, 10) == 24);
    CHECK(grassmann_dim(3, 10) == 21);

    const DimReport rep = solution_space_dims(4, 2, {4, 6, 10}, 3);
    CHECK(rep.rows[0].dnc_dim == 9);  // L ((K-1) d - (K-1)^2) at d = 4
    CHECK(rep.limit == doctest::Approx(1.5));
    for (const DimRow& row : rep.rows) {
        CHECK(row.dim_lower <= row.dim_upper);
        CHECK(row.ratio_lower <= row.ratio_upper);
    }
}

TEST_CASE("dimension ratio crosses one exactly at d = K + r - 1") {
    for (int K : {6, 8, 10})
        for (int r = 2; r < K - 1; ++r) {
            std::vector<long long> ds;
            for (long long d = K; d <= K + r + 4; ++d) ds.push_back(d);
            const DimReport rep = solution_space_dims(K, r, ds, 2);
            for (const DimRow& row : rep.rows) {
                if (row.d < K + r - 1) CHECK(row.ratio_upper < 1.0);
                if (row.d == K + r - 1) CHECK(row.ratio_upper == doctest::Approx(1.0).epsilon(1e-14));
                if (row.d > K + r - 1) CHECK(row.ratio_upper > 1.0);
            }
        }
}

TEST_CASE("dimension ratios are monotone and converge to (K-1)/r") {
    for (auto [K, r] : std::vector<std::pair<int, int>>{{6, 2}, {8, 3}, {10, 4}}) {
        std::vector<long long> ds;
        for (long long d = K; d <= 200; d += 7) ds.push_back(d);
        ds.push_back(1000000);
        const DimReport rep = solution_space_dims(K, r, ds, 4);
        for (std::size_t i = 1; i < rep.rows.size(); ++i) {
            CHECK(rep.rows[i].ratio_lower >= rep.rows[i - 1].ratio_lower - 1e-14);
            CHECK(rep.rows[i].ratio_upper >= rep.rows[i - 1].ratio_upper - 1e-14);
        }
        const DimRow& last = rep.rows.back();
        CHECK(std::abs(last.ratio_lower - rep.limit) <= 1e-3);
        CHECK(std::abs(last.ratio_upper - rep.limit) <= 1e-3);
    }
}

TEST_CASE("solution_space_dims validates the rank range") {
    CHECK_THROWS_AS(solution_space_dims(4, 1, {4}, 2), InvalidParameter);
    CHECK_THROWS_AS(solution_space_dims(4, 3, {4}, 2), InvalidParameter);  // r = K-1 excluded
    CHECK_THROWS_AS(solution_space_dims(6, 2, {5}, 2), InvalidParameter);  // d < K
}
