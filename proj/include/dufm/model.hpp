#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dufm/linalg.hpp"

namespace dufm {

/// Entrywise activation used by the minimally nonlinear MSE model, and
/// internally (as ReLU) by the ReLU CE model.
struct Activation {
    enum class Kind { Identity, Relu, HadamardPower, Custom };

    Kind kind = Kind::Identity;
    int power = 1;                         // HadamardPower only, p >= 1
    std::function<double(double)> fn;      // Custom only

    double operator()(double x) const;
    /// Entrywise derivative; ReLU uses the subgradient convention zeta'(0)=0.
    double deriv(double x) const;
    bool differentiable() const { return kind != Kind::Custom; }

    static Activation identity() { return {}; }
    static Activation relu() { return {Kind::Relu, 1, nullptr}; }
    static Activation hadamard_power(int p);
    std::string name() const;
};

Matrix apply_activation(const Activation& zeta, const Matrix& A);

enum class ModelFamily { LinearCE, ReluCE, MseMinNonlinear };

struct ModelKind {
    ModelFamily family = ModelFamily::LinearCE;
    Activation zeta;  // final-layer activation, MseMinNonlinear only

    static ModelKind linear_ce() { return {ModelFamily::LinearCE, Activation::identity()}; }
    static ModelKind relu_ce() { return {ModelFamily::ReluCE, Activation::relu()}; }
    static ModelKind mse(const Activation& z) { return {ModelFamily::MseMinNonlinear, z}; }
    std::string name() const;
};

ModelKind model_kind_from_name(const std::string& name);

struct HyperParams {
    double lambda = 1e-3;
};

/// Optimization variables of a depth-L stack: mats[0] = H_1 (d x K),
/// mats[l] = W_l for 1 <= l <= L (d x d interior, K x d for W_L).
struct ParamStack {
    int K = 0, d = 0, L = 0;
    std::vector<Matrix> mats;

    Matrix& H1() { return mats[0]; }
    const Matrix& H1() const { return mats[0]; }
    Matrix& W(int l) { return mats[static_cast<std::size_t>(l)]; }
    const Matrix& W(int l) const { return mats[static_cast<std::size_t>(l)]; }

    int count() const { return L + 1; }
    long long total_params() const;
    void validate() const;  // throws InvalidDimension

    static ParamStack zeros(int K, int d, int L);
};

/// Layer-by-layer evaluation record: pre[l-1] = H_l for l = 1..L+1,
/// post[l-1] = Lambda_l for l = 1..L (Lambda_1 = H_1; no activation is
/// applied to the free features). Z = H_{L+1}.
struct ForwardTrace {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;

    const Matrix& output() const { return pre.back(); }
    const Matrix& H(int l) const { return pre[static_cast<std::size_t>(l - 1)]; }
    const Matrix& Lambda(int l) const { return post[static_cast<std::size_t>(l - 1)]; }
};

ForwardTrace forward(const ParamStack& params, const ModelKind& kind);

/// g(Z) = sum_c -log softmax(Z)_cc over columns, computed with per-column
/// max subtraction.
double fit_term_ce(const Matrix& Z);

struct ProbError {
    Matrix P;  // column softmax of Z
    Matrix M;  // P - I
};

ProbError probability_error(const Matrix& Z);

double loss(const ParamStack& params, const ModelKind& kind, const HyperParams& hp);

/// Exact gradients of the linear CE loss, one matrix per parameter
/// (index 0 = H_1). Throws UnsupportedKind for other families; use finite
/// differences or backprop there.
std::vector<Matrix> analytic_gradients(const ParamStack& params, const HyperParams& hp,
                                       const ModelKind& kind = ModelKind::linear_ce());

/// Reverse-mode gradients for any kind with a differentiable activation.
std::vector<Matrix> backprop_gradients(const ParamStack& params, const ModelKind& kind, const HyperParams& hp);

/// Central finite differences of loss; per-entry step is
/// step_scale * (1 + |entry|). Test oracle for every kind.
std::vector<Matrix> finite_difference_gradients(const ParamStack& params, const ModelKind& kind,
                                                const HyperParams& hp, double step_scale = 1e-5);

double max_gradient_norm(const std::vector<Matrix>& grads);

}  // namespace dufm
