#include "dufm/model.hpp"

#include <cmath>

namespace dufm {

double Activation::operator()(double x) const {
    switch (kind) {
        case Kind::Identity: return x;
        case Kind::Relu: return x > 0.0 ? x : 0.0;
        case Kind::HadamardPower: return std::pow(x, power);
        case Kind::Custom: return fn(x);
    }
    return x;
}

double Activation::deriv(double x) const {
    switch (kind) {
        case Kind::Identity: return 1.0;
        case Kind::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Kind::HadamardPower: return power * std::pow(x, power - 1);
        case Kind::Custom: throw UnsupportedKind("Activation::deriv: custom activations have no analytic derivative");
    }
    return 1.0;
}

Activation Activation::hadamard_power(int p) {
    if (p < 1) throw InvalidParameter("hadamard_power: exponent must be >= 1, got " + std::to_string(p));
    Activation a;
    a.kind = Kind::HadamardPower;
    a.power = p;
    return a;
}

std::string Activation::name() const {
    switch (kind) {
        case Kind::Identity: return "identity";
        case Kind::Relu: return "relu";
        case Kind::HadamardPower: return "hadamard_power(" + std::to_string(power) + ")";
        case Kind::Custom: return "custom";
    }
    return "identity";
}

Matrix apply_activation(const Activation& zeta, const Matrix& A) {
    if (zeta.kind == Activation::Kind::Identity) return A;
    Matrix B(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i) B(i, j) = zeta(A(i, j));
    return B;
}

std::string ModelKind::name() const {
    switch (family) {
        case ModelFamily::LinearCE: return "linear_ce";
        case ModelFamily::ReluCE: return "relu_ce";
        case ModelFamily::MseMinNonlinear: return "mse_" + zeta.name();
    }
    return "linear_ce";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "linear_ce") return ModelKind::linear_ce();
    if (name == "relu_ce") return ModelKind::relu_ce();
    if (name == "mse_identity") return ModelKind::mse(Activation::identity());
    if (name == "mse_relu") return ModelKind::mse(Activation::relu());
    if (name.rfind("mse_hadamard_power(", 0) == 0 && name.back() == ')') {
        const int p = std::stoi(name.substr(19, name.size() - 20));
        return ModelKind::mse(Activation::hadamard_power(p));
    }
    throw InvalidParameter("unknown model kind: " + name);
}

long long ParamStack::total_params() const {
    long long n = 0;
    for (const Matrix& m : mats) n += static_cast<long long>(m.size());
    return n;
}

void ParamStack::validate() const {
    if (K < 1 || d < K || L < 1)
        throw InvalidDimension("ParamStack: need K >= 1, d >= K, L >= 1 (K=" + std::to_string(K) +
                               ", d=" + std::to_string(d) + ", L=" + std::to_string(L) + ")");
    if (static_cast<int>(mats.size()) != L + 1)
        throw InvalidDimension("ParamStack: expected " + std::to_string(L + 1) + " matrices, got " +
                               std::to_string(mats.size()));
    auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const std::string& what) {
        if (m.rows() != r || m.cols() != c)
            throw InvalidDimension("ParamStack: " + what + " must be " + std::to_string(r) + "x" +
                                   std::to_string(c) + ", got " + std::to_string(m.rows()) + "x" +
                                   std::to_string(m.cols()));
        if (!m.allFinite()) throw InvalidParameter("ParamStack: " + what + " has non-finite entries");
    };
    expect(H1(), d, K, "H_1");
    for (int l = 1; l < L; ++l) expect(W(l), d, d, "W_" + std::to_string(l));
    expect(W(L), K, d, "W_" + std::to_string(L));
}

ParamStack ParamStack::zeros(int K, int d, int L) {
    ParamStack p;
    p.K = K;
    p.d = d;
    p.L = L;
    p.mats.emplace_back(Matrix::Zero(d, K));
    for (int l = 1; l < L; ++l) p.mats.emplace_back(Matrix::Zero(d, d));
    p.mats.emplace_back(Matrix::Zero(K, d));
    return p;
}

namespace {

// Activation applied to H_l before W_l for l >= 2; the free features H_1 are
// never passed through it.
Activation layer_activation(const ModelKind& kind, int l, int L) {
    switch (kind.family) {
        case ModelFamily::LinearCE: return Activation::identity();
        case ModelFamily::ReluCE: return Activation::relu();
        case ModelFamily::MseMinNonlinear: return l == L ? kind.zeta : Activation::identity();
    }
    return Activation::identity();
}

}  // namespace

ForwardTrace forward(const ParamStack& params, const ModelKind& kind) {
    params.validate();
    const int L = params.L;
    ForwardTrace t;
    t.pre.reserve(static_cast<std::size_t>(L) + 1);
    t.post.reserve(static_cast<std::size_t>(L));
    t.pre.push_back(params.H1());
    t.post.push_back(params.H1());  // Lambda_1 = H_1
    for (int l = 1; l <= L; ++l) {
        const Matrix H_next = params.W(l) * t.post.back();
        t.pre.push_back(H_next);
        if (l < L) t.post.push_back(apply_activation(layer_activation(kind, l + 1, L), H_next));
    }
    return t;
}

double fit_term_ce(const Matrix& Z) {
    if (Z.rows() != Z.cols())
        throw InvalidDimension("fit_term_ce: output matrix must be square, got " + std::to_string(Z.rows()) +
                               "x" + std::to_string(Z.cols()));
    if (!Z.allFinite()) throw InvalidParameter("fit_term_ce: non-finite output matrix");
    const Eigen::Index K = Z.cols();
    double g = 0.0;
    for (Eigen::Index c = 0; c < K; ++c) {
        const double m = Z.col(c).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index r = 0; r < K; ++r) denom += std::exp(Z(r, c) - m);
        g += m + std::log(denom) - Z(c, c);
    }
    return g;
}

ProbError probability_error(const Matrix& Z) {
    if (Z.rows() != Z.cols())
        throw InvalidDimension("probability_error: output matrix must be square");
    if (!Z.allFinite()) throw InvalidParameter("probability_error: non-finite output matrix");
    const Eigen::Index K = Z.cols();
    ProbError pe;
    pe.P.resize(K, K);
    for (Eigen::Index c = 0; c < K; ++c) {
        const double m = Z.col(c).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index r = 0; r < K; ++r) denom += std::exp(Z(r, c) - m);
        for (Eigen::Index r = 0; r < K; ++r) pe.P(r, c) = std::exp(Z(r, c) - m) / denom;
    }
    pe.M = pe.P - Matrix::Identity(K, K);
    return pe;
}

namespace {

double regularization(const ParamStack& params, double lambda) {
    double sq = 0.0;
    for (const Matrix& m : params.mats) sq += m.squaredNorm();
    return 0.5 * lambda * sq;
}

double fit_term(const Matrix& Z, const ModelKind& kind, int K) {
    switch (kind.family) {
        case ModelFamily::LinearCE:
        case ModelFamily::ReluCE:
            return fit_term_ce(Z) / K;
        case ModelFamily::MseMinNonlinear:
            return (Z - Matrix::Identity(K, K)).squaredNorm() / (2.0 * K);
    }
    return 0.0;
}

}  // namespace

double loss(const ParamStack& params, const ModelKind& kind, const HyperParams& hp) {
    const ForwardTrace t = forward(params, kind);
    return fit_term(t.output(), kind, params.K) + regularization(params, hp.lambda);
}

std::vector<Matrix> analytic_gradients(const ParamStack& params, const HyperParams& hp, const ModelKind& kind) {
    if (kind.family != ModelFamily::LinearCE)
        throw UnsupportedKind("analytic_gradients: closed form exists for the linear CE family only (got " +
                              kind.name() + "); use finite differences");
    params.validate();
    const int K = params.K, L = params.L;

    // A_{l+1} = W_L ... W_{l+1} (A_{L+1} = I_K), B_{l-1} = W_{l-1} ... W_1 H_1
    // (B_{-1} = I_K); dL/dW_l = (1/K) A_{l+1}^T M B_{l-1}^T + lambda W_l.
    std::vector<Matrix> A(static_cast<std::size_t>(L) + 2);
    A[static_cast<std::size_t>(L) + 1] = Matrix::Identity(K, K);
    for (int l = L; l >= 1; --l) A[static_cast<std::size_t>(l)] = A[static_cast<std::size_t>(l) + 1] * params.W(l);

    std::vector<Matrix> B(static_cast<std::size_t>(L) + 1);
    B[0] = Matrix::Identity(K, K);  // B_{-1}, stored shifted by one
    B[1] = params.H1();             // B_0
    for (int l = 1; l < L; ++l) B[static_cast<std::size_t>(l) + 1] = params.W(l) * B[static_cast<std::size_t>(l)];

    const Matrix Z = A[1] * params.H1();
    const Matrix M = probability_error(Z).M;

    std::vector<Matrix> grads(static_cast<std::size_t>(L) + 1);
    for (int l = 0; l <= L; ++l) {
        const Matrix& A_next = A[static_cast<std::size_t>(l) + 1];
        const Matrix& B_prev = B[static_cast<std::size_t>(l)];
        grads[static_cast<std::size_t>(l)] =
            (A_next.transpose() * M * B_prev.transpose()) / K + hp.lambda * params.mats[static_cast<std::size_t>(l)];
    }
    return grads;
}

std::vector<Matrix> backprop_gradients(const ParamStack& params, const ModelKind& kind, const HyperParams& hp) {
    const int K = params.K, L = params.L;
    const ForwardTrace t = forward(params, kind);

    Matrix G;  // dL/dH_{l+1}, starting at the output
    if (kind.family == ModelFamily::MseMinNonlinear)
        G = (t.output() - Matrix::Identity(K, K)) / K;
    else
        G = probability_error(t.output()).M / K;

    std::vector<Matrix> grads(static_cast<std::size_t>(L) + 1);
    for (int l = L; l >= 1; --l) {
        grads[static_cast<std::size_t>(l)] = G * t.Lambda(l).transpose() + hp.lambda * params.W(l);
        Matrix G_prev = params.W(l).transpose() * G;
        if (l >= 2) {
            const Activation act = layer_activation(kind, l, L);
            if (act.kind != Activation::Kind::Identity) {
                const Matrix& H_l = t.H(l);
                for (Eigen::Index j = 0; j < G_prev.cols(); ++j)
                    for (Eigen::Index i = 0; i < G_prev.rows(); ++i) G_prev(i, j) *= act.deriv(H_l(i, j));
            }
        }
        G = std::move(G_prev);
    }
    grads[0] = G + hp.lambda * params.H1();
    return grads;
}

std::vector<Matrix> finite_difference_gradients(const ParamStack& params, const ModelKind& kind,
                                                const HyperParams& hp, double step_scale) {
    if (!(step_scale > 0.0)) throw InvalidParameter("finite_difference_gradients: step must be positive");
    ParamStack work = params;
    std::vector<Matrix> grads;
    grads.reserve(work.mats.size());
    for (Matrix& m : work.mats) {
        Matrix g(m.rows(), m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                const double orig = m(i, j);
                const double h = step_scale * (1.0 + std::abs(orig));
                m(i, j) = orig + h;
                const double fp = loss(work, kind, hp);
                m(i, j) = orig - h;
                const double fm = loss(work, kind, hp);
                m(i, j) = orig;
                g(i, j) = (fp - fm) / (2.0 * h);
            }
        grads.push_back(std::move(g));
    }
    return grads;
}

double max_gradient_norm(const std::vector<Matrix>& grads) {
    double m = 0.0;
    for (const Matrix& g : grads) m = std::max(m, g.norm());
    return m;
}

}  // namespace dufm
