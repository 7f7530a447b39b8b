#include "dufm/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "dufm/io.hpp"

namespace dufm {

std::string stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::GradTol: return "grad_tol";
        case StopReason::MaxSteps: return "max_steps";
        case StopReason::Divergence: return "divergence";
    }
    return "max_steps";
}

ParamStack init_params(const TrainConfig& config) {
    ParamStack p = ParamStack::zeros(config.K, config.d, config.L);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, config.init_scale / std::sqrt(static_cast<double>(config.d)));
    for (Matrix& m : p.mats)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = gauss(rng);
    p.validate();
    return p;
}

namespace {

MetricSample sample_metrics(long long step, const ParamStack& params, const ModelKind& kind) {
    MetricSample s;
    s.step = step;
    const ForwardTrace t = forward(params, kind);
    std::vector<int> labels(static_cast<std::size_t>(params.K));
    for (int c = 0; c < params.K; ++c) labels[static_cast<std::size_t>(c)] = c;
    // Last-layer collapse metrics: classifier W_L against the features that
    // feed it (the activations entering the last layer).
    const NcMetrics nc = nc_metrics(t.Lambda(params.L), labels, params.W(params.L));
    s.nc1 = nc.nc1;
    s.nc2_norm_dev = nc.nc2_norm_dev;
    s.nc2_angle_dev = nc.nc2_angle_dev;
    s.nc3 = nc.nc3;
    s.balancedness = balancedness_residual(params);
    s.output_spectrum = singular_values(t.output());
    return s;
}

std::vector<Matrix> gradients(const ParamStack& params, const ModelKind& kind, const HyperParams& hp) {
    if (kind.family == ModelFamily::LinearCE) return analytic_gradients(params, hp);
    return backprop_gradients(params, kind, hp);
}

void axpy(ParamStack& params, double step, const std::vector<Matrix>& dir) {
    for (std::size_t i = 0; i < params.mats.size(); ++i) params.mats[i] -= step * dir[i];
}

}  // namespace

RunRecord train(const TrainConfig& config) { return train_from(init_params(config), config); }

RunRecord train_from(ParamStack init, const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw InvalidParameter("train: learning_rate must be positive");
    if (config.max_steps < 1) throw InvalidParameter("train: max_steps must be >= 1");
    if (!(config.grad_tol > 0.0)) throw InvalidParameter("train: grad_tol must be positive");
    init.validate();
    if (init.K != config.K || init.d != config.d || init.L != config.L)
        throw InvalidDimension("train_from: warm start does not match the configured dimensions");

    RunRecord rec;
    rec.config = config;
    const HyperParams hp{config.lambda};
    ParamStack params = std::move(init);
    const long long stride = config.effective_stride();

    double cur_loss = loss(params, config.kind, hp);
    const double initial_loss = cur_loss;
    rec.loss_curve.emplace_back(0, cur_loss);
    rec.metric_timeline.push_back(sample_metrics(0, params, config.kind));
    rec.termination = StopReason::MaxSteps;

    long long step = 0;
    while (step < config.max_steps) {
        const std::vector<Matrix> grads = gradients(params, config.kind, hp);
        const double gnorm = max_gradient_norm(grads);
        rec.grad_norm_curve.emplace_back(step, gnorm);
        if (gnorm <= config.grad_tol) {
            rec.termination = StopReason::GradTol;
            break;
        }

        double lr = config.learning_rate;
        ParamStack candidate = params;
        axpy(candidate, lr, grads);
        double cand_loss = loss(candidate, config.kind, hp);
        if (config.backtracking) {
            int halvings = 0;
            while (cand_loss > cur_loss && halvings < 60) {
                lr *= 0.5;
                candidate = params;
                axpy(candidate, lr, grads);
                cand_loss = loss(candidate, config.kind, hp);
                ++halvings;
            }
        }
        params = std::move(candidate);
        cur_loss = cand_loss;
        ++step;
        rec.loss_curve.emplace_back(step, cur_loss);
        if (step % stride == 0) rec.metric_timeline.push_back(sample_metrics(step, params, config.kind));

        if (!std::isfinite(cur_loss) || cur_loss > 1e3 * std::max(initial_loss, 1e-300)) {
            rec.termination = StopReason::Divergence;
            break;
        }
    }
    if (rec.metric_timeline.back().step != step)
        rec.metric_timeline.push_back(sample_metrics(step, params, config.kind));
    rec.final_params = std::move(params);
    return rec;
}

std::string RunClass::name() const {
    switch (kind) {
        case Kind::DncLike: return "dnc_like";
        case Kind::LowRank: return "low_rank(" + std::to_string(rank) + ")";
        case Kind::ZeroCollapse: return "zero_collapse";
        case Kind::Other: return "other";
    }
    return "other";
}

RunClass classify_run(const RunRecord& record, const ClassifyThresholds& th) {
    const ParamStack& params = record.final_params;
    const ForwardTrace t = forward(params, record.config.kind);
    const Matrix& Z = t.output();

    RunClass rc;
    rc.output_norm = Z.norm();
    const Spectrum sp = make_spectrum(singular_values(Z), th.rank_rel_tol);
    rc.rank = sp.rank();

    std::vector<int> labels(static_cast<std::size_t>(params.K));
    for (int c = 0; c < params.K; ++c) labels[static_cast<std::size_t>(c)] = c;
    const NcMetrics nc = nc_metrics(t.Lambda(params.L), labels, params.W(params.L));
    rc.nc2_angle_dev = nc.nc2_angle_dev;
    rc.nc3 = nc.nc3;

    if (rc.output_norm <= th.zero_scale * std::sqrt(static_cast<double>(params.K))) {
        rc.kind = RunClass::Kind::ZeroCollapse;
    } else if (rc.rank == params.K - 1 && rc.nc2_angle_dev <= th.metric_tol && rc.nc3 <= th.metric_tol) {
        rc.kind = RunClass::Kind::DncLike;
    } else if (rc.rank < params.K - 1) {
        rc.kind = RunClass::Kind::LowRank;
    } else {
        rc.kind = RunClass::Kind::Other;
    }
    return rc;
}

std::vector<RunRecord> sweep(const SweepGrid& grid, const TrainConfig& base, int jobs) {
    if (grid.d.empty() || grid.lambda.empty() || grid.learning_rate.empty() || grid.seeds.empty())
        throw InvalidParameter("sweep: grid must be nonempty on every axis");

    std::vector<TrainConfig> configs;
    for (int d : grid.d)
        for (double lambda : grid.lambda)
            for (double lr : grid.learning_rate)
                for (unsigned long long seed : grid.seeds) {
                    TrainConfig c = base;
                    c.d = d;
                    c.lambda = lambda;
                    c.learning_rate = lr;
                    c.seed = seed;
                    configs.push_back(c);
                }

    std::vector<RunRecord> records(configs.size());
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) records[i] = train(configs[i]);
        return records;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            for (std::size_t i = static_cast<std::size_t>(w); i < configs.size(); i += static_cast<std::size_t>(workers))
                records[i] = train(configs[i]);
        });
    for (auto& t : pool) t.join();
    return records;
}

std::string sweep_csv(const std::vector<RunRecord>& records, const ClassifyThresholds& thresholds) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(records.size());
    for (const RunRecord& rec : records) {
        const RunClass rc = classify_run(rec, thresholds);
        const MetricSample& last = rec.metric_timeline.back();
        rows.push_back({std::to_string(rec.config.d), fmt_sci(rec.config.lambda), fmt_sci(rec.config.learning_rate),
                        std::to_string(rec.config.seed), rc.name(), fmt_sci(rec.final_loss()),
                        std::to_string(rc.rank), fmt_sci(last.nc1), fmt_sci(last.nc2_angle_dev), fmt_sci(last.nc3),
                        fmt_sci(last.balancedness)});
    }
    return csv_table({"d", "lambda", "lr", "seed", "class", "final_loss", "final_rank", "nc1", "nc2_angle_dev",
                      "nc3", "balancedness"},
                     rows);
}

}  // namespace dufm
