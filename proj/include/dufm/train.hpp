#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "dufm/metrics.hpp"
#include "dufm/model.hpp"

namespace dufm {

struct TrainConfig {
    ModelKind kind = ModelKind::linear_ce();
    int K = 4, d = 8, L = 3;
    double lambda = 1e-3;
    double learning_rate = 0.5;
    long long max_steps = 20000;
    double grad_tol = 1e-7;
    double init_scale = 1.0;
    unsigned long long seed = 0;
    long long metric_stride = 0;  // 0: max(1, max_steps / 200)
    bool backtracking = true;

    long long effective_stride() const { return metric_stride > 0 ? metric_stride : std::max<long long>(1, max_steps / 200); }
};

struct MetricSample {
    long long step = 0;
    double nc1 = 0.0, nc2_norm_dev = 0.0, nc2_angle_dev = 0.0, nc3 = 0.0;
    double balancedness = 0.0;
    Vector output_spectrum;
};

enum class StopReason { GradTol, MaxSteps, Divergence };
std::string stop_reason_name(StopReason r);

struct RunRecord {
    TrainConfig config;
    std::vector<std::pair<long long, double>> loss_curve;
    std::vector<std::pair<long long, double>> grad_norm_curve;
    std::vector<MetricSample> metric_timeline;
    ParamStack final_params;
    StopReason termination = StopReason::MaxSteps;

    double final_loss() const { return loss_curve.empty() ? 0.0 : loss_curve.back().second; }
};

/// i.i.d. Gaussian entries with standard deviation init_scale / sqrt(d),
/// deterministic in the seed.
ParamStack init_params(const TrainConfig& config);

/// Full-batch gradient descent with optional backtracking halving; stops on
/// max gradient Frobenius norm <= grad_tol, max_steps, or divergence
/// (loss > 1e3 * initial). train() starts from init_params(config);
/// train_from() warm-starts at a given stack (a stationary init terminates
/// at step 0).
RunRecord train(const TrainConfig& config);
RunRecord train_from(ParamStack init, const TrainConfig& config);

struct ClassifyThresholds {
    double zero_scale = 1e-3;    // ZeroCollapse when ||Z||_F <= zero_scale * sqrt(K)
    double metric_tol = 5e-2;    // DncLike needs nc2/nc3 deviations below this
    double rank_rel_tol = kRankRelTol;
};

struct RunClass {
    enum class Kind { DncLike, LowRank, ZeroCollapse, Other };
    Kind kind = Kind::Other;
    int rank = 0;
    double output_norm = 0.0;
    double nc2_angle_dev = 0.0;
    double nc3 = 0.0;
    std::string name() const;
};

RunClass classify_run(const RunRecord& record, const ClassifyThresholds& thresholds = {});

struct SweepGrid {
    std::vector<int> d;
    std::vector<double> lambda;
    std::vector<double> learning_rate;
    std::vector<unsigned long long> seeds;
};

/// Cartesian-product runs over the grid; deterministic, order-independent
/// aggregation (results indexed by grid position). jobs > 1 fans runs out
/// across threads.
std::vector<RunRecord> sweep(const SweepGrid& grid, const TrainConfig& base, int jobs = 1);

/// Summary CSV: d, lambda, lr, seed, class, final_loss, final_rank, nc1,
/// nc2_angle_dev, nc3, balancedness.
std::string sweep_csv(const std::vector<RunRecord>& records, const ClassifyThresholds& thresholds = {});

}  // namespace dufm
