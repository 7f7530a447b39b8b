#include "dufm/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include "dufm/construct.hpp"
#include "dufm/hessian.hpp"
#include "dufm/io.hpp"
#include "dufm/metrics.hpp"
#include "dufm/reduced.hpp"
#include "dufm/train.hpp"

namespace dufm::cli {

namespace {

long long parse_ll(const std::string& s) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw InvalidParameter("bad integer: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw InvalidParameter("bad integer: '" + s + "'");
    }
}

template <typename T, typename Conv>
std::vector<T> parse_list(const std::string& text, Conv conv, bool allow_range) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw InvalidParameter("empty list item in '" + text + "'");
        const std::size_t dots = item.find("..");
        if (allow_range && dots != std::string::npos) {
            const long long a = parse_ll(item.substr(0, dots));
            const long long b = parse_ll(item.substr(dots + 2));
            if (b < a) throw InvalidParameter("descending range '" + item + "'");
            for (long long v = a; v <= b; ++v) out.push_back(static_cast<T>(v));
        } else {
            out.push_back(conv(item));
        }
    }
    if (out.empty()) throw InvalidParameter("empty list: '" + text + "'");
    return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
    return parse_list<int>(text, [](const std::string& s) { return static_cast<int>(parse_ll(s)); }, true);
}

std::vector<unsigned long long> parse_ull_list(const std::string& text) {
    return parse_list<unsigned long long>(
        text, [](const std::string& s) { return static_cast<unsigned long long>(parse_ll(s)); }, true);
}

std::vector<double> parse_double_list(const std::string& text) {
    return parse_list<double>(
        text,
        [](const std::string& s) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size()) throw InvalidParameter("bad number: '" + s + "'");
                return v;
            } catch (const std::logic_error&) {
                throw InvalidParameter("bad number: '" + s + "'");
            }
        },
        false);
}

namespace {

// DUFM_LAB_OUT overrides the directory for relative output paths.
std::filesystem::path resolve_out(const std::string& out) {
    std::filesystem::path p(out);
    if (p.is_relative()) {
        if (const char* base = std::getenv("DUFM_LAB_OUT")) return std::filesystem::path(base) / p;
    }
    return p;
}

// --config file.json merges with flags, flags win: config keys not present
// on the command line are appended as "--key value" pairs.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
    }
    if (config_path.empty()) return args;

    const nlohmann::json cfg = read_json_file(config_path);
    if (!cfg.is_object()) throw InvalidParameter("--config: expected a JSON object of flag values");
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        std::string text;
        if (value.is_string())
            text = value.get<std::string>();
        else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            text = joined;
        } else {
            text = value.dump();
        }
        args.push_back(flag);
        args.push_back(text);
    }
    return args;
}

nlohmann::json spectrum_json(const Vector& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.size(); ++i) arr.push_back(s[i]);
    return arr;
}

Matrix named_frame(const std::string& name, int K) {
    if (name == "dnc") return simplex_etf(K);
    if (name == "lowrank-linear") return lowrank_frame_linear(K);
    if (name == "lowrank-relu") return relu_frame_X(K);
    if (name == "identity") return Matrix::Identity(K, K);
    if (name.rfind("file:", 0) == 0) return matrix_from_json(read_json_file(name.substr(5)));
    throw InvalidParameter("unknown frame '" + name + "' (dnc | lowrank-linear | lowrank-relu | identity | file:PATH)");
}

// ---- construct ----------------------------------------------------------

struct ConstructCmd {
    std::string builder = "dnc";
    int K = 4, d = 4, L = 3;
    double scale = 1.0;
    int factors = 0;
    std::string target;
    bool random_factors = false;
    unsigned long long seed = 0;
    std::string out;

    void run() const {
        FactorOptions fopts{random_factors, seed};
        ParamStack stack;
        if (builder == "dnc")
            stack = build_dnc(K, d, L, scale, fopts);
        else if (builder == "lowrank-linear")
            stack = build_lowrank_linear(K, d, L, scale, fopts);
        else if (builder == "lowrank-relu")
            stack = build_lowrank_relu(K, d, L, scale);
        else if (builder == "balanced") {
            if (target.empty()) throw InvalidParameter("construct: --target required for the balanced builder");
            const Matrix Z = matrix_from_json(read_json_file(target));
            stack = balanced_factorization(Z, factors > 0 ? factors : L + 1, d, fopts);
        } else {
            throw InvalidParameter("construct: unknown builder '" + builder +
                                   "' (dnc | lowrank-linear | lowrank-relu | balanced)");
        }
        const ModelKind kind = builder == "lowrank-relu" ? ModelKind::relu_ce() : ModelKind::linear_ce();
        const auto dir = resolve_out(out);
        save_param_stack(dir, stack, kind, 0.0);

        nlohmann::json manifest = read_json_file(dir / "manifest.json");
        manifest["effective_config"] = {{"builder", builder}, {"K", K},       {"d", d},
                                        {"L", stack.L},       {"scale", scale}, {"random_factors", random_factors},
                                        {"seed", seed}};
        manifest["output_spectrum"] = spectrum_json(singular_values(forward(stack, kind).output()));
        write_json_file(dir / "manifest.json", manifest);
        std::cout << "wrote " << (dir / "params.bin").string() << "\n";
    }
};

// ---- train --------------------------------------------------------------

struct TrainCmd {
    TrainConfig config;
    std::string kind_name = "linear_ce";
    std::string out;

    void run() const {
        TrainConfig c = config;
        c.kind = model_kind_from_name(kind_name);
        const RunRecord rec = train(c);
        const RunClass rc = classify_run(rec);

        const auto dir = resolve_out(out);
        save_param_stack(dir, rec.final_params, c.kind, c.lambda);

        nlohmann::json manifest = read_json_file(dir / "manifest.json");
        manifest["effective_config"] = {{"kind", kind_name},
                                        {"K", c.K},
                                        {"d", c.d},
                                        {"L", c.L},
                                        {"lambda", c.lambda},
                                        {"learning_rate", c.learning_rate},
                                        {"max_steps", c.max_steps},
                                        {"grad_tol", c.grad_tol},
                                        {"init_scale", c.init_scale},
                                        {"seed", c.seed}};
        manifest["termination"] = stop_reason_name(rec.termination);
        manifest["classification"] = rc.name();
        manifest["final_loss"] = rec.final_loss();
        nlohmann::json curve = nlohmann::json::array();
        for (const auto& [step, value] : rec.loss_curve) curve.push_back({step, value});
        manifest["loss_curve"] = std::move(curve);
        nlohmann::json gcurve = nlohmann::json::array();
        for (const auto& [step, value] : rec.grad_norm_curve) gcurve.push_back({step, value});
        manifest["grad_norm_curve"] = std::move(gcurve);
        nlohmann::json timeline = nlohmann::json::array();
        for (const MetricSample& m : rec.metric_timeline)
            timeline.push_back({{"step", m.step},
                                {"nc1", m.nc1},
                                {"nc2_norm_dev", m.nc2_norm_dev},
                                {"nc2_angle_dev", m.nc2_angle_dev},
                                {"nc3", m.nc3},
                                {"balancedness", m.balancedness},
                                {"spectrum", spectrum_json(m.output_spectrum)}});
        manifest["metric_timeline"] = std::move(timeline);
        write_json_file(dir / "manifest.json", manifest);
        std::cout << "termination=" << stop_reason_name(rec.termination) << " class=" << rc.name()
                  << " final_loss=" << fmt_sci(rec.final_loss()) << "\n";
    }
};

// ---- sweep --------------------------------------------------------------

struct SweepCmd {
    TrainConfig base;
    std::string kind_name = "linear_ce";
    std::string d_list = "8", lambda_list = "1e-3", lr_list = "0.5", seed_list = "0";
    int jobs = 1;
    std::string out;

    void run() const {
        TrainConfig c = base;
        c.kind = model_kind_from_name(kind_name);
        SweepGrid grid;
        grid.d = parse_int_list(d_list);
        grid.lambda = parse_double_list(lambda_list);
        grid.learning_rate = parse_double_list(lr_list);
        grid.seeds = parse_ull_list(seed_list);
        const std::vector<RunRecord> records = sweep(grid, c, jobs);

        const auto path = resolve_out(out);
        write_text_file(path, sweep_csv(records));
        nlohmann::json manifest;
        manifest["effective_config"] = {{"kind", kind_name}, {"K", c.K},
                                        {"L", c.L},          {"d", d_list},
                                        {"lambda", lambda_list}, {"lr", lr_list},
                                        {"seeds", seed_list},    {"max_steps", c.max_steps},
                                        {"grad_tol", c.grad_tol}, {"init_scale", c.init_scale},
                                        {"jobs", jobs}};
        manifest["runs"] = records.size();
        write_json_file(path.string() + ".manifest.json", manifest);
        std::cout << "wrote " << path.string() << " (" << records.size() << " runs)\n";
    }
};

// ---- compare ------------------------------------------------------------

struct CompareCmd {
    int K = 4, L = 3;
    double lambda = 1e-3;
    std::string frames = "dnc,lowrank-linear";
    std::string out;

    void run() const {
        std::vector<std::pair<std::string, Matrix>> frame_list;
        std::stringstream ss(frames);
        std::string name;
        while (std::getline(ss, name, ',')) frame_list.emplace_back(name, named_frame(name, K));

        const ReducedCeParams p{K, L, lambda};
        const auto results = compare_structures(frame_list, p);
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : results)
            rows.push_back({r.id, std::to_string(r.rank), fmt_sci(r.alpha_star), fmt_sci(r.fit_term),
                            fmt_sci(r.reg_term), fmt_sci(r.total)});
        const auto path = resolve_out(out);
        write_text_file(path, csv_table({"frame_id", "rank", "alpha_star", "fit_term", "reg_term", "total"}, rows));
        nlohmann::json manifest;
        manifest["effective_config"] = {{"K", K}, {"L", L}, {"lambda", lambda}, {"frames", frames}};
        write_json_file(path.string() + ".manifest.json", manifest);
        std::cout << "wrote " << path.string() << ", best frame: " << results.front().id << "\n";
    }
};

// ---- hessian ------------------------------------------------------------

struct HessianCmd {
    int K = 4, d = 4, L = 3;
    double lambda = 1e-2;
    std::string alpha = "auto";  // auto: large stationary-scale root
    std::string mode = "leading";
    std::string out;
    std::string spectrum_csv;

    void run() const {
        double alpha_value = 0.0;
        if (alpha == "auto") {
            const ScaleRoots roots = solve_dnc_scale(K, L, lambda);
            if (!roots.has_large_root())
                throw NumericFailure("hessian: no stationary scale exists at lambda=" + fmt_sci(lambda) +
                                     " (critical lambda " + fmt_sci(roots.critical_lambda) + ")");
            alpha_value = roots.large_root();
        } else {
            alpha_value = std::stod(alpha);
        }

        const ParamStack stack = build_dnc(K, d, L, alpha_value);
        const HyperParams hp{lambda};
        HessianBlocks H;
        if (mode == "leading")
            H = hessian_leading_order_dnc(K, d, L, alpha_value);
        else if (mode == "full")
            H = hessian_full_linear_ce(stack, hp);
        else
            throw InvalidParameter("hessian: unknown mode '" + mode + "' (leading | full)");

        const Vector eigs = hessian_eigenvalues(H);
        const double spectral_norm = std::max(std::abs(eigs.minCoeff()), std::abs(eigs.maxCoeff()));
        const EigenSummary summary = psd_check(H, 1e-8 * spectral_norm);
        const ScaleSplit split = scale_split(stack, hp);

        nlohmann::json j;
        j["effective_config"] = {{"K", K}, {"d", d}, {"L", L}, {"lambda", lambda},
                                 {"alpha", alpha_value}, {"mode", mode}};
        j["min_eigenvalue"] = summary.min_eigenvalue;
        j["max_eigenvalue"] = summary.max_eigenvalue;
        j["near_zero_count"] = summary.near_zero_count;
        j["tolerance"] = summary.tolerance;
        j["scale_split"] = {{"norm_lambda_part", split.norm_lambda_part},
                            {"norm_alpha_lambda_part", split.norm_alpha_lambda_part},
                            {"ratio", split.ratio},
                            {"structure_verified", split.structure_verified}};
        const auto path = resolve_out(out);
        write_json_file(path, j);
        if (!spectrum_csv.empty()) {
            std::vector<std::vector<std::string>> rows;
            for (Eigen::Index i = 0; i < eigs.size(); ++i)
                rows.push_back({std::to_string(i), fmt_sci(eigs[i])});
            write_text_file(resolve_out(spectrum_csv), csv_table({"index", "eigenvalue"}, rows));
        }
        std::cout << "wrote " << path.string() << ", min_eig=" << fmt_sci(summary.min_eigenvalue) << "\n";
    }
};

// ---- spectrum-sweep ------------------------------------------------------

struct SpectrumSweepCmd {
    int K = 6;
    std::string L_list = "2,4,6,8,10";
    std::string schedule = "inv_square";
    double coef = 0.1;
    int restarts = 10;
    unsigned long long seed = 0;
    int max_iters = 5000;
    std::string out;
    std::string classes_out;

    void run() const {
        const LambdaSchedule sched = schedule_from_name(schedule);
        const std::vector<int> Ls = parse_int_list(L_list);
        std::map<int, Spectrum> spectra;
        std::vector<std::vector<std::string>> rows;
        for (int L : Ls) {
            ReducedCeParams p{K, L, schedule_lambda(sched, coef, L)};
            MinimizeOptions opts;
            opts.restarts = restarts;
            opts.seed = seed + 1000ULL * static_cast<unsigned long long>(L);
            opts.max_iters = max_iters;
            const MinimizeResult res = minimize_reduced_ce(p, opts);
            const Spectrum sp = make_spectrum(singular_values(res.Z));
            spectra[L] = sp;
            for (Eigen::Index i = 0; i < sp.values.size(); ++i)
                rows.push_back({std::to_string(L), fmt_sci(p.lambda), std::to_string(i), fmt_sci(sp.values[i]),
                                fmt_sci(res.loss)});
        }
        const auto path = resolve_out(out);
        write_text_file(path, csv_table({"L", "lambda", "index", "singular_value", "loss"}, rows));

        nlohmann::json manifest;
        manifest["effective_config"] = {{"K", K},       {"L", L_list},     {"schedule", schedule},
                                        {"coef", coef}, {"restarts", restarts}, {"seed", seed}};
        write_json_file(path.string() + ".manifest.json", manifest);

        if (!classes_out.empty() && spectra.size() >= 4) {
            const auto classes = decay_classify(spectra);
            std::vector<std::vector<std::string>> crow;
            for (std::size_t i = 0; i < classes.size(); ++i)
                crow.push_back({std::to_string(i), decay_kind_name(classes[i].kind), fmt_sci(classes[i].rate),
                                fmt_sci(classes[i].log_slope), fmt_sci(classes[i].quad_coeff)});
            write_text_file(resolve_out(classes_out),
                            csv_table({"index", "class", "rate", "log_slope", "quad_coeff"}, crow));
        }
        std::cout << "wrote " << path.string() << "\n";
    }
};

// ---- dims ---------------------------------------------------------------

struct DimsCmd {
    int K = 8, r = 3, L = 4;
    std::string d_list = "8..64";
    std::string out;

    void run() const {
        std::vector<long long> ds;
        for (int v : parse_int_list(d_list)) ds.push_back(v);
        const DimReport rep = solution_space_dims(K, r, ds, L);
        std::vector<std::vector<std::string>> rows;
        for (const DimRow& row : rep.rows)
            rows.push_back({std::to_string(row.d), std::to_string(row.dnc_dim), std::to_string(row.dim_lower),
                            std::to_string(row.dim_upper), fmt_sci(row.ratio_lower), fmt_sci(row.ratio_upper)});
        const auto path = resolve_out(out);
        write_text_file(path, csv_table({"d", "D_dnc", "dim_lower", "dim_upper", "ratio_lower", "ratio_upper"}, rows));
        nlohmann::json manifest;
        manifest["effective_config"] = {{"K", K}, {"r", r}, {"L", L}, {"d", d_list}};
        manifest["limit"] = rep.limit;
        write_json_file(path.string() + ".manifest.json", manifest);
        std::cout << "wrote " << path.string() << "\n";
    }
};

// ---- thresholds ----------------------------------------------------------

struct ThresholdsCmd {
    std::string theorem = "t1";
    std::string K_list = "2..12";
    std::string L_list = "1..6";
    std::string out;

    void run() const {
        TheoremId id;
        if (theorem == "t1")
            id = TheoremId::T1;
        else if (theorem == "t6")
            id = TheoremId::T6;
        else
            throw InvalidParameter("thresholds: unknown theorem '" + theorem + "' (t1 | t6)");
        std::vector<std::vector<std::string>> rows;
        for (int K : parse_int_list(K_list))
            for (int L : parse_int_list(L_list))
                rows.push_back({std::to_string(K), std::to_string(L),
                                threshold_check(id, K, L) ? "1" : "0"});
        const auto path = resolve_out(out);
        write_text_file(path, csv_table({"K", "L", "satisfied"}, rows));
        nlohmann::json manifest;
        manifest["effective_config"] = {{"theorem", theorem}, {"K", K_list}, {"L", L_list}};
        write_json_file(path.string() + ".manifest.json", manifest);
        std::cout << "wrote " << path.string() << "\n";
    }
};

// ---- metrics -------------------------------------------------------------

struct MetricsCmd {
    std::string params_dir;
    std::string out;

    void run() const {
        ModelKind kind;
        double lambda = 0.0;
        const ParamStack stack = load_param_stack(params_dir, &kind, &lambda);
        const ForwardTrace trace = forward(stack, kind);

        std::vector<int> labels(static_cast<std::size_t>(stack.K));
        for (int c = 0; c < stack.K; ++c) labels[static_cast<std::size_t>(c)] = c;

        nlohmann::json j;
        j["effective_config"] = {{"params", params_dir}, {"kind", kind.name()}, {"lambda", lambda}};
        j["balancedness_residual"] = balancedness_residual(stack);
        j["output_spectrum"] = spectrum_json(singular_values(trace.output()));

        nlohmann::json layers = nlohmann::json::array();
        for (int l = 1; l <= stack.L; ++l) {
            // Features out of layer l against the remaining classifier.
            Matrix classifier = Matrix::Identity(stack.K, stack.K);
            for (int k = stack.L; k >= l; --k) classifier = classifier * stack.W(k);
            const NcMetrics nc = nc_metrics(trace.H(l), labels, classifier);
            layers.push_back({{"layer", l},
                              {"nc1", nc.nc1},
                              {"nc2_norm_dev", nc.nc2_norm_dev},
                              {"nc2_angle_dev", nc.nc2_angle_dev},
                              {"nc3", nc.nc3}});
        }
        j["layers"] = std::move(layers);

        if (kind.family == ModelFamily::ReluCE && stack.L >= 2) {
            nlohmann::json rows = nlohmann::json::array();
            for (const LayerRatio& r : assumption1_check(trace))
                rows.push_back({{"layer", r.layer}, {"r", r.r}, {"r_tilde", r.r_tilde}, {"satisfied", r.satisfied}});
            j["assumption1"] = std::move(rows);
        }
        const auto path = resolve_out(out);
        write_json_file(path, j);
        std::cout << "wrote " << path.string() << "\n";
    }
};

int dispatch(const std::vector<std::string>& raw_args) {
    CLI::App app{"dufm-lab: a numerical laboratory for deep unconstrained feature models"};
    app.require_subcommand(1);

    ConstructCmd construct_cmd;
    auto* construct = app.add_subcommand("construct", "Build an analytic parameter stack");
    construct->add_option("--builder", construct_cmd.builder, "dnc | lowrank-linear | lowrank-relu | balanced");
    construct->add_option("--K", construct_cmd.K, "class count");
    construct->add_option("--d", construct_cmd.d, "hidden width");
    construct->add_option("--L", construct_cmd.L, "separated layers");
    construct->add_option("--scale", construct_cmd.scale, "alpha / beta / psi scale");
    construct->add_option("--factors", construct_cmd.factors, "factor count for the balanced builder");
    construct->add_option("--target", construct_cmd.target, "JSON matrix file for the balanced builder");
    construct->add_flag("--random-factors", construct_cmd.random_factors, "seeded random free orthogonal factors");
    construct->add_option("--seed", construct_cmd.seed, "seed for --random-factors");
    construct->add_option("--out", construct_cmd.out, "output directory")->required();

    TrainCmd train_cmd;
    auto* train_sc = app.add_subcommand("train", "Full-batch gradient descent run");
    train_sc->add_option("--kind", train_cmd.kind_name, "linear_ce | relu_ce");
    train_sc->add_option("--K", train_cmd.config.K, "class count");
    train_sc->add_option("--d", train_cmd.config.d, "hidden width");
    train_sc->add_option("--L", train_cmd.config.L, "separated layers");
    train_sc->add_option("--lambda", train_cmd.config.lambda, "regularization weight");
    train_sc->add_option("--lr", train_cmd.config.learning_rate, "learning rate");
    train_sc->add_option("--steps", train_cmd.config.max_steps, "step budget");
    train_sc->add_option("--grad-tol", train_cmd.config.grad_tol, "gradient norm stop");
    train_sc->add_option("--init-scale", train_cmd.config.init_scale, "init standard deviation scale");
    train_sc->add_option("--seed", train_cmd.config.seed, "init seed");
    train_sc->add_option("--out", train_cmd.out, "output directory")->required();

    SweepCmd sweep_cmd;
    auto* sweep_sc = app.add_subcommand("sweep", "Cartesian-product training sweep");
    sweep_sc->add_option("--kind", sweep_cmd.kind_name, "linear_ce | relu_ce");
    sweep_sc->add_option("--K", sweep_cmd.base.K, "class count");
    sweep_sc->add_option("--L", sweep_cmd.base.L, "separated layers");
    sweep_sc->add_option("--d", sweep_cmd.d_list, "width list, e.g. 6,12,24");
    sweep_sc->add_option("--lambda", sweep_cmd.lambda_list, "lambda list");
    sweep_sc->add_option("--lr", sweep_cmd.lr_list, "learning-rate list");
    sweep_sc->add_option("--seeds", sweep_cmd.seed_list, "seed list/range, e.g. 1..10");
    sweep_sc->add_option("--steps", sweep_cmd.base.max_steps, "step budget per run");
    sweep_sc->add_option("--grad-tol", sweep_cmd.base.grad_tol, "gradient norm stop");
    sweep_sc->add_option("--init-scale", sweep_cmd.base.init_scale, "init scale");
    sweep_sc->add_option("--jobs", sweep_cmd.jobs, "worker threads");
    sweep_sc->add_option("--out", sweep_cmd.out, "summary CSV path")->required();

    CompareCmd compare_cmd;
    auto* compare = app.add_subcommand("compare", "Scale-optimized structure comparison");
    compare->add_option("--K", compare_cmd.K, "class count");
    compare->add_option("--L", compare_cmd.L, "separated layers");
    compare->add_option("--lambda", compare_cmd.lambda, "regularization weight");
    compare->add_option("--frames", compare_cmd.frames, "comma list: dnc,lowrank-linear,identity,file:PATH");
    compare->add_option("--out", compare_cmd.out, "ranking CSV path")->required();

    HessianCmd hessian_cmd;
    auto* hessian = app.add_subcommand("hessian", "DNC Hessian eigen-summary and scale split");
    hessian->add_option("--K", hessian_cmd.K, "class count");
    hessian->add_option("--d", hessian_cmd.d, "hidden width");
    hessian->add_option("--L", hessian_cmd.L, "separated layers");
    hessian->add_option("--lambda", hessian_cmd.lambda, "regularization weight");
    hessian->add_option("--alpha", hessian_cmd.alpha, "scale, or 'auto' for the large stationary root");
    hessian->add_option("--mode", hessian_cmd.mode, "leading | full");
    hessian->add_option("--out", hessian_cmd.out, "summary JSON path")->required();
    hessian->add_option("--spectrum-csv", hessian_cmd.spectrum_csv, "optional full spectrum CSV");

    SpectrumSweepCmd spectrum_cmd;
    auto* spectrum = app.add_subcommand("spectrum-sweep", "Reduced-loss minimization across depths");
    spectrum->add_option("--K", spectrum_cmd.K, "class count");
    spectrum->add_option("--L", spectrum_cmd.L_list, "depth list, e.g. 2,4,6,8,10");
    spectrum->add_option("--schedule", spectrum_cmd.schedule, "fixed | inv_square | sqrt_growth");
    spectrum->add_option("--coef", spectrum_cmd.coef, "schedule coefficient");
    spectrum->add_option("--restarts", spectrum_cmd.restarts, "restarts per depth");
    spectrum->add_option("--seed", spectrum_cmd.seed, "base seed");
    spectrum->add_option("--max-iters", spectrum_cmd.max_iters, "iterations per restart");
    spectrum->add_option("--out", spectrum_cmd.out, "spectra CSV path")->required();
    spectrum->add_option("--classes", spectrum_cmd.classes_out, "optional decay-class CSV");

    DimsCmd dims_cmd;
    auto* dims = app.add_subcommand("dims", "Solution-space dimension report");
    dims->add_option("--K", dims_cmd.K, "class count");
    dims->add_option("--r", dims_cmd.r, "structure rank (2 <= r < K-1)");
    dims->add_option("--L", dims_cmd.L, "separated layers");
    dims->add_option("--d", dims_cmd.d_list, "width list/range, e.g. 8..64");
    dims->add_option("--out", dims_cmd.out, "report CSV path")->required();

    ThresholdsCmd thresholds_cmd;
    auto* thresholds = app.add_subcommand("thresholds", "Closed-form theorem threshold grids");
    thresholds->add_option("--theorem", thresholds_cmd.theorem, "t1 | t6");
    thresholds->add_option("--K", thresholds_cmd.K_list, "K list/range");
    thresholds->add_option("--L", thresholds_cmd.L_list, "L list/range");
    thresholds->add_option("--out", thresholds_cmd.out, "grid CSV path")->required();

    MetricsCmd metrics_cmd;
    auto* metrics = app.add_subcommand("metrics", "Collapse metrics of a stored stack");
    metrics->add_option("--params", metrics_cmd.params_dir, "stack directory (params.bin + manifest.json)")
        ->required();
    metrics->add_option("--out", metrics_cmd.out, "metrics JSON path")->required();

    std::vector<const char*> argv;
    argv.push_back("dufm-lab");
    for (const std::string& a : raw_args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help text or usage + error
        return code == 0 ? 0 : 2;
    }

    if (construct->parsed()) construct_cmd.run();
    if (train_sc->parsed()) train_cmd.run();
    if (sweep_sc->parsed()) sweep_cmd.run();
    if (compare->parsed()) compare_cmd.run();
    if (hessian->parsed()) hessian_cmd.run();
    if (spectrum->parsed()) spectrum_cmd.run();
    if (dims->parsed()) dims_cmd.run();
    if (thresholds->parsed()) thresholds_cmd.run();
    if (metrics->parsed()) metrics_cmd.run();
    return 0;
}

}  // namespace

int execute(const std::vector<std::string>& args) {
    try {
        return dispatch(merge_config(args));
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return 2;
    } catch (const InvalidDimension& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dufm::cli
