// Command-line front end: ground-truth generation, training, evaluation,
// time extrapolation, and the desk-scale benchmark table.
//
// Exit codes: 0 success, 2 config error, 3 numerical divergence,
// 4 stability warning treated as error (override with --allow-unstable).

#include "neusa/checkpoint.hpp"
#include "neusa/config.hpp"
#include "neusa/solution_io.hpp"

#include <CLI11.hpp>

#include <cinttypes>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace neusa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitUnstable = 4;

struct Context {
    RunConfig config;
    std::uint64_t hash = 0;
    ProblemSpec spec;
    SpectralBasis basis;
    bool allow_unstable = false;
};

Context make_context(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                     const std::string& out_override, bool allow_unstable) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    Context ctx;
    ctx.config = parse_config_text(ss.str());
    if (seed_override) ctx.config.seed = *seed_override;
    if (!out_override.empty()) ctx.config.out = out_override;
    validate_config(ctx.config);
    ctx.hash = config_hash(ctx.config);
    ctx.spec = make_problem(ctx.config);
    ctx.basis = build_problem_basis(ctx.spec, ctx.config.modes);
    ctx.allow_unstable = allow_unstable;
    fs::create_directories(ctx.config.out);
    // record the exact configuration every artifact derives from
    std::ofstream cfg(fs::path(ctx.config.out) / "config_used.txt");
    cfg << serialize_config(ctx.config);
    return ctx;
}

std::vector<double> model_times(const Context& ctx, double factor = 1.0) {
    TimeGrid g(0.0, ctx.config.horizon, ctx.config.time_samples);
    const int extra = static_cast<int>(std::llround((ctx.config.time_samples - 1) * (factor - 1.0)));
    std::vector<double> times;
    for (int i = 0; i < ctx.config.time_samples + extra; ++i) times.push_back(i * g.step());
    return times;
}

// Gate on the RK4 stability of the model's linear part at step h.
bool stability_gate(const Context& ctx, double h, const char* what) {
    ModelConfig mc = make_model_config(ctx.config);
    NeusaModel model = make_model(ctx.spec, mc);
    StabilityReport rep = stability_bound(model.field.linear_system(), h);
    if (!rep.stable) {
        std::cerr << "warning: " << what << " step " << h
                  << " leaves the RK4 stability region (max |lambda h| = " << rep.max_abs_lambda_h
                  << ", |R| = " << rep.worst_poly_abs << ")\n";
        if (!ctx.allow_unstable) {
            std::cerr << "refusing to run; pass --allow-unstable to override\n";
            return false;
        }
    }
    return true;
}

SolutionGridMeta grid_meta(const Context& ctx) {
    SolutionGridMeta meta;
    for (const auto& ax : ctx.basis.axes) meta.axis_nodes.push_back(ax.nodes);
    meta.config_hash = ctx.hash;
    meta.seed = ctx.config.seed;
    return meta;
}

ReferenceSolution solve_reference_for(const Context& ctx, double factor) {
    return solve_reference(ctx.spec, ctx.basis, ctx.config.ref_dt, model_times(ctx, factor));
}

// Loads <out>/reference.csv when it covers the requested times; solves fresh
// otherwise. Keeps the command pipeline composable in either order.
ReferenceSolution load_or_solve_reference(const Context& ctx, double factor) {
    const fs::path path = fs::path(ctx.config.out) / "reference.csv";
    const std::vector<double> want = model_times(ctx, factor);
    if (fs::exists(path)) {
        ReferenceSolution sol = read_solution_csv(path.string());
        if (sol.times.size() >= want.size()) {
            bool match = true;
            for (size_t i = 0; i < want.size(); ++i)
                if (std::abs(sol.times[i] - want[i]) > 1e-9) match = false;
            if (match) {
                sol.times.resize(want.size());
                sol.fields.resize(want.size());
                return sol;
            }
        }
        std::cerr << "note: " << path << " does not match the configured time grid; re-solving\n";
    }
    return solve_reference_for(ctx, factor);
}

int cmd_reference(const Context& ctx) {
    if (!stability_gate(ctx, ctx.config.ref_dt, "reference dt")) return kExitUnstable;
    ReferenceSolution sol = solve_reference_for(ctx, ctx.config.extrapolation_factor);
    const SolutionGridMeta meta = grid_meta(ctx);
    const fs::path out(ctx.config.out);
    write_solution_csv((out / "reference.csv").string(), sol, meta, ctx.config.csv_precision);
    write_solution_bin((out / "reference.bin").string(), sol, meta);

    // convergence-order report on a short probe window so the check stays cheap
    const double t_probe = std::min(ctx.config.horizon, 0.25);
    const double dt_probe = 4.0 * ctx.config.ref_dt;
    double order = std::nan("");
    std::string order_note;
    try {
        order = convergence_order(ctx.spec, ctx.basis, dt_probe, t_probe);
        order_note = "ok";
    } catch (const std::exception& e) {
        order_note = e.what();
    }
    {
        std::ofstream f(out / "reference_meta.txt");
        f.precision(17);
        f << "problem " << sol.problem << "\n"
          << "dims " << ctx.spec.dim << "\n"
          << "dt " << sol.dt << "\n"
          << "dx";
        for (double dx : sol.dx) f << " " << dx;
        f << "\nnotes " << sol.notes << "\n"
          << "config_hash " << std::hex << ctx.hash << std::dec << "\n"
          << "seed " << ctx.config.seed << "\n";
    }
    {
        std::ofstream f(out / "convergence.txt");
        f << "richardson_order_estimate " << order << "\n"
          << "probe_dt " << dt_probe << " probe_T " << t_probe << "\n"
          << "status " << order_note << "\n";
    }
    std::cout << "reference: " << sol.times.size() << " snapshots -> " << (out / "reference.csv")
              << " (order estimate " << order << ")\n";
    return kExitOk;
}

int cmd_train(const Context& ctx) {
    TimeGrid grid(0.0, ctx.config.horizon, ctx.config.time_samples);
    if (!stability_gate(ctx, grid.step(), "integration")) return kExitUnstable;
    ReferenceSolution ref = load_or_solve_reference(ctx, 1.0);

    ModelConfig mc = make_model_config(ctx.config);
    NeusaModel model = make_model(ctx.spec, mc);
    TrainOptions opt;
    opt.steps = ctx.config.steps;
    opt.lr = ctx.config.lr;
    opt.metric_every = ctx.config.metric_every;
    opt.collocation = make_collocation(ctx.config, ctx.basis);

    const fs::path out(ctx.config.out);
    CheckpointMeta meta{ctx.config.problem, ctx.config.seed, ctx.hash};
    try {
        TrainResult result = train(model, opt, &ref);
        save_checkpoint((out / "checkpoint.txt").string(), model, meta);
        write_history_csv((out / "history.csv").string(), result.history, ctx.hash, ctx.config.seed);
        std::ofstream f(out / "summary.txt");
        f.precision(17);
        f << "problem " << ctx.config.problem << "\n"
          << "steps " << ctx.config.steps << "\n"
          << "final_loss " << result.history.back().loss << "\n"
          << "rmae " << result.final_metrics.rmae << "\n"
          << "rmse " << result.final_metrics.rmse << "\n"
          << "wall_seconds " << result.history.back().wall_seconds << "\n"
          << "config_hash " << std::hex << ctx.hash << std::dec << "\n"
          << "seed " << ctx.config.seed << "\n";
        std::cout << "train: final loss " << result.history.back().loss << ", rMSE "
                  << result.final_metrics.rmse << " -> " << (out / "checkpoint.txt") << "\n";
    } catch (const DivergenceError& e) {
        save_checkpoint((out / "checkpoint_last_good.txt").string(), model, meta);
        std::cerr << e.what() << "\nlast finite parameters saved to "
                  << (out / "checkpoint_last_good.txt") << "\n";
        return kExitDivergence;
    }
    return kExitOk;
}

std::vector<int> snapshot_nodes(const Context& ctx, int node_count) {
    std::vector<int> out;
    const int n = node_count;
    const int k = std::min(ctx.config.snapshots, n);
    for (int i = 0; i < k; ++i)
        out.push_back(static_cast<int>(std::llround(static_cast<double>(i) * (n - 1) / std::max(1, k - 1))));
    return out;
}

int run_evaluation(const Context& ctx, const std::string& checkpoint, double factor,
                   const char* mode) {
    const bool extrapolating = factor > 1.0;
    TimeGrid base(0.0, ctx.config.horizon, ctx.config.time_samples);
    const int total =
        ctx.config.time_samples +
        static_cast<int>(std::llround((ctx.config.time_samples - 1) * (factor - 1.0)));

    ModelConfig mc = make_model_config(ctx.config);
    NeusaModel model = make_model(ctx.spec, mc);
    CheckpointMeta meta = load_checkpoint(checkpoint, model);
    model.grid = TimeGrid(0.0, base.step() * (total - 1), total);

    ReferenceSolution ref = load_or_solve_reference(ctx, factor);
    auto fwd = model.forward(nullptr);
    std::vector<Tensor> pred = model.predicted_fields(fwd);
    const auto roi = roi_flat_indices(ctx.spec, ctx.basis);
    std::vector<Tensor> pred_roi = restrict_to_roi(pred, roi, ctx.spec.channels);
    std::vector<Tensor> gt_roi = restrict_to_roi(ref.fields, roi, ctx.spec.channels);
    Metrics overall = compute_metrics(pred_roi, gt_roi);

    const fs::path out(ctx.config.out);
    if (!extrapolating) {
        // field snapshots at evenly spaced times
        ReferenceSolution snap;
        snap.problem = ctx.spec.name;
        snap.dt = base.step();
        for (const auto& ax : ctx.basis.axes) snap.dx.push_back(ax.width() / ax.modes);
        snap.notes = "model prediction";
        for (int i : snapshot_nodes(ctx, total)) {
            snap.times.push_back(model.grid.time(i));
            snap.fields.push_back(pred[i]);
        }
        write_solution_csv((out / "fields.csv").string(), snap, grid_meta(ctx),
                           ctx.config.csv_precision);
        std::ofstream f(out / "metrics.txt");
        f.precision(17);
        f << "problem " << ctx.config.problem << "\n"
          << "rmae " << overall.rmae << "\n"
          << "rmse " << overall.rmse << "\n"
          << "checkpoint_hash " << std::hex << meta.config_hash << std::dec << "\n"
          << "config_hash " << std::hex << ctx.hash << std::dec << "\n"
          << "seed " << ctx.config.seed << "\n";
        std::cout << mode << ": rMAE " << overall.rmae << ", rMSE " << overall.rmse << " -> "
                  << (out / "metrics.txt") << "\n";
    } else {
        // per-time error curve over the extended horizon
        std::FILE* f = std::fopen((out / "extrapolation.csv").string().c_str(), "w");
        if (!f) throw std::runtime_error("cannot open extrapolation.csv");
        std::fprintf(f, "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", ctx.hash,
                     ctx.config.seed);
        std::fprintf(f, "t,rmae,rmse\n");
        for (int i = 0; i < total; ++i) {
            // channels are pooled per time row: the v channel has zero norm at
            // t = 0 (v(0) = 0), which would make the per-channel form degenerate
            const Shape pooled{1, static_cast<int>(pred_roi[i].numel())};
            Metrics m = compute_metrics({reshape(pred_roi[i], pooled)},
                                        {reshape(gt_roi[i], pooled)});
            std::fprintf(f, "%.17g,%.17g,%.17g\n", model.grid.time(i), m.rmae, m.rmse);
        }
        std::fclose(f);
        std::cout << mode << ": rMSE over [0," << model.grid.T << "] written to "
                  << (out / "extrapolation.csv") << " (overall rMSE " << overall.rmse << ")\n";
    }
    return kExitOk;
}

int cmd_bench(const std::string& out_dir, std::optional<std::uint64_t> seed, bool allow_unstable) {
    fs::create_directories(out_dir);
    struct Row {
        std::string problem;
        Metrics m;
        double seconds;
    };
    std::vector<Row> rows;
    for (const std::string preset : {"sinegordon", "burgers2d", "wave3layer"}) {
        RunConfig cfg = preset_config(preset);
        cfg.seed = seed.value_or(0);
        cfg.out = (fs::path(out_dir) / preset).string();
        Context ctx;
        ctx.config = cfg;
        ctx.hash = config_hash(cfg);
        ctx.spec = make_problem(cfg);
        ctx.basis = build_problem_basis(ctx.spec, cfg.modes);
        ctx.allow_unstable = allow_unstable;
        fs::create_directories(cfg.out);
        {
            std::ofstream c(fs::path(cfg.out) / "config_used.txt");
            c << serialize_config(cfg);
        }
        std::cout << "bench: " << preset << " (steps " << cfg.steps << ")\n";
        TimeGrid grid(0.0, cfg.horizon, cfg.time_samples);
        if (!stability_gate(ctx, grid.step(), "integration")) return kExitUnstable;
        ReferenceSolution ref = load_or_solve_reference(ctx, 1.0);
        NeusaModel model = make_model(ctx.spec, make_model_config(cfg));
        TrainOptions opt;
        opt.steps = cfg.steps;
        opt.lr = cfg.lr;
        opt.metric_every = cfg.metric_every;
        TrainResult result = train(model, opt, &ref);
        CheckpointMeta meta{cfg.problem, cfg.seed, ctx.hash};
        save_checkpoint((fs::path(cfg.out) / "checkpoint.txt").string(), model, meta);
        write_history_csv((fs::path(cfg.out) / "history.csv").string(), result.history, ctx.hash,
                          cfg.seed);
        rows.push_back({preset, result.final_metrics, result.history.back().wall_seconds});
        std::cout << "  rMAE " << result.final_metrics.rmae << "  rMSE "
                  << result.final_metrics.rmse << "  TT " << result.history.back().wall_seconds
                  << "s\n";
    }
    std::FILE* f = std::fopen((fs::path(out_dir) / "bench_summary.csv").string().c_str(), "w");
    std::fprintf(f, "problem,rmae,rmse,train_seconds\n");
    for (const auto& r : rows)
        std::fprintf(f, "%s,%.6g,%.6g,%.1f\n", r.problem.c_str(), r.m.rmae, r.m.rmse, r.seconds);
    std::fclose(f);
    std::cout << "bench: summary written to " << (fs::path(out_dir) / "bench_summary.csv") << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NeuSA: neuro-spectral PDE solving (reference oracle, training, evaluation)"};
    app.require_subcommand(1);

    std::string config_path, out_override, checkpoint_path;
    std::optional<std::uint64_t> seed_override;
    bool allow_unstable = false;
    double factor = 0.0;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "run configuration file");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_option("--out", out_override, "override the output directory");
        cmd->add_flag("--allow-unstable", allow_unstable,
                      "proceed despite RK4 stability warnings");
    };

    CLI::App* ref = app.add_subcommand("reference", "compute and store the ground-truth solution");
    add_common(ref);
    CLI::App* tr = app.add_subcommand("train", "train a model on the physics-informed loss");
    add_common(tr);
    CLI::App* ev = app.add_subcommand("evaluate", "evaluate a checkpoint against the reference");
    add_common(ev);
    ev->add_option("--checkpoint", checkpoint_path, "checkpoint file (default <out>/checkpoint.txt)");
    CLI::App* ex = app.add_subcommand("extrapolate", "evaluate beyond the training horizon");
    add_common(ex);
    ex->add_option("--checkpoint", checkpoint_path, "checkpoint file (default <out>/checkpoint.txt)");
    ex->add_option("--factor", factor, "horizon multiplier (default from config)");
    CLI::App* be = app.add_subcommand("bench", "run the desk-scale suite and emit a summary table");
    be->add_option("--out", out_override, "output directory (default runs/bench)");
    be->add_option("--seed", seed_override, "seed for all presets");
    be->add_flag("--allow-unstable", allow_unstable, "proceed despite stability warnings");

    CLI11_PARSE(app, argc, argv);

    try {
        if (be->parsed())
            return cmd_bench(out_override.empty() ? "runs/bench" : out_override, seed_override,
                             allow_unstable);
        Context ctx = make_context(config_path, seed_override, out_override, allow_unstable);
        if (ref->parsed()) return cmd_reference(ctx);
        if (tr->parsed()) return cmd_train(ctx);
        const std::string ckpt = checkpoint_path.empty()
                                     ? (fs::path(ctx.config.out) / "checkpoint.txt").string()
                                     : checkpoint_path;
        if (ev->parsed()) return run_evaluation(ctx, ckpt, 1.0, "evaluate");
        if (ex->parsed()) {
            const double k = factor > 0.0 ? factor : ctx.config.extrapolation_factor;
            if (k < 1.0) throw std::invalid_argument("extrapolation factor must be >= 1");
            return run_evaluation(ctx, ckpt, k, "extrapolate");
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
