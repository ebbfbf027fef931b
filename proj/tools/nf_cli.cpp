#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "nf/config.hpp"
#include "nf/io.hpp"
#include "nf/sdf_sampling.hpp"
#include "nf/tasks.hpp"

namespace fs = std::filesystem;
using namespace nf;

namespace {

// Every config key is also a flag; flags override file values, file values
// override defaults.
struct CliOptions {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_path, "TOML config file");
        auto opt = [this, cmd](const std::string& flag, const std::string& key,
                               const std::string& help) {
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
        };
        opt("--input", "input", "input image (PNG/PPM) or mesh (OBJ)");
        opt("--output", "output", "output directory");
        opt("--encoder", "encoder", "hash | frequency | octree | none");
        opt("--seed", "seed", "RNG seed");
        opt("--steps", "steps", "training steps");
        opt("--batch-size", "batch_size", "samples per step");
        opt("--log-interval", "log_interval", "steps between report rows");
        opt("--threads", "threads", "worker threads (1 = deterministic)");
        opt("--L,--n-levels", "n_levels", "number of grid levels");
        opt("--T,--table-size", "table_size", "max feature rows per level (power of two)");
        opt("--F,--n-features", "n_features", "features per row");
        opt("--n-min", "n_min", "coarsest grid resolution");
        opt("--n-max", "n_max", "finest grid resolution (0 = task default)");
        opt("--interpolation", "interpolation", "linear | smoothstep");
        opt("--hidden-layers", "hidden_layers", "MLP hidden layer count");
        opt("--hidden-width", "hidden_width", "MLP hidden width");
        opt("--n-frequencies", "n_frequencies", "frequency encoding cascades");
        opt("--lr", "lr", "base learning rate (0 = task default)");
        opt("--lr-decay", "lr_decay", "learning-rate decay factor");
        opt("--loss", "loss", "l2 | mape | relative-l2");
        opt("--perturb-std", "perturb_std", "surface perturbation std (<=0: r/1024)");
        opt("--iou-points", "iou_points", "sample count for IoU evaluation");
        opt("--octree-max-level", "octree_max_level", "octree depth");
        opt("--width", "render_width", "render width");
        opt("--height", "render_height", "render height");
    }

    RunConfig resolve(const std::string& task) const
    {
        RunConfig cfg;
        cfg.task = task;
        if (!config_path.empty())
            apply_config_values(parse_toml_file(config_path), cfg);
        apply_config_values(overrides, cfg);
        cfg.task = task; // the subcommand wins
        cfg.resolve_defaults();
        cfg.validate();
        return cfg;
    }
};

HashEncodingConfig encoding_from(const RunConfig& cfg)
{
    HashEncodingConfig enc;
    enc.levels = cfg.n_levels;
    enc.table_size = std::uint32_t(cfg.table_size);
    enc.features = cfg.n_features;
    enc.n_min = cfg.n_min;
    enc.n_max = cfg.n_max > 0 ? cfg.n_max : cfg.n_min;
    enc.interpolation = cfg.interpolation_mode();
    return enc;
}

void write_outputs(const RunConfig& cfg, const FitResult& result)
{
    fs::create_directories(cfg.output);
    write_config(cfg, cfg.output + "/config.toml");
    write_report_csv(result.report, cfg.output + "/report.csv");
    save_checkpoint(result.model, cfg.output + "/checkpoint.bin");
}

int run_fit_image(const RunConfig& cfg)
{
    set_threads(cfg.threads);
    ImageTask task;
    task.image = load_image(cfg.input);
    task.cfg = encoding_from(cfg);
    if (cfg.n_max <= 0)
        task.cfg.n_max = 0; // filled from image width in fit_image
    task.encoder = cfg.encoder_kind();
    task.interpolation = cfg.interpolation_mode();
    task.n_frequencies = cfg.n_frequencies;
    task.hidden_layers = cfg.hidden_layers;
    task.hidden_width = cfg.hidden_width;
    task.batch_size = cfg.batch_size;
    task.total_steps = cfg.steps;
    task.log_interval = cfg.log_interval;
    task.lr = cfg.lr;
    task.lr_decay = cfg.lr_decay;

    const FitResult result = fit_image(task, cfg.seed);
    write_outputs(cfg, result);
    save_image(render_image(result.model, task.image.width, task.image.height),
               cfg.output + "/render.png");
    std::cout << "final PSNR: " << result.report.rows.back().metric << " dB\n";
    return 0;
}

int run_fit_sdf(const RunConfig& cfg)
{
    set_threads(cfg.threads);
    const TriangleMesh mesh = load_mesh(cfg.input);
    const Bvh bvh(mesh);
    SurfaceOctree octree;
    SdfTask task;
    task.mesh = &mesh;
    task.bvh = &bvh;
    if (cfg.encoder_kind() == EncoderKind::Octree) {
        octree = build_surface_octree(mesh, bvh, cfg.octree_max_level);
        task.octree = &octree;
    }
    task.cfg = encoding_from(cfg);
    task.encoder = cfg.encoder_kind();
    task.n_frequencies = cfg.n_frequencies;
    task.hidden_layers = cfg.hidden_layers;
    task.hidden_width = cfg.hidden_width;
    task.batch_size = cfg.batch_size;
    task.total_steps = cfg.steps;
    task.log_interval = cfg.log_interval;
    task.lr = cfg.lr;
    task.lr_decay = cfg.lr_decay;
    task.loss = cfg.loss_kind();
    task.perturb_std = cfg.perturb_std;

    const FitResult result = fit_sdf(task, cfg.seed);
    write_outputs(cfg, result);
    const auto field = [&](const MatX<float>& X) { return result.model.evaluate(X); };
    save_image(render_sdf_shaded(field, Camera{}, cfg.render_width, cfg.render_height),
               cfg.output + "/render.png");
    std::cout << "final IoU: " << result.report.rows.back().metric << "\n";
    return 0;
}

int run_render(const RunConfig& cfg, const std::string& checkpoint, const std::string& out_path)
{
    set_threads(cfg.threads);
    FieldModel model;
    TriangleMesh mesh;
    SurfaceOctree octree;
    // Octree checkpoints rebuild their structure from the mesh first.
    if (!cfg.input.empty() && cfg.input.size() > 4
        && cfg.input.substr(cfg.input.size() - 4) == ".obj") {
        mesh = load_mesh(cfg.input);
        const Bvh bvh(mesh);
        octree = build_surface_octree(mesh, bvh, cfg.octree_max_level);
        model.attach_octree(octree);
    }
    load_checkpoint(model, checkpoint);

    if (model.mlp_cfg.output_width == 3) {
        save_image(render_image(model, cfg.render_width, cfg.render_height), out_path);
    } else {
        const auto field = [&](const MatX<float>& X) { return model.evaluate(X); };
        save_image(render_sdf_shaded(field, Camera{}, cfg.render_width, cfg.render_height),
                   out_path);
    }
    return 0;
}

int run_eval_iou(const RunConfig& cfg, const std::string& checkpoint)
{
    set_threads(cfg.threads);
    const TriangleMesh mesh = load_mesh(cfg.input);
    const Bvh bvh(mesh);
    FieldModel model;
    SurfaceOctree octree;
    // Only octree-encoder checkpoints need an octree attached before loading;
    // retry with one if the plain load rejects the file.
    try {
        load_checkpoint(model, checkpoint);
    } catch (const std::exception&) {
        octree = build_surface_octree(mesh, bvh, cfg.octree_max_level);
        model.attach_octree(octree);
        load_checkpoint(model, checkpoint);
    }
    Pcg32 rng(cfg.seed, 11);
    const auto field = [&](const MatX<float>& X) { return model.evaluate(X); };
    const double value = iou(field, stab_ray_sign_fn(bvh, mesh.bounding_radius, cfg.seed),
                             cfg.iou_points, rng, Eigen::Vector3d::Zero(),
                             Eigen::Vector3d::Ones());
    std::cout << "IoU: " << value << "\n";
    return 0;
}

int run_sweep(const RunConfig& base, const std::string& axis, const std::vector<std::int64_t>& values,
              bool parallel)
{
    if (values.empty())
        throw std::invalid_argument("sweep: no values given");
    if (axis != "T" && axis != "F_L")
        throw std::invalid_argument("sweep: axis must be T or F_L");

    struct Run {
        RunConfig cfg;
        std::int64_t value;
        bool ok = false;
        std::string error;
    };
    std::vector<Run> runs;
    const std::int64_t budget = base.n_features * base.table_size * base.n_levels;
    for (std::int64_t v : values) {
        Run run;
        run.cfg = base;
        run.value = v;
        if (axis == "T") {
            run.cfg.table_size = v;
        } else {
            // Hold F*T*L roughly constant: round T down to a power of two.
            run.cfg.n_features = int(v);
            std::int64_t t = 1;
            while (t * 2 * v * base.n_levels <= budget)
                t *= 2;
            run.cfg.table_size = t;
        }
        run.cfg.output = base.output + "/" + axis + "_" + std::to_string(v);
        runs.push_back(std::move(run));
    }

    auto execute = [](Run& run) {
        try {
            if (run.cfg.task == "image")
                run_fit_image(run.cfg);
            else
                run_fit_sdf(run.cfg);
            run.ok = true;
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    };

    if (parallel) {
        std::vector<std::thread> workers;
        for (Run& run : runs)
            workers.emplace_back([&execute, &run] { execute(run); });
        for (auto& w : workers)
            w.join();
    } else {
        for (Run& run : runs)
            execute(run);
    }

    fs::create_directories(base.output);
    std::ofstream summary(base.output + "/summary.csv");
    summary << "axis,value,table_size,n_features,step,time_s,loss,metric,lr\n";
    summary.precision(10);
    bool any_failed = false;
    for (const Run& run : runs) {
        if (!run.ok) {
            any_failed = true;
            std::cerr << "sweep: run " << run.value << " failed: " << run.error << "\n";
            continue;
        }
        const TrainReport report = read_report_csv(run.cfg.output + "/report.csv");
        for (const auto& row : report.rows)
            summary << axis << ',' << run.value << ',' << run.cfg.table_size << ','
                    << run.cfg.n_features << ',' << row.step << ',' << row.time_s << ','
                    << row.loss << ',' << row.metric << ',' << row.lr << '\n';
    }
    return any_failed ? 2 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{ "Neural field fitting with multiresolution hashed feature grids" };
    app.require_subcommand(1);

    CliOptions fit_image_opts, fit_sdf_opts, render_opts, iou_opts, sweep_opts;
    auto* cmd_image = app.add_subcommand("fit-image", "fit an RGB image");
    fit_image_opts.attach(cmd_image);
    auto* cmd_sdf = app.add_subcommand("fit-sdf", "fit a signed distance function");
    fit_sdf_opts.attach(cmd_sdf);

    std::string checkpoint, out_path = "render.png";
    auto* cmd_render = app.add_subcommand("render", "render a checkpoint");
    render_opts.attach(cmd_render);
    cmd_render->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    cmd_render->add_option("--out", out_path, "output image path");

    auto* cmd_iou = app.add_subcommand("eval-iou", "IoU of a checkpoint against the mesh oracle");
    iou_opts.attach(cmd_iou);
    cmd_iou->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

    std::string axis = "T";
    std::string values_csv;
    bool parallel = false;
    auto* cmd_sweep = app.add_subcommand("sweep", "hyperparameter sweep");
    sweep_opts.attach(cmd_sweep);
    cmd_sweep->add_option("--axis", axis, "T | F_L");
    cmd_sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    cmd_sweep->add_flag("--parallel", parallel, "run configurations concurrently");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_image->parsed())
            return run_fit_image(fit_image_opts.resolve("image"));
        if (cmd_sdf->parsed())
            return run_fit_sdf(fit_sdf_opts.resolve("sdf"));
        if (cmd_render->parsed()) {
            RunConfig cfg;
            if (!render_opts.config_path.empty())
                apply_config_values(parse_toml_file(render_opts.config_path), cfg);
            apply_config_values(render_opts.overrides, cfg);
            return run_render(cfg, checkpoint, out_path);
        }
        if (cmd_iou->parsed())
            return run_eval_iou(iou_opts.resolve("sdf"), checkpoint);
        if (cmd_sweep->parsed()) {
            std::vector<std::int64_t> values;
            std::stringstream ss(values_csv);
            std::string tok;
            while (std::getline(ss, tok, ','))
                values.push_back(std::stoll(tok));
            RunConfig cfg;
            if (!sweep_opts.config_path.empty())
                apply_config_values(parse_toml_file(sweep_opts.config_path), cfg);
            apply_config_values(sweep_opts.overrides, cfg);
            cfg.resolve_defaults();
            cfg.validate();
            return run_sweep(cfg, axis, values, parallel);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
