#include <Eigen/Geometry>

#include "nf/tasks.hpp"

#include "nf/sdf_sampling.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nf {

void set_threads(int n)
{
    if (n < 1)
        n = 1;
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    Eigen::setNbThreads(n);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MatX<float> evaluate_chunked(const FieldModel& model, const MatX<float>& X)
{
    const Eigen::Index chunk = 1 << 16;
    if (X.cols() <= chunk)
        return model.evaluate(X);
    MatX<float> out(model.mlp_cfg.output_width, X.cols());
    for (Eigen::Index c = 0; c < X.cols(); c += chunk) {
        const Eigen::Index n = std::min(chunk, X.cols() - c);
        out.middleCols(c, n) = model.evaluate(X.middleCols(c, n));
    }
    return out;
}

} // namespace

FitResult fit_image(const ImageTask& task, std::uint64_t seed)
{
    const Image& img = task.image;
    if (img.width < 2 || img.height < 2)
        throw std::invalid_argument("fit_image: image must be at least 2x2");

    FitResult result;
    FieldModel& model = result.model;
    model.encoder = task.encoder;
    model.hash_cfg = task.cfg;
    model.hash_cfg.dims = 2;
    model.hash_cfg.interpolation = task.interpolation;
    if (model.hash_cfg.n_max <= 0)
        model.hash_cfg.n_max = std::max(model.hash_cfg.n_min, img.width / 2);
    model.n_frequencies = task.n_frequencies;
    model.mlp_cfg.hidden_layers = task.hidden_layers;
    model.mlp_cfg.hidden_width = task.hidden_width;
    model.mlp_cfg.output_width = 3;
    model.mlp_cfg.output_activation = OutputActivation::Sigmoid;
    model.hyper.lr = task.lr;
    model.schedule = default_schedule(task.total_steps, task.lr_decay);
    model.init(seed);

    const std::size_t n_pixels = std::size_t(img.width) * img.height;

    // PSNR grid: the full image when it is small enough, otherwise a fixed
    // 2^16-pixel subset chosen once per run.
    std::vector<std::size_t> eval_pixels;
    if (n_pixels <= (std::size_t(1) << 20)) {
        eval_pixels.resize(n_pixels);
        for (std::size_t i = 0; i < n_pixels; ++i)
            eval_pixels[i] = i;
    } else {
        Pcg32 grid_rng(seed, 7);
        eval_pixels.resize(std::size_t(1) << 16);
        for (auto& p : eval_pixels)
            p = std::size_t(grid_rng.next_below(std::uint32_t(n_pixels)));
    }
    MatX<float> eval_x(2, eval_pixels.size()), eval_target(3, eval_pixels.size());
    for (std::size_t i = 0; i < eval_pixels.size(); ++i) {
        const std::size_t p = eval_pixels[i];
        eval_x(0, i) = (float(p % img.width) + 0.5f) / float(img.width);
        eval_x(1, i) = (float(p / img.width) + 0.5f) / float(img.height);
        eval_target.col(i) = img.rgb.col(p);
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto log_row = [&](std::int64_t step, double train_loss) {
        const MatX<float> pred = evaluate_chunked(model, eval_x);
        TrainReportRow row;
        row.step = step;
        row.time_s = seconds_since(t0);
        row.loss = train_loss;
        row.metric = psnr(pred, eval_target);
        row.lr = lr_at(model.schedule, model.hyper.lr, step);
        result.report.rows.push_back(row);
    };

    {
        const MatX<float> pred = evaluate_chunked(model, eval_x);
        log_row(0, (pred - eval_target).squaredNorm() / double(pred.size()));
    }

    Pcg32 batch_rng(seed, 1);
    MatX<float> X(2, task.batch_size), target(3, task.batch_size);
    for (std::int64_t step = 1; step <= task.total_steps; ++step) {
        for (int i = 0; i < task.batch_size; ++i) {
            const std::size_t p = batch_rng.next_below(std::uint32_t(n_pixels));
            X(0, i) = (float(p % img.width) + 0.5f) / float(img.width);
            X(1, i) = (float(p / img.width) + 0.5f) / float(img.height);
            target.col(i) = img.rgb.col(p);
        }
        const float loss = model.train_step(X, target, LossKind::L2, step);
        if (!std::isfinite(loss))
            throw std::runtime_error("fit_image: non-finite loss at step " + std::to_string(step));
        if (step % task.log_interval == 0 || step == task.total_steps)
            log_row(step, loss);
    }
    return result;
}

FitResult fit_sdf(const SdfTask& task, std::uint64_t seed)
{
    if (!task.mesh || !task.bvh)
        throw std::invalid_argument("fit_sdf: mesh and bvh are required");
    if (task.encoder == EncoderKind::Octree && !task.octree)
        throw std::invalid_argument("fit_sdf: octree encoder needs a surface octree");

    FitResult result;
    FieldModel& model = result.model;
    model.encoder = task.encoder;
    model.hash_cfg = task.cfg;
    model.hash_cfg.dims = 3;
    model.n_frequencies = task.n_frequencies;
    model.mlp_cfg.hidden_layers = task.hidden_layers;
    model.mlp_cfg.hidden_width = task.hidden_width;
    model.mlp_cfg.output_width = 1;
    model.mlp_cfg.output_activation = OutputActivation::Linear;
    model.hyper.lr = task.lr;
    model.schedule = default_schedule(task.total_steps, task.lr_decay);
    if (task.encoder == EncoderKind::Octree)
        model.attach_octree(*task.octree);
    model.init(seed);

    const AreaCdf cdf = build_area_cdf(*task.mesh);
    SampleOptions options;
    options.perturb_std = task.perturb_std;
    if (task.encoder == EncoderKind::Octree)
        options.octree = task.octree;

    const auto oracle = stab_ray_sign_fn(*task.bvh, task.mesh->bounding_radius, seed ^ 0x10c5eed);
    const auto field = [&](const MatX<float>& X) { return evaluate_chunked(model, X); };

    const auto t0 = std::chrono::steady_clock::now();
    auto log_row = [&](std::int64_t step, double train_loss) {
        Pcg32 iou_rng(seed, 11); // same points every evaluation
        TrainReportRow row;
        row.step = step;
        row.time_s = seconds_since(t0);
        row.loss = train_loss;
        row.metric = iou(field, oracle, task.iou_eval_points, iou_rng,
                         Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones());
        row.lr = lr_at(model.schedule, model.hyper.lr, step);
        result.report.rows.push_back(row);
    };

    log_row(0, 0.0);

    Pcg32 sample_rng(seed, 2);
    for (std::int64_t step = 1; step <= task.total_steps; ++step) {
        const auto samples =
            sample_training_points(*task.mesh, *task.bvh, cdf, task.batch_size, sample_rng, options);
        MatX<float> X(3, samples.size()), target(1, samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            X.col(i) = samples[i].position.cast<float>();
            target(0, i) = float(samples[i].distance);
        }
        const float loss = model.train_step(X, target, task.loss, step);
        if (!std::isfinite(loss))
            throw std::runtime_error("fit_sdf: non-finite loss at step " + std::to_string(step));
        if (step % task.log_interval == 0 || step == task.total_steps)
            log_row(step, loss);
    }
    return result;
}

Image render_image(const FieldModel& model, int width, int height)
{
    MatX<float> X(2, std::size_t(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = std::size_t(y) * width + x;
            X(0, i) = (float(x) + 0.5f) / float(width);
            X(1, i) = (float(y) + 0.5f) / float(height);
        }
    Image img;
    img.width = width;
    img.height = height;
    img.rgb = evaluate_chunked(model, X);
    return img;
}

namespace {

bool ray_unit_cube(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double& t0, double& t1)
{
    t0 = 0;
    t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const double inv = 1.0 / d[i];
        double near = (0.0 - o[i]) * inv;
        double far = (1.0 - o[i]) * inv;
        if (near > far)
            std::swap(near, far);
        t0 = std::max(t0, near);
        t1 = std::min(t1, far);
        if (t0 > t1)
            return false;
    }
    return true;
}

} // namespace

Image render_sdf_shaded(const FieldFn& field, const Camera& camera, int width, int height)
{
    constexpr int kMaxSteps = 256;
    constexpr double kHitEps = 1e-4;
    constexpr double kNormalH = 1e-3;

    const Eigen::Vector3d forward = (camera.target - camera.position).normalized();
    const Eigen::Vector3d right = forward.cross(camera.up).normalized();
    const Eigen::Vector3d up = right.cross(forward);
    const double half_tan = std::tan(0.5 * camera.fov_deg * M_PI / 180.0);
    const double aspect = double(width) / double(height);

    struct Ray {
        Eigen::Vector3d dir;
        double t, t_exit;
        int pixel;
    };
    std::vector<Ray> active;
    active.reserve(std::size_t(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double u = (2.0 * (x + 0.5) / width - 1.0) * half_tan * aspect;
            const double v = (1.0 - 2.0 * (y + 0.5) / height) * half_tan;
            Ray ray;
            ray.dir = (forward + u * right + v * up).normalized();
            ray.pixel = y * width + x;
            double t0, t1;
            if (!ray_unit_cube(camera.position, ray.dir, t0, t1))
                continue;
            ray.t = t0 + 1e-6;
            ray.t_exit = t1;
            active.push_back(ray);
        }

    Image img;
    img.width = width;
    img.height = height;
    img.rgb = MatX<float>::Ones(3, std::size_t(width) * height); // background

    auto eval_points = [&](const std::vector<Eigen::Vector3d>& pts) {
        MatX<float> X(3, pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            X.col(i) = pts[i].cwiseMax(0.0).cwiseMin(1.0).cast<float>();
        return field(X);
    };

    std::vector<Ray> hits;
    for (int iter = 0; iter < kMaxSteps && !active.empty(); ++iter) {
        std::vector<Eigen::Vector3d> pts(active.size());
        for (std::size_t i = 0; i < active.size(); ++i)
            pts[i] = camera.position + active[i].t * active[i].dir;
        const MatX<float> values = eval_points(pts);

        std::vector<Ray> next;
        next.reserve(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            const double v = values(0, i);
            if (v < kHitEps) {
                hits.push_back(active[i]);
                continue;
            }
            Ray ray = active[i];
            ray.t += v;
            if (ray.t <= ray.t_exit)
                next.push_back(ray);
        }
        active.swap(next);
    }

    if (!hits.empty()) {
        // Central-difference normals, six probes per hit.
        std::vector<Eigen::Vector3d> probes(hits.size() * 6);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const Eigen::Vector3d p = camera.position + hits[i].t * hits[i].dir;
            for (int axis = 0; axis < 3; ++axis) {
                Eigen::Vector3d hi = p, lo = p;
                hi[axis] += kNormalH;
                lo[axis] -= kNormalH;
                probes[i * 6 + 2 * axis] = hi;
                probes[i * 6 + 2 * axis + 1] = lo;
            }
        }
        const MatX<float> values = eval_points(probes);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            Eigen::Vector3d n;
            for (int axis = 0; axis < 3; ++axis)
                n[axis] = values(0, i * 6 + 2 * axis) - values(0, i * 6 + 2 * axis + 1);
            const double len = n.norm();
            if (len > 0)
                n /= len;
            const double lambert = std::max(0.0, n.dot(-hits[i].dir));
            const float shade = float(0.15 + 0.85 * lambert);
            img.rgb.col(hits[i].pixel) = Eigen::Vector3f(0.9f, 0.9f, 0.9f) * shade;
        }
    }
    return img;
}

double iou(const FieldFn& model, const std::function<int(const Eigen::Vector3d&)>& oracle_sign,
           std::int64_t n_points, Pcg32& rng, const Eigen::Vector3d& lo,
           const Eigen::Vector3d& hi)
{
    const std::int64_t chunk = 1 << 16;
    std::int64_t both = 0, either = 0;
    std::vector<Eigen::Vector3d> pts;
    for (std::int64_t done = 0; done < n_points; done += chunk) {
        const std::int64_t n = std::min(chunk, n_points - done);
        pts.resize(n);
        MatX<float> X(3, n);
        for (std::int64_t i = 0; i < n; ++i) {
            pts[i] = Eigen::Vector3d(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                                     rng.uniform(lo.z(), hi.z()));
            X.col(i) = pts[i].cast<float>();
        }
        const MatX<float> pred = model(X);
        for (std::int64_t i = 0; i < n; ++i) {
            const bool m_in = pred(0, i) < 0;
            const bool o_in = oracle_sign(pts[i]) < 0;
            both += m_in && o_in;
            either += m_in || o_in;
        }
    }
    return either == 0 ? 1.0 : double(both) / double(either);
}

std::function<int(const Eigen::Vector3d&)> stab_ray_sign_fn(const Bvh& bvh, double bounding_radius,
                                                            std::uint64_t seed)
{
    auto rng = std::make_shared<Pcg32>(seed, 3);
    const double ray_eps = 1e-6 * bounding_radius;
    return [&bvh, rng, ray_eps](const Eigen::Vector3d& x) {
        const auto dirs =
            fibonacci_directions(32, (std::uint64_t(rng->next_u32()) << 32) | rng->next_u32());
        return sign_by_stab_rays(bvh, x, dirs, ray_eps);
    };
}

} // namespace nf
