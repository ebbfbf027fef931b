#pragma once

#include <Eigen/Core>

#include <functional>

#include "nf/bvh.hpp"
#include "nf/io.hpp"
#include "nf/mesh.hpp"
#include "nf/model.hpp"
#include "nf/octree.hpp"
#include "nf/pcg32.hpp"

namespace nf {

// Caps OpenMP and Eigen parallelism; 1 gives the deterministic mode.
void set_threads(int n);

struct ImageTask {
    Image image;
    HashEncodingConfig cfg; // d = 2; n_max <= 0 means width / 2
    EncoderKind encoder = EncoderKind::Hash;
    Interpolation interpolation = Interpolation::Linear;
    int n_frequencies = 10;
    int hidden_layers = 2;
    int hidden_width = 64;
    int batch_size = 1 << 14;
    std::int64_t total_steps = 10000;
    std::int64_t log_interval = 1000;
    double lr = 1e-2;
    double lr_decay = 0.33;
};

struct SdfTask {
    const TriangleMesh* mesh = nullptr;
    const Bvh* bvh = nullptr;
    const SurfaceOctree* octree = nullptr; // required for the octree encoder
    HashEncodingConfig cfg;                // d = 3
    EncoderKind encoder = EncoderKind::Hash;
    int n_frequencies = 10;
    int hidden_layers = 2;
    int hidden_width = 64;
    int batch_size = 1 << 13;
    std::int64_t total_steps = 10000;
    std::int64_t log_interval = 1000;
    double lr = 1e-4;
    double lr_decay = 0.33;
    LossKind loss = LossKind::Mape;
    double perturb_std = -1; // <= 0: r/1024
    std::int64_t iou_eval_points = 1 << 16; // per logged row
};

struct FitResult {
    FieldModel model;
    TrainReport report;
};

// Trains encode->MLP on uniformly sampled pixels with the L2 loss. The
// metric column is PSNR on a fixed evaluation grid.
FitResult fit_image(const ImageTask& task, std::uint64_t seed);

// Trains a signed-distance field on freshly generated mesh samples each
// step. The metric column is interior IoU against the stab-ray oracle.
FitResult fit_sdf(const SdfTask& task, std::uint64_t seed);

// Evaluates a 2D model at every pixel center.
Image render_image(const FieldModel& model, int width, int height);

using FieldFn = std::function<MatX<float>(const MatX<float>&)>;

struct Camera {
    Eigen::Vector3d position{ 0.5, 0.5, -1.2 };
    Eigen::Vector3d target{ 0.5, 0.5, 0.5 };
    Eigen::Vector3d up{ 0.0, 1.0, 0.0 };
    double fov_deg = 40;
};

// Sphere-traces the zero level set (step = field value, stop at |v| < 1e-4
// or 256 steps), shades hits with a Lambertian headlight; normals come from
// central differences with h = 1e-3. The field is only queried in [0,1]^3.
Image render_sdf_shaded(const FieldFn& field, const Camera& camera, int width, int height);

// Interior intersection-over-union of two sign functions, estimated at
// uniform points in [lo, hi]. Defined as 1 when neither interior shows up.
double iou(const FieldFn& model, const std::function<int(const Eigen::Vector3d&)>& oracle_sign,
           std::int64_t n_points, Pcg32& rng, const Eigen::Vector3d& lo,
           const Eigen::Vector3d& hi);

// Stab-ray sign oracle bound to a BVH, usable with iou().
std::function<int(const Eigen::Vector3d&)> stab_ray_sign_fn(const Bvh& bvh, double bounding_radius,
                                                            std::uint64_t seed);

} // namespace nf
