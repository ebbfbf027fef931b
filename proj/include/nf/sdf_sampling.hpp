#pragma once

#include <Eigen/Core>

#include <vector>

#include "nf/bvh.hpp"
#include "nf/mesh.hpp"
#include "nf/octree.hpp"
#include "nf/pcg32.hpp"

namespace nf {

// Fibonacci lattice on the unit sphere, rotated by a pseudorandom rotation
// derived from rotation_seed.
std::vector<Eigen::Vector3d> fibonacci_directions(int n, std::uint64_t rotation_seed);

// +1 if any ray from x escapes the scene without hitting a triangle, else -1.
// Ray origins are offset by ray_eps along the direction to avoid self-hits.
int sign_by_stab_rays(const Bvh& bvh, const Eigen::Vector3d& x,
                      const std::vector<Eigen::Vector3d>& dirs, double ray_eps);

// Zero-median logistic sample with the requested standard deviation
// (inverse-CDF: s * ln(u / (1-u)) with s = std * sqrt(3) / pi).
double logistic_noise(Pcg32& rng, double target_std);

struct SdfSample {
    enum class Category { Uniform, Surface, Perturbed };
    Eigen::Vector3d position;
    double distance = 0; // signed
    Category category = Category::Uniform;
};

struct SampleOptions {
    // Perturbation standard deviation; <= 0 means the default r/1024.
    double perturb_std = -1;
    // When set, uniform-cube samples are replaced by positions inside the
    // octree's occupied leaves.
    const SurfaceOctree* octree = nullptr;
    // Sign by the closest triangle's normal instead of stab rays. Only
    // sound for watertight meshes; off by default.
    bool sign_by_normal = false;
    int stab_rays = 32;
};

// Standard SDF training batch: floor(n/8) uniform in the unit cube,
// floor(4n/8) on the surface (area-proportional), the rest perturbed from
// the surface by per-axis logistic noise.
std::vector<SdfSample> sample_training_points(const TriangleMesh& mesh, const Bvh& bvh,
                                              const AreaCdf& cdf, int n, Pcg32& rng,
                                              const SampleOptions& options = {});

} // namespace nf
