#include "nf/sdf_sampling.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace nf {

std::vector<Eigen::Vector3d> fibonacci_directions(int n, std::uint64_t rotation_seed)
{
    if (n < 1)
        throw std::invalid_argument("fibonacci_directions: n must be >= 1");

    // Uniform random rotation (Shoemake's quaternion method).
    Pcg32 rng(rotation_seed, 0x5f3759dfu);
    const double u1 = rng.next_double();
    const double u2 = rng.next_double();
    const double u3 = rng.next_double();
    const double two_pi = 2.0 * M_PI;
    const Eigen::Quaterniond q(std::sqrt(u1) * std::cos(two_pi * u3),
                               std::sqrt(1.0 - u1) * std::sin(two_pi * u2),
                               std::sqrt(1.0 - u1) * std::cos(two_pi * u2),
                               std::sqrt(u1) * std::sin(two_pi * u3));
    const Eigen::Matrix3d rot = q.toRotationMatrix();

    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
    std::vector<Eigen::Vector3d> dirs;
    dirs.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / double(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * i;
        dirs.emplace_back(rot * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z));
    }
    return dirs;
}

int sign_by_stab_rays(const Bvh& bvh, const Eigen::Vector3d& x,
                      const std::vector<Eigen::Vector3d>& dirs, double ray_eps)
{
    if (dirs.empty())
        throw std::invalid_argument("sign_by_stab_rays: no directions");
    // Outside the scene box every ray pointing away escapes immediately.
    const Eigen::Vector3d lo = bvh.scene_min();
    const Eigen::Vector3d hi = bvh.scene_max();
    if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any())
        return +1;
    for (const auto& d : dirs)
        if (!bvh.any_hit(x + ray_eps * d, d))
            return +1;
    return -1;
}

double logistic_noise(Pcg32& rng, double target_std)
{
    if (!(target_std > 0))
        throw std::invalid_argument("logistic_noise: target_std must be > 0");
    const double scale = target_std * std::sqrt(3.0) / M_PI;
    double u = rng.next_double();
    // Keep the inverse CDF finite at the extremes.
    u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
    return scale * std::log(u / (1.0 - u));
}

std::vector<SdfSample> sample_training_points(const TriangleMesh& mesh, const Bvh& bvh,
                                              const AreaCdf& cdf, int n, Pcg32& rng,
                                              const SampleOptions& options)
{
    const double r = mesh.bounding_radius;
    const double perturb_std = options.perturb_std > 0 ? options.perturb_std : r / 1024.0;
    const double ray_eps = 1e-6 * r;

    const int n_uniform = n / 8;
    const int n_surface = 4 * n / 8;
    const int n_perturbed = n - n_uniform - n_surface;

    std::vector<SdfSample> samples;
    samples.reserve(n);

    if (options.octree) {
        for (const auto& p : octree_sample_positions(*options.octree, n_uniform, rng)) {
            SdfSample s;
            s.position = p;
            s.category = SdfSample::Category::Uniform;
            samples.push_back(s);
        }
    } else {
        for (int i = 0; i < n_uniform; ++i) {
            SdfSample s;
            s.position = Eigen::Vector3d(rng.next_double(), rng.next_double(), rng.next_double());
            s.category = SdfSample::Category::Uniform;
            samples.push_back(s);
        }
    }

    for (int i = 0; i < n_surface + n_perturbed; ++i) {
        SdfSample s;
        const int tri = cdf.sample(rng.next_double());
        s.position = sample_triangle(mesh, tri, rng.next_double(), rng.next_double());
        if (i < n_surface) {
            s.category = SdfSample::Category::Surface;
        } else {
            s.category = SdfSample::Category::Perturbed;
            for (int axis = 0; axis < 3; ++axis)
                s.position[axis] += logistic_noise(rng, perturb_std);
            s.position = s.position.cwiseMax(0.0).cwiseMin(1.0);
        }
        samples.push_back(s);
    }

    for (SdfSample& s : samples) {
        const ClosestHit hit = bvh.closest_point(s.position);
        int sign;
        if (options.sign_by_normal) {
            const Eigen::Vector3d normal =
                (mesh.vertex(hit.triangle, 1) - mesh.vertex(hit.triangle, 0))
                    .cross(mesh.vertex(hit.triangle, 2) - mesh.vertex(hit.triangle, 0));
            sign = normal.dot(s.position - hit.point) >= 0 ? +1 : -1;
        } else {
            const auto dirs = fibonacci_directions(
                options.stab_rays, (std::uint64_t(rng.next_u32()) << 32) | rng.next_u32());
            sign = sign_by_stab_rays(bvh, s.position, dirs, ray_eps);
        }
        s.distance = sign * hit.distance;
    }
    return samples;
}

} // namespace nf
