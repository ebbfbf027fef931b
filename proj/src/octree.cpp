#include <Eigen/Geometry>

#include "nf/octree.hpp"

#include <cmath>
#include <stdexcept>

namespace nf {

// Akenine-Moller separating-axis test, box centered at the origin.
bool triangle_box_intersect(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::Vector3d& c, const Eigen::Vector3d& box_center,
                            const Eigen::Vector3d& box_half)
{
    const Eigen::Vector3d v0 = a - box_center;
    const Eigen::Vector3d v1 = b - box_center;
    const Eigen::Vector3d v2 = c - box_center;
    const Eigen::Vector3d h = box_half;

    // Box face normals.
    for (int i = 0; i < 3; ++i) {
        const double lo = std::min({ v0[i], v1[i], v2[i] });
        const double hi = std::max({ v0[i], v1[i], v2[i] });
        if (lo > h[i] || hi < -h[i])
            return false;
    }

    const Eigen::Vector3d e0 = v1 - v0;
    const Eigen::Vector3d e1 = v2 - v1;
    const Eigen::Vector3d e2 = v0 - v2;

    // Triangle plane.
    const Eigen::Vector3d n = e0.cross(e1);
    const double d = n.dot(v0);
    const double r = h.x() * std::abs(n.x()) + h.y() * std::abs(n.y()) + h.z() * std::abs(n.z());
    if (std::abs(d) > r)
        return false;

    // Nine cross-product axes.
    auto axis_test = [&](const Eigen::Vector3d& axis) {
        const double p0 = axis.dot(v0);
        const double p1 = axis.dot(v1);
        const double p2 = axis.dot(v2);
        const double lo = std::min({ p0, p1, p2 });
        const double hi = std::max({ p0, p1, p2 });
        const double rad = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y())
            + h.z() * std::abs(axis.z());
        return lo <= rad && hi >= -rad;
    };
    const Eigen::Vector3d axes[3] = { Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                      Eigen::Vector3d::UnitZ() };
    for (const Eigen::Vector3d& e : { e0, e1, e2 })
        for (const Eigen::Vector3d& u : axes)
            if (!axis_test(u.cross(e)))
                return false;
    return true;
}

namespace {

struct BuildCtx {
    const TriangleMesh* mesh;
    const Bvh* bvh;
    int max_level;
    SurfaceOctree* tree;
};

void subdivide(BuildCtx& ctx, int level, std::uint32_t x, std::uint32_t y, std::uint32_t z,
               const std::vector<std::int32_t>& candidates)
{
    const double size = 1.0 / double(1u << level);
    const Eigen::Vector3d center((x + 0.5) * size, (y + 0.5) * size, (z + 0.5) * size);
    const Eigen::Vector3d half = Eigen::Vector3d::Constant(0.5 * size);

    // Cheap reject: no triangle can touch the box if the closest point of
    // the whole mesh is farther than the half diagonal.
    if (ctx.bvh->closest_point(center).distance > half.norm() + 1e-12)
        return;

    std::vector<std::int32_t> hits;
    hits.reserve(candidates.size());
    for (std::int32_t t : candidates)
        if (triangle_box_intersect(ctx.mesh->vertex(t, 0), ctx.mesh->vertex(t, 1),
                                   ctx.mesh->vertex(t, 2), center, half))
            hits.push_back(t);
    if (hits.empty())
        return;

    ctx.tree->occupied_[level].insert(SurfaceOctree::pack(x, y, z));
    if (level == ctx.max_level) {
        ctx.tree->leaves_.push_back(SurfaceOctree::pack(x, y, z));
        return;
    }
    for (std::uint32_t dz = 0; dz < 2; ++dz)
        for (std::uint32_t dy = 0; dy < 2; ++dy)
            for (std::uint32_t dx = 0; dx < 2; ++dx)
                subdivide(ctx, level + 1, 2 * x + dx, 2 * y + dy, 2 * z + dz, hits);
}

} // namespace

SurfaceOctree build_surface_octree(const TriangleMesh& mesh, const Bvh& bvh, int max_level)
{
    if (max_level < 0 || max_level > 20)
        throw std::invalid_argument("build_surface_octree: max_level out of range");
    SurfaceOctree tree;
    tree.occupied_.resize(max_level + 1);

    std::vector<std::int32_t> all(mesh.triangles.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<std::int32_t>(i);

    BuildCtx ctx{ &mesh, &bvh, max_level, &tree };
    subdivide(ctx, 0, 0, 0, 0, all);
    return tree;
}

std::vector<Eigen::Vector3d> octree_sample_positions(const SurfaceOctree& octree, int n, Pcg32& rng)
{
    const auto& leaves = octree.leaves();
    if (leaves.empty())
        throw std::invalid_argument("octree_sample_positions: octree has no occupied leaves");
    const double size = 1.0 / double(1u << octree.max_level());
    std::vector<Eigen::Vector3d> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t code = leaves[rng.next_below(std::uint32_t(leaves.size()))];
        const auto x = std::uint32_t(code >> 42 & 0x1fffff);
        const auto y = std::uint32_t(code >> 21 & 0x1fffff);
        const auto z = std::uint32_t(code & 0x1fffff);
        out.emplace_back((x + rng.next_double()) * size, (y + rng.next_double()) * size,
                         (z + rng.next_double()) * size);
    }
    return out;
}

} // namespace nf
