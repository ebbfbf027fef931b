#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "nf/bvh.hpp"
#include "nf/mesh.hpp"
#include "nf/pcg32.hpp"

namespace nf {

// Exact SAT test between an axis-aligned box and a triangle.
bool triangle_box_intersect(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::Vector3d& c, const Eigen::Vector3d& box_center,
                            const Eigen::Vector3d& box_half);

// Sparse voxel octree over the unit cube. A voxel at level k (resolution
// 2^k) is occupied iff its box intersects at least one triangle; only
// occupied voxels are subdivided.
class SurfaceOctree {
public:
    static std::uint64_t pack(std::uint32_t x, std::uint32_t y, std::uint32_t z)
    {
        return (std::uint64_t(x) << 42) | (std::uint64_t(y) << 21) | std::uint64_t(z);
    }

    int max_level() const { return static_cast<int>(occupied_.size()) - 1; }

    bool is_occupied(int level, std::uint32_t x, std::uint32_t y, std::uint32_t z) const
    {
        return occupied_[level].count(pack(x, y, z)) != 0;
    }

    std::size_t occupied_count(int level) const { return occupied_[level].size(); }

    const std::unordered_set<std::uint64_t>& occupied_set(int level) const
    {
        return occupied_[level];
    }

    // Occupied voxels at the finest level, i.e. the leaf nodes.
    const std::vector<std::uint64_t>& leaves() const { return leaves_; }

    // Filled by build_surface_octree.
    std::vector<std::unordered_set<std::uint64_t>> occupied_; // per level
    std::vector<std::uint64_t> leaves_;
};

SurfaceOctree build_surface_octree(const TriangleMesh& mesh, const Bvh& bvh, int max_level = 10);

// Uniform positions inside occupied leaf voxels: pick a leaf uniformly,
// then a uniform point inside its box.
std::vector<Eigen::Vector3d> octree_sample_positions(const SurfaceOctree& octree, int n,
                                                     Pcg32& rng);

} // namespace nf
