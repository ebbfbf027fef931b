#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "nf/mesh.hpp"

namespace nf {

// Exact closest point on a triangle (Ericson's region test).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

// Watertight-enough Moeller-Trumbore; returns hit distance t > t_min or a
// negative value on miss.
double ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const Eigen::Vector3d& c, double t_min);

struct ClosestHit {
    double distance = 0;
    int triangle = -1;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

// Binary BVH over triangle centroids: median split along the longest axis,
// leaves hold at most 4 triangles. Immutable after construction.
class Bvh {
public:
    explicit Bvh(const TriangleMesh& mesh, int leaf_size = 4);

    // Branch-and-bound closest-point query. If stats_nodes_visited is
    // non-null, it receives the number of BVH nodes expanded.
    ClosestHit closest_point(const Eigen::Vector3d& x,
                             std::size_t* stats_nodes_visited = nullptr) const;

    // True iff the ray origin + t*dir (t > t_min) hits any triangle.
    bool any_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                 double t_min = 0.0) const;

    const TriangleMesh& mesh() const { return *mesh_; }

    Eigen::Vector3d scene_min() const { return nodes_[0].bmin; }
    Eigen::Vector3d scene_max() const { return nodes_[0].bmax; }

private:
    struct Node {
        Eigen::Vector3d bmin, bmax;
        std::int32_t left = -1;  // internal: child indices; leaf: left == -1
        std::int32_t first = 0;  // leaf: range into tri_order_
        std::int32_t count = 0;
    };

    std::int32_t build_node(std::int32_t first, std::int32_t count, int leaf_size);

    const TriangleMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<std::int32_t> tri_order_;
    std::vector<Eigen::Vector3d> centroids_;
};

// Minimum distance from the mesh, with the closest triangle id.
inline ClosestHit unsigned_distance(const Bvh& bvh, const Eigen::Vector3d& x)
{
    return bvh.closest_point(x);
}

} // namespace nf
