#include <Eigen/Geometry>

#include "nf/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nf {

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c)
{
    const Eigen::Vector3d ab = b - a;
    const Eigen::Vector3d ac = c - a;
    const Eigen::Vector3d ap = p - a;

    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0)
        return a;

    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3)
        return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0)
        return a + (d1 / (d1 - d3)) * ab;

    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6)
        return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0)
        return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const Eigen::Vector3d& c, double t_min)
{
    const Eigen::Vector3d e1 = b - a;
    const Eigen::Vector3d e2 = c - a;
    const Eigen::Vector3d pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14)
        return -1;
    const double inv_det = 1.0 / det;
    const Eigen::Vector3d tvec = origin - a;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < 0 || u > 1)
        return -1;
    const Eigen::Vector3d qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv_det;
    if (v < 0 || u + v > 1)
        return -1;
    const double t = e2.dot(qvec) * inv_det;
    return t > t_min ? t : -1;
}

static double box_distance_sq(const Eigen::Vector3d& x, const Eigen::Vector3d& bmin,
                              const Eigen::Vector3d& bmax)
{
    const Eigen::Vector3d clamped = x.cwiseMax(bmin).cwiseMin(bmax);
    return (x - clamped).squaredNorm();
}

static bool ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& inv_dir,
                    const Eigen::Vector3d& bmin, const Eigen::Vector3d& bmax, double t_min)
{
    double t0 = t_min, t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        double near = (bmin[i] - origin[i]) * inv_dir[i];
        double far = (bmax[i] - origin[i]) * inv_dir[i];
        if (near > far)
            std::swap(near, far);
        t0 = std::max(t0, near);
        t1 = std::min(t1, far);
        if (t0 > t1)
            return false;
    }
    return true;
}

Bvh::Bvh(const TriangleMesh& mesh, int leaf_size) : mesh_(&mesh)
{
    const auto n = static_cast<std::int32_t>(mesh.triangles.size());
    if (n == 0)
        throw std::invalid_argument("Bvh: empty mesh");
    tri_order_.resize(n);
    std::iota(tri_order_.begin(), tri_order_.end(), 0);
    centroids_.resize(n);
    for (std::int32_t t = 0; t < n; ++t)
        centroids_[t] = (mesh.vertex(t, 0) + mesh.vertex(t, 1) + mesh.vertex(t, 2)) / 3.0;
    nodes_.reserve(std::size_t(2) * n);
    build_node(0, n, leaf_size);
    centroids_.clear();
}

std::int32_t Bvh::build_node(std::int32_t first, std::int32_t count, int leaf_size)
{
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::Vector3d bmin = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
    Eigen::Vector3d bmax = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
    Eigen::Vector3d cmin = bmin, cmax = bmax;
    for (std::int32_t i = first; i < first + count; ++i) {
        const std::int32_t t = tri_order_[i];
        for (int k = 0; k < 3; ++k) {
            bmin = bmin.cwiseMin(mesh_->vertex(t, k));
            bmax = bmax.cwiseMax(mesh_->vertex(t, k));
        }
        cmin = cmin.cwiseMin(centroids_[t]);
        cmax = cmax.cwiseMax(centroids_[t]);
    }
    nodes_[index].bmin = bmin;
    nodes_[index].bmax = bmax;

    int axis = 0;
    (cmax - cmin).maxCoeff(&axis);
    if (count <= leaf_size || cmax[axis] - cmin[axis] <= 0) {
        nodes_[index].first = first;
        nodes_[index].count = count;
        return index;
    }

    const std::int32_t mid = first + count / 2;
    std::nth_element(tri_order_.begin() + first, tri_order_.begin() + mid,
                     tri_order_.begin() + first + count,
                     [&](std::int32_t lhs, std::int32_t rhs) {
                         return centroids_[lhs][axis] < centroids_[rhs][axis];
                     });
    const std::int32_t left = build_node(first, mid - first, leaf_size);
    const std::int32_t right = build_node(mid, first + count - mid, leaf_size);
    nodes_[index].left = left;
    nodes_[index].count = 0;
    nodes_[index].first = right;
    return index;
}

ClosestHit Bvh::closest_point(const Eigen::Vector3d& x, std::size_t* stats_nodes_visited) const
{
    ClosestHit best;
    best.distance = std::numeric_limits<double>::infinity();
    std::size_t visited = 0;

    struct Entry {
        std::int32_t node;
        double dist_sq;
    };
    Entry stack[64];
    int top = 0;
    stack[top++] = { 0, box_distance_sq(x, nodes_[0].bmin, nodes_[0].bmax) };

    double best_sq = std::numeric_limits<double>::infinity();
    while (top > 0) {
        const Entry e = stack[--top];
        if (e.dist_sq >= best_sq)
            continue;
        ++visited;
        const Node& node = nodes_[e.node];
        if (node.left < 0) {
            for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
                const std::int32_t t = tri_order_[i];
                const Eigen::Vector3d q = closest_point_on_triangle(
                    x, mesh_->vertex(t, 0), mesh_->vertex(t, 1), mesh_->vertex(t, 2));
                const double d_sq = (x - q).squaredNorm();
                if (d_sq < best_sq) {
                    best_sq = d_sq;
                    best.triangle = t;
                    best.point = q;
                }
            }
            continue;
        }
        Entry child[2] = {
            { node.left, box_distance_sq(x, nodes_[node.left].bmin, nodes_[node.left].bmax) },
            { node.first, box_distance_sq(x, nodes_[node.first].bmin, nodes_[node.first].bmax) },
        };
        // Push the farther child first so the nearer one is expanded next.
        if (child[0].dist_sq < child[1].dist_sq)
            std::swap(child[0], child[1]);
        for (const Entry& c : child)
            if (c.dist_sq < best_sq)
                stack[top++] = c;
    }
    best.distance = std::sqrt(best_sq);
    if (stats_nodes_visited)
        *stats_nodes_visited = visited;
    return best;
}

bool Bvh::any_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t_min) const
{
    const Eigen::Vector3d inv_dir = dir.cwiseInverse();
    std::int32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box(origin, inv_dir, node.bmin, node.bmax, t_min))
            continue;
        if (node.left < 0) {
            for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
                const std::int32_t t = tri_order_[i];
                if (ray_triangle(origin, dir, mesh_->vertex(t, 0), mesh_->vertex(t, 1),
                                 mesh_->vertex(t, 2), t_min) > 0)
                    return true;
            }
            continue;
        }
        stack[top++] = node.left;
        stack[top++] = node.first;
    }
    return false;
}

} // namespace nf
