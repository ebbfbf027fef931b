#pragma once

#include <Eigen/Core>

#include <istream>
#include <string>
#include <vector>

namespace nf {

// Indexed triangle mesh. After load_mesh the geometry is normalized into
// [0.05, 0.95]^3; `bounding_radius` is half the bounding-box diagonal.
struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> triangles;
    std::vector<double> areas; // per triangle
    Eigen::Vector3d bbox_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d bbox_max = Eigen::Vector3d::Zero();
    double bounding_radius = 0;

    double total_area() const;
    Eigen::Vector3d vertex(int tri, int corner) const
    {
        return vertices[triangles[tri][corner]];
    }

    // Recomputes areas, bounding box and bounding radius.
    void finalize();
};

// Parses OBJ geometry (v / f records; polygons fan-triangulated, other
// records ignored). No normalization, zero-area triangles kept.
TriangleMesh parse_obj(std::istream& in);

// Uniformly scales and translates the mesh to fit [margin, 1-margin]^3.
void normalize_to_unit_cube(TriangleMesh& mesh, double margin = 0.05);

// Full ingestion path: parse, drop zero-area triangles, normalize, finalize.
// Throws std::runtime_error on parse failure or an empty mesh.
TriangleMesh load_mesh(const std::string& path);

// Cumulative normalized triangle areas; last entry is 1. Supports
// area-proportional triangle selection by inversion.
struct AreaCdf {
    std::vector<double> cdf;

    // Index of the triangle whose CDF bucket contains u in [0,1).
    int sample(double u) const;
};

AreaCdf build_area_cdf(const TriangleMesh& mesh);

// Uniform point on a triangle via the standard sqrt warp.
Eigen::Vector3d sample_triangle(const TriangleMesh& mesh, int tri, double u1, double u2);

} // namespace nf
