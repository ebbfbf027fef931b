#include <Eigen/Geometry>

#include "nf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nf {

static double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::Vector3d& c)
{
    return 0.5 * (b - a).cross(c - a).norm();
}

double TriangleMesh::total_area() const
{
    double sum = 0;
    for (double a : areas)
        sum += a;
    return sum;
}

void TriangleMesh::finalize()
{
    areas.resize(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t)
        areas[t] = triangle_area(vertex(int(t), 0), vertex(int(t), 1), vertex(int(t), 2));
    bbox_min = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
    bbox_max = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
    for (const auto& v : vertices) {
        bbox_min = bbox_min.cwiseMin(v);
        bbox_max = bbox_max.cwiseMax(v);
    }
    bounding_radius = 0.5 * (bbox_max - bbox_min).norm();
}

TriangleMesh parse_obj(std::istream& in)
{
    TriangleMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag))
            continue;
        if (tag == "v") {
            Eigen::Vector3d v;
            if (!(ss >> v.x() >> v.y() >> v.z()))
                throw std::runtime_error("OBJ parse error at line " + std::to_string(line_no)
                                         + ": malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // "i", "i/t", "i/t/n", "i//n"; only the vertex index matters.
                const int raw = std::stoi(tok.substr(0, tok.find('/')));
                const int n = static_cast<int>(mesh.vertices.size());
                int i = raw > 0 ? raw - 1 : n + raw;
                if (i < 0 || i >= n)
                    throw std::runtime_error("OBJ parse error at line " + std::to_string(line_no)
                                             + ": vertex index out of range");
                idx.push_back(i);
            }
            if (idx.size() < 3)
                throw std::runtime_error("OBJ parse error at line " + std::to_string(line_no)
                                         + ": face with fewer than 3 vertices");
            for (std::size_t k = 2; k < idx.size(); ++k)
                mesh.triangles.emplace_back(idx[0], idx[k - 1], idx[k]);
        }
        // Everything else (vn, vt, usemtl, ...) is ignored.
    }
    return mesh;
}

void normalize_to_unit_cube(TriangleMesh& mesh, double margin)
{
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
    Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const double extent = (hi - lo).maxCoeff();
    const double scale = extent > 0 ? (1.0 - 2.0 * margin) / extent : 1.0;
    const Eigen::Vector3d center = 0.5 * (lo + hi);
    for (auto& v : mesh.vertices)
        v = (v - center) * scale + Eigen::Vector3d::Constant(0.5);
}

TriangleMesh load_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file: " + path);
    TriangleMesh mesh = parse_obj(in);

    std::vector<Eigen::Vector3i> kept;
    kept.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles)
        if (triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) > 0)
            kept.push_back(t);
    mesh.triangles = std::move(kept);
    if (mesh.triangles.empty())
        throw std::runtime_error("mesh has no non-degenerate triangles: " + path);

    normalize_to_unit_cube(mesh);
    mesh.finalize();
    return mesh;
}

AreaCdf build_area_cdf(const TriangleMesh& mesh)
{
    AreaCdf out;
    out.cdf.resize(mesh.areas.size());
    double sum = 0;
    for (std::size_t i = 0; i < mesh.areas.size(); ++i) {
        sum += mesh.areas[i];
        out.cdf[i] = sum;
    }
    if (sum <= 0)
        throw std::runtime_error("build_area_cdf: mesh has zero total area");
    for (double& c : out.cdf)
        c /= sum;
    out.cdf.back() = 1.0;
    return out;
}

int AreaCdf::sample(double u) const
{
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end())
        --it;
    return static_cast<int>(it - cdf.begin());
}

Eigen::Vector3d sample_triangle(const TriangleMesh& mesh, int tri, double u1, double u2)
{
    const double su = std::sqrt(u1);
    const Eigen::Vector3d a = mesh.vertex(tri, 0);
    const Eigen::Vector3d b = mesh.vertex(tri, 1);
    const Eigen::Vector3d c = mesh.vertex(tri, 2);
    return (1.0 - su) * a + su * (1.0 - u2) * b + su * u2 * c;
}

} // namespace nf
