#pragma once

// Shared procedural test assets: an icosphere mesh with an analytic
// inside/outside oracle and a pseudo-natural test image.

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nf/io.hpp"
#include "nf/mesh.hpp"

namespace nf_test {

// Icosahedron subdivided `subdivisions` times, vertices projected onto the
// sphere of the given center/radius. Finalized but not re-normalized, so the
// geometry sits exactly where requested inside the unit cube.
inline nf::TriangleMesh make_icosphere(int subdivisions, const Eigen::Vector3d& center,
                                       double radius)
{
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        { -1, phi, 0 }, { 1, phi, 0 }, { -1, -phi, 0 }, { 1, -phi, 0 },
        { 0, -1, phi }, { 0, 1, phi }, { 0, -1, -phi }, { 0, 1, -phi },
        { phi, 0, -1 }, { phi, 0, 1 }, { -phi, 0, -1 }, { -phi, 0, 1 },
    };
    for (auto& v : verts)
        v.normalize();
    std::vector<Eigen::Vector3i> faces = {
        { 0, 11, 5 }, { 0, 5, 1 }, { 0, 1, 7 }, { 0, 7, 10 }, { 0, 10, 11 },
        { 1, 5, 9 }, { 5, 11, 4 }, { 11, 10, 2 }, { 10, 7, 6 }, { 7, 1, 8 },
        { 3, 9, 4 }, { 3, 4, 2 }, { 3, 2, 6 }, { 3, 6, 8 }, { 3, 8, 9 },
        { 4, 9, 5 }, { 2, 4, 11 }, { 6, 2, 10 }, { 8, 6, 7 }, { 9, 8, 1 },
    };

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end())
                return it->second;
            verts.push_back((0.5 * (verts[a] + verts[b])).normalized());
            const int idx = int(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({ f[0], ab, ca });
            next.push_back({ f[1], bc, ab });
            next.push_back({ f[2], ca, bc });
            next.push_back({ ab, bc, ca });
        }
        faces = std::move(next);
    }

    nf::TriangleMesh mesh;
    mesh.triangles = std::move(faces);
    mesh.vertices.reserve(verts.size());
    for (const auto& v : verts)
        mesh.vertices.push_back(center + radius * v);
    mesh.finalize();
    return mesh;
}

inline void write_obj(const nf::TriangleMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

// True inside-sphere test with a dead band around the surface: returns +1 or
// -1 away from it and 0 within `band` of the radius, where an icosphere and
// the ideal sphere legitimately disagree.
inline int sphere_side(const Eigen::Vector3d& p, const Eigen::Vector3d& center, double radius,
                       double band)
{
    const double d = (p - center).norm() - radius;
    if (std::abs(d) <= band)
        return 0;
    return d > 0 ? +1 : -1;
}

// Deterministic pseudo-natural RGB image: smooth low-frequency gradients
// with a few sinusoidal texture octaves, in [0,1].
inline nf::Image make_test_image(int width, int height)
{
    nf::Image img;
    img.width = width;
    img.height = height;
    img.rgb.resize(3, std::size_t(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / width;
            const double v = (y + 0.5) / height;
            double r = 0.35 + 0.3 * u + 0.15 * std::sin(6.0 * u + 2.0 * v);
            double g = 0.45 + 0.25 * v + 0.12 * std::sin(9.0 * v - 3.0 * u + 1.3);
            double b = 0.5 + 0.2 * std::sin(4.0 * (u + v));
            for (int o = 1; o <= 3; ++o) {
                const double f = 12.0 * o;
                const double a = 0.08 / o;
                r += a * std::sin(f * u + 0.7 * o) * std::cos(f * 0.8 * v);
                g += a * std::cos(f * v + 1.9 * o) * std::sin(f * 0.6 * u);
                b += a * std::sin(f * (u - v) + 0.4 * o);
            }
            const std::size_t i = std::size_t(y) * width + x;
            img.rgb(0, i) = float(std::min(1.0, std::max(0.0, r)));
            img.rgb(1, i) = float(std::min(1.0, std::max(0.0, g)));
            img.rgb(2, i) = float(std::min(1.0, std::max(0.0, b)));
        }
    return img;
}

} // namespace nf_test
