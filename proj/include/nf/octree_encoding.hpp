#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "nf/grid.hpp"
#include "nf/octree.hpp"
#include "nf/pcg32.hpp"

namespace nf {

// Collision-free octree encoding: trainable feature vectors live on the
// vertices of occupied voxels, looked up per level from start_level to the
// octree's max level and concatenated. Points outside every occupied voxel
// at a level contribute a zero slice and a cleared validity bit.
template <typename Scalar>
struct OctreeFeatureTables {
    const SurfaceOctree* octree = nullptr;
    int start_level = 4;
    int features = 8;
    std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> vertex_rows; // per level
    std::vector<MatX<Scalar>> values;
    std::vector<MatX<Scalar>> grads;

    OctreeFeatureTables() = default;

    OctreeFeatureTables(const SurfaceOctree& tree, int start, int n_features)
        : octree(&tree), start_level(start), features(n_features)
    {
        if (start_level < 0 || start_level > tree.max_level())
            throw std::invalid_argument("OctreeFeatureTables: start_level out of range");
        for (int level = start_level; level <= tree.max_level(); ++level) {
            std::unordered_map<std::uint64_t, std::uint32_t> rows;
            for (std::uint64_t code : tree.occupied_set(level)) {
                const auto x = std::uint32_t(code >> 42 & 0x1fffff);
                const auto y = std::uint32_t(code >> 21 & 0x1fffff);
                const auto z = std::uint32_t(code & 0x1fffff);
                for (std::uint32_t dz = 0; dz < 2; ++dz)
                    for (std::uint32_t dy = 0; dy < 2; ++dy)
                        for (std::uint32_t dx = 0; dx < 2; ++dx) {
                            const std::uint64_t v = SurfaceOctree::pack(x + dx, y + dy, z + dz);
                            rows.emplace(v, std::uint32_t(rows.size()));
                        }
            }
            values.emplace_back(MatX<Scalar>::Zero(features, rows.size()));
            grads.emplace_back(MatX<Scalar>::Zero(features, rows.size()));
            vertex_rows.push_back(std::move(rows));
        }
    }

    int level_count() const { return static_cast<int>(values.size()); }
    int output_width() const { return level_count() * features; }

    void init_uniform(std::uint64_t seed, Scalar magnitude = Scalar(1e-4))
    {
        Pcg32 rng(seed, 0xfeedu);
        for (auto& v : values)
            for (Eigen::Index i = 0; i < v.size(); ++i)
                v.data()[i] = rng.uniform(-magnitude, magnitude);
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& v : values)
            n += static_cast<std::size_t>(v.size());
        return n;
    }

    void zero_grads()
    {
        for (auto& g : grads)
            g.setZero();
    }
};

template <typename Scalar>
struct OctreeEncodeCache {
    int batch = 0;
    int levels = 0;
    static constexpr std::uint32_t kInvalidRow = 0xffffffffu;
    std::vector<std::uint32_t> rows; // levels * batch * 8
    std::vector<Scalar> weights;
    std::vector<char> valid; // levels * batch; out-of-domain diagnostics

    std::size_t offset(int level, int point) const
    {
        return (std::size_t(level) * batch + point) * 8;
    }
};

template <typename Scalar>
void octree_encode_forward(const OctreeFeatureTables<Scalar>& tables, const MatX<Scalar>& X,
                           MatX<Scalar>& Y, OctreeEncodeCache<Scalar>& cache)
{
    if (X.rows() != 3)
        throw std::invalid_argument("octree_encode_forward: inputs must be 3D");
    const int batch = static_cast<int>(X.cols());
    const int F = tables.features;
    const int n_levels = tables.level_count();

    Y.setZero(tables.output_width(), batch);
    cache.batch = batch;
    cache.levels = n_levels;
    cache.rows.assign(std::size_t(n_levels) * batch * 8, OctreeEncodeCache<Scalar>::kInvalidRow);
    cache.weights.assign(cache.rows.size(), Scalar(0));
    cache.valid.assign(std::size_t(n_levels) * batch, 0);

    for (int li = 0; li < n_levels; ++li) {
        const int level = tables.start_level + li;
        const Scalar res = Scalar(std::uint32_t(1) << level);
        const auto& rows = tables.vertex_rows[li];
        const MatX<Scalar>& table = tables.values[li];
        for (int p = 0; p < batch; ++p) {
            Scalar frac[3];
            std::uint32_t v[3];
            bool in_cube = true;
            for (int i = 0; i < 3; ++i) {
                const Scalar x = X(i, p);
                if (x < Scalar(0) || x > Scalar(1)) {
                    in_cube = false;
                    break;
                }
                const Scalar pos = std::min(x, Scalar(1) - Scalar(0x1p-20)) * res;
                const Scalar f = std::floor(pos);
                v[i] = static_cast<std::uint32_t>(f);
                frac[i] = pos - f;
            }
            if (!in_cube || !tables.octree->is_occupied(level, v[0], v[1], v[2]))
                continue;

            cache.valid[std::size_t(li) * batch + p] = 1;
            Scalar w[8];
            interpolation_weights(frac, 3, Interpolation::Linear, w);
            const std::size_t off = cache.offset(li, p);
            auto out = Y.col(p).segment(li * F, F);
            for (int c = 0; c < 8; ++c) {
                const std::uint64_t code = SurfaceOctree::pack(
                    v[0] + (c & 1u), v[1] + (c >> 1 & 1u), v[2] + (c >> 2 & 1u));
                const std::uint32_t row = rows.at(code);
                cache.rows[off + c] = row;
                cache.weights[off + c] = w[c];
                out += w[c] * table.col(row);
            }
        }
    }
}

template <typename Scalar>
void octree_encode_backward(OctreeFeatureTables<Scalar>& tables,
                            const OctreeEncodeCache<Scalar>& cache, const MatX<Scalar>& dY)
{
    if (dY.rows() != tables.output_width() || dY.cols() != cache.batch
        || cache.levels != tables.level_count())
        throw std::invalid_argument("octree_encode_backward: gradient shape mismatch");
    const int F = tables.features;
    for (int li = 0; li < cache.levels; ++li) {
        MatX<Scalar>& grad = tables.grads[li];
        for (int p = 0; p < cache.batch; ++p) {
            const std::size_t off = cache.offset(li, p);
            if (cache.rows[off] == OctreeEncodeCache<Scalar>::kInvalidRow)
                continue;
            const auto g = dY.col(p).segment(li * F, F);
            for (int c = 0; c < 8; ++c)
                grad.col(cache.rows[off + c]) += cache.weights[off + c] * g;
        }
    }
}

} // namespace nf
