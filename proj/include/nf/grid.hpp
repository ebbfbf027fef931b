#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nf/pcg32.hpp"

namespace nf {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Interpolation { Linear, Smoothstep };

// Multiresolution feature-grid hyperparameters. Levels run from a coarse
// resolution n_min to a fine resolution n_max in a geometric progression;
// each level owns at most table_size rows of `features` scalars.
struct HashEncodingConfig {
    int levels = 16;               // L
    std::uint32_t table_size = 1u << 14; // T, must be a power of two
    int features = 2;              // F
    int n_min = 16;
    int n_max = 512;
    int dims = 3;                  // d, 2 or 3
    Interpolation interpolation = Interpolation::Linear;

    void validate() const
    {
        if (levels < 1)
            throw std::invalid_argument("HashEncodingConfig: levels must be >= 1");
        if (table_size == 0 || (table_size & (table_size - 1)) != 0)
            throw std::invalid_argument("HashEncodingConfig: table_size must be a power of two");
        if (features < 1)
            throw std::invalid_argument("HashEncodingConfig: features must be >= 1");
        if (n_min < 1 || n_max < n_min)
            throw std::invalid_argument("HashEncodingConfig: need 1 <= n_min <= n_max");
        if (dims != 2 && dims != 3)
            throw std::invalid_argument("HashEncodingConfig: dims must be 2 or 3");
    }

    // Per-level geometric growth factor; 1 when the progression is degenerate.
    double growth_factor() const
    {
        if (levels < 2 || n_min == n_max)
            return 1.0;
        return std::exp((std::log(double(n_max)) - std::log(double(n_min))) / double(levels - 1));
    }

    int output_width() const { return levels * features; }
};

struct GridLevelSpec {
    int level = 0;
    std::uint32_t resolution = 0; // N_l, cells per unit
    std::uint32_t table_len = 0;  // feature rows at this level
    bool dense = false;           // true iff (N_l+1)^d <= T
};

inline std::vector<GridLevelSpec> level_resolutions(const HashEncodingConfig& cfg)
{
    cfg.validate();
    const double log_b = cfg.levels < 2 ? 0.0 : std::log(cfg.growth_factor());
    std::vector<GridLevelSpec> specs(cfg.levels);
    for (int l = 0; l < cfg.levels; ++l) {
        GridLevelSpec& s = specs[l];
        s.level = l;
        // Small epsilon keeps e.g. 16 * exp(ln 2) from flooring to 31.
        s.resolution = static_cast<std::uint32_t>(
            std::floor(double(cfg.n_min) * std::exp(double(l) * log_b) + 1e-6));
        std::uint64_t vertices = 1;
        for (int i = 0; i < cfg.dims; ++i)
            vertices *= std::uint64_t(s.resolution) + 1;
        s.dense = vertices <= cfg.table_size;
        s.table_len = s.dense ? static_cast<std::uint32_t>(vertices) : cfg.table_size;
    }
    return specs;
}

// Spatial hash of an integer lattice point. Per-dimension products wrap in
// unsigned 32-bit arithmetic; T must be a power of two.
inline std::uint32_t spatial_hash(const std::uint32_t* coords, int dims, std::uint32_t table_size)
{
    static constexpr std::uint32_t kPrimes[3] = { 1u, 2654435761u, 805459861u };
    std::uint32_t h = 0;
    for (int i = 0; i < dims; ++i)
        h ^= coords[i] * kPrimes[i];
    return h & (table_size - 1);
}

// Dense levels use a bijective row-major index (first coordinate fastest);
// hashed levels fall through to spatial_hash. Callers clamp coords to
// [0, N_l] before indexing dense levels.
inline std::uint32_t grid_vertex_index(const GridLevelSpec& spec, const std::uint32_t* coords,
                                       int dims, std::uint32_t table_size)
{
    if (!spec.dense)
        return spatial_hash(coords, dims, table_size);
    const std::uint32_t stride = spec.resolution + 1;
    std::uint32_t idx = coords[dims - 1];
    for (int i = dims - 2; i >= 0; --i)
        idx = idx * stride + coords[i];
    return idx;
}

template <typename Scalar>
Scalar smoothstep1(Scalar x)
{
    return x * x * (Scalar(3) - Scalar(2) * x);
}

// Fills the 2^d corner weights for a fractional position within a voxel.
// Corner c uses the high side along dimension i iff bit i of c is set.
template <typename Scalar>
void interpolation_weights(const Scalar* frac, int dims, Interpolation mode, Scalar* weights)
{
    Scalar t[3];
    for (int i = 0; i < dims; ++i)
        t[i] = mode == Interpolation::Smoothstep ? smoothstep1(frac[i]) : frac[i];
    const int corners = 1 << dims;
    for (int c = 0; c < corners; ++c) {
        Scalar w = Scalar(1);
        for (int i = 0; i < dims; ++i)
            w *= (c >> i & 1) ? t[i] : Scalar(1) - t[i];
        weights[c] = w;
    }
}

// Trainable per-level feature arrays plus matching gradient accumulators.
// Each level stores a features x table_len matrix so one row lookup is a
// contiguous column.
template <typename Scalar>
struct FeatureTables {
    HashEncodingConfig cfg;
    std::vector<GridLevelSpec> levels;
    std::vector<MatX<Scalar>> values;
    std::vector<MatX<Scalar>> grads;

    FeatureTables() = default;

    explicit FeatureTables(const HashEncodingConfig& config)
        : cfg(config), levels(level_resolutions(config))
    {
        values.reserve(levels.size());
        grads.reserve(levels.size());
        for (const GridLevelSpec& s : levels) {
            values.emplace_back(MatX<Scalar>::Zero(cfg.features, s.table_len));
            grads.emplace_back(MatX<Scalar>::Zero(cfg.features, s.table_len));
        }
    }

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

// Everything the backward pass needs: per point and level, the 2^d touched
// rows and their blend weights. Row-major layout: (level, point, corner).
template <typename Scalar>
struct EncodeCache {
    int batch = 0;
    int corners = 0;
    int levels = 0;
    std::vector<std::uint32_t> rows; // levels * batch * corners
    std::vector<Scalar> weights;     // same shape

    std::size_t offset(int level, int point) const
    {
        return (std::size_t(level) * batch + point) * corners;
    }
};

namespace detail {

// Inputs are clamped just below 1 so the ceil corner stays on the grid; in
// smoothstep mode the half-voxel level offset is folded in before clamping.
template <typename Scalar>
inline void voxel_of(Scalar x, std::uint32_t resolution, bool offset_half,
                     std::uint32_t& corner, Scalar& frac)
{
    const Scalar n = Scalar(resolution);
    Scalar p = std::min(std::max(x, Scalar(0)), Scalar(1) - Scalar(0x1p-20)) * n;
    if (offset_half)
        p = std::min(p + Scalar(0.5), n * (Scalar(1) - Scalar(0x1p-20)));
    Scalar f = std::floor(p);
    corner = static_cast<std::uint32_t>(f);
    frac = p - f;
}

} // namespace detail

// Forward pass of the multiresolution grid encoding. X is dims x batch in
// [0,1]^d; Y comes back (levels*features) x batch with level slices in
// order. The cache records the touched rows and weights for backward.
template <typename Scalar>
void encode_forward(const FeatureTables<Scalar>& tables, const MatX<Scalar>& X,
                    MatX<Scalar>& Y, EncodeCache<Scalar>& cache)
{
    const HashEncodingConfig& cfg = tables.cfg;
    if (X.rows() != cfg.dims)
        throw std::invalid_argument("encode_forward: input dimensionality mismatch");
    if (!X.allFinite())
        throw std::invalid_argument("encode_forward: non-finite input");
    if ((X.array() < Scalar(-1e-6)).any() || (X.array() > Scalar(1) + Scalar(1e-6)).any())
        throw std::invalid_argument("encode_forward: input outside [0,1]^d");

    const int batch = static_cast<int>(X.cols());
    const int d = cfg.dims;
    const int F = cfg.features;
    const int n_corners = 1 << d;
    const bool smooth = cfg.interpolation == Interpolation::Smoothstep;

    Y.resize(cfg.output_width(), batch);
    cache.batch = batch;
    cache.corners = n_corners;
    cache.levels = cfg.levels;
    cache.rows.resize(std::size_t(cfg.levels) * batch * n_corners);
    cache.weights.resize(cache.rows.size());

    // Level-by-level over the whole batch keeps each table hot in cache.
    for (int l = 0; l < cfg.levels; ++l) {
        const GridLevelSpec& spec = tables.levels[l];
        const MatX<Scalar>& table = tables.values[l];
#pragma omp parallel for schedule(static)
        for (int p = 0; p < batch; ++p) {
            std::uint32_t base[3];
            Scalar frac[3];
            for (int i = 0; i < d; ++i)
                detail::voxel_of(X(i, p), spec.resolution, smooth, base[i], frac[i]);

            Scalar w[8];
            interpolation_weights(frac, d, cfg.interpolation, w);

            const std::size_t off = cache.offset(l, p);
            auto out = Y.col(p).segment(l * F, F);
            out.setZero();
            for (int c = 0; c < n_corners; ++c) {
                std::uint32_t corner[3];
                for (int i = 0; i < d; ++i)
                    corner[i] = base[i] + ((c >> i) & 1u);
                const std::uint32_t row = grid_vertex_index(spec, corner, d, cfg.table_size);
                cache.rows[off + c] = row;
                cache.weights[off + c] = w[c];
                out += w[c] * table.col(row);
            }
        }
    }
}

// Accumulates dLoss/dTable into the gradient arrays. Contributions from
// samples that alias the same row sum; no gradient w.r.t. the input is
// produced. Single-threaded so accumulation order is fixed.
template <typename Scalar>
void encode_backward(FeatureTables<Scalar>& tables, const EncodeCache<Scalar>& cache,
                     const MatX<Scalar>& dY)
{
    const HashEncodingConfig& cfg = tables.cfg;
    if (dY.rows() != cfg.output_width() || dY.cols() != cache.batch || cache.levels != cfg.levels)
        throw std::invalid_argument("encode_backward: gradient shape does not match cache");

    const int F = cfg.features;
    for (int l = 0; l < cfg.levels; ++l) {
        MatX<Scalar>& grad = tables.grads[l];
        for (int p = 0; p < cache.batch; ++p) {
            const auto g = dY.col(p).segment(l * F, F);
            const std::size_t off = cache.offset(l, p);
            for (int c = 0; c < cache.corners; ++c)
                grad.col(cache.rows[off + c]) += cache.weights[off + c] * g;
        }
    }
}

} // namespace nf
