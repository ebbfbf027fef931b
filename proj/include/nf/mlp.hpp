#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nf/grid.hpp"
#include "nf/pcg32.hpp"

namespace nf {

enum class OutputActivation { Linear, Sigmoid };

struct MlpConfig {
    int input_width = 32;
    int hidden_layers = 2;
    int hidden_width = 64;
    int output_width = 3;
    OutputActivation output_activation = OutputActivation::Linear;

    void validate() const
    {
        if (input_width < 1 || output_width < 1 || hidden_width < 1 || hidden_layers < 0)
            throw std::invalid_argument("MlpConfig: widths must be >= 1 and hidden_layers >= 0");
    }

    int layer_count() const { return hidden_layers + 1; }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        int in = input_width;
        for (int k = 0; k < hidden_layers; ++k) {
            n += std::size_t(hidden_width) * in + hidden_width;
            in = hidden_width;
        }
        return n + std::size_t(output_width) * in + output_width;
    }
};

template <typename Scalar>
struct MlpParams {
    MlpConfig cfg;
    std::vector<MatX<Scalar>> weights; // out_width x in_width per layer
    std::vector<VecX<Scalar>> biases;
};

template <typename Scalar>
struct MlpGrads {
    std::vector<MatX<Scalar>> weights;
    std::vector<VecX<Scalar>> biases;

    void zero()
    {
        for (auto& w : weights)
            w.setZero();
        for (auto& b : biases)
            b.setZero();
    }
};

template <typename Scalar>
MlpGrads<Scalar> make_grads(const MlpParams<Scalar>& params)
{
    MlpGrads<Scalar> g;
    for (const auto& w : params.weights)
        g.weights.emplace_back(MatX<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : params.biases)
        g.biases.emplace_back(VecX<Scalar>::Zero(b.size()));
    return g;
}

// Glorot/uniform init: weights on +-sqrt(6/(fan_in+fan_out)), biases zero.
template <typename Scalar>
MlpParams<Scalar> glorot_init(const MlpConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    MlpParams<Scalar> params;
    params.cfg = cfg;
    Pcg32 rng(seed, 0x91u);
    int in = cfg.input_width;
    for (int k = 0; k < cfg.layer_count(); ++k) {
        const int out = k < cfg.hidden_layers ? cfg.hidden_width : cfg.output_width;
        const Scalar bound = std::sqrt(Scalar(6) / Scalar(in + out));
        MatX<Scalar> w(out, in);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = rng.uniform(-bound, bound);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(VecX<Scalar>::Zero(out));
        in = out;
    }
    return params;
}

template <typename Scalar>
struct MlpCache {
    std::vector<MatX<Scalar>> inputs; // input to each layer
    MatX<Scalar> output;              // post output activation
};

// Forward pass over a batch (columns are samples). ReLU on hidden layers,
// configured activation on the output.
template <typename Scalar>
void mlp_forward(const MlpParams<Scalar>& params, const MatX<Scalar>& Y,
                 MatX<Scalar>& out, MlpCache<Scalar>& cache)
{
    if (Y.rows() != params.cfg.input_width)
        throw std::invalid_argument("mlp_forward: input width mismatch");
    const int n_layers = params.cfg.layer_count();
    cache.inputs.assign(1, Y);
    MatX<Scalar> act;
    for (int k = 0; k < n_layers; ++k) {
        act = (params.weights[k] * cache.inputs[k]).colwise() + params.biases[k];
        if (k + 1 < n_layers) {
            act = act.cwiseMax(Scalar(0));
            cache.inputs.push_back(act);
        }
    }
    if (params.cfg.output_activation == OutputActivation::Sigmoid)
        act = (Scalar(1) / (Scalar(1) + (-act.array()).exp())).matrix();
    cache.output = act;
    out = act;
}

// Reverse-mode pass; returns parameter gradients and the gradient with
// respect to the MLP input (chained into the encoding). ReLU subgradient
// at 0 is 0.
template <typename Scalar>
void mlp_backward(const MlpParams<Scalar>& params, const MlpCache<Scalar>& cache,
                  const MatX<Scalar>& dOut, MlpGrads<Scalar>& grads, MatX<Scalar>& dY)
{
    const int n_layers = params.cfg.layer_count();
    if (dOut.rows() != params.cfg.output_width
        || std::size_t(n_layers) != params.weights.size()
        || cache.inputs.size() != std::size_t(n_layers))
        throw std::invalid_argument("mlp_backward: shape mismatch with cache");

    MatX<Scalar> dz;
    if (params.cfg.output_activation == OutputActivation::Sigmoid)
        dz = dOut.cwiseProduct(
            cache.output.cwiseProduct((MatX<Scalar>::Ones(cache.output.rows(), cache.output.cols()) - cache.output)));
    else
        dz = dOut;

    for (int k = n_layers - 1; k >= 0; --k) {
        grads.weights[k] += dz * cache.inputs[k].transpose();
        grads.biases[k] += dz.rowwise().sum();
        MatX<Scalar> da = params.weights[k].transpose() * dz;
        if (k == 0) {
            dY = std::move(da);
        } else {
            // cache.inputs[k] is the ReLU output, so >0 marks active units.
            dz = da.cwiseProduct(
                (cache.inputs[k].array() > Scalar(0)).template cast<Scalar>().matrix());
        }
    }
}

} // namespace nf
