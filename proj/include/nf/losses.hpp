#pragma once

#include <cmath>
#include <stdexcept>

#include "nf/grid.hpp"

namespace nf {

// Mean squared error; gradient 2(pred - target)/count.
template <typename Scalar>
Scalar l2_loss(const MatX<Scalar>& pred, const MatX<Scalar>& target, MatX<Scalar>& dPred)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("l2_loss: shape mismatch");
    const Scalar count = Scalar(pred.size());
    MatX<Scalar> diff = pred - target;
    dPred = (Scalar(2) / count) * diff;
    return diff.squaredNorm() / count;
}

// Mean absolute percentage error with a 0.01-stabilized denominator.
// Subgradient at pred == target is 0.
template <typename Scalar>
Scalar mape_loss(const MatX<Scalar>& pred, const MatX<Scalar>& target, MatX<Scalar>& dPred)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mape_loss: shape mismatch");
    const Scalar count = Scalar(pred.size());
    Scalar loss = 0;
    dPred.resize(pred.rows(), pred.cols());
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const Scalar denom = std::abs(target.data()[i]) + Scalar(0.01);
        const Scalar diff = pred.data()[i] - target.data()[i];
        loss += std::abs(diff) / denom;
        const Scalar sign = diff > 0 ? Scalar(1) : (diff < 0 ? Scalar(-1) : Scalar(0));
        dPred.data()[i] = sign / denom / count;
    }
    return loss / count;
}

// Relative L2: (pred - target)^2 / (pred^2 + 0.01), the denominator treated
// as constant during differentiation.
template <typename Scalar>
Scalar relative_l2_loss(const MatX<Scalar>& pred, const MatX<Scalar>& target, MatX<Scalar>& dPred)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("relative_l2_loss: shape mismatch");
    const Scalar count = Scalar(pred.size());
    Scalar loss = 0;
    dPred.resize(pred.rows(), pred.cols());
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const Scalar denom = pred.data()[i] * pred.data()[i] + Scalar(0.01);
        const Scalar diff = pred.data()[i] - target.data()[i];
        loss += diff * diff / denom;
        dPred.data()[i] = Scalar(2) * diff / denom / count;
    }
    return loss / count;
}

// PSNR in dB for unit-range images; capped at 100 dB when the MSE is 0.
template <typename Scalar>
double psnr(const MatX<Scalar>& a, const MatX<Scalar>& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("psnr: shape mismatch");
    const double mse = (a - b).squaredNorm() / double(a.size());
    if (mse <= 0)
        return 100.0;
    return std::min(100.0, -10.0 * std::log10(mse));
}

} // namespace nf
