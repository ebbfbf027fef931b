#include "nf/model.hpp"

#include <stdexcept>

namespace nf {

void FieldModel::attach_octree(const SurfaceOctree& octree, int start_level, int features)
{
    octree_tables = OctreeFeatureTables<float>(octree, start_level, features);
}

int FieldModel::encoded_width() const
{
    switch (encoder) {
    case EncoderKind::Hash: return hash_cfg.output_width();
    case EncoderKind::Frequency: return frequency_output_width(hash_cfg.dims, n_frequencies);
    case EncoderKind::Octree: return octree_tables.output_width();
    case EncoderKind::None: return hash_cfg.dims;
    }
    return 0;
}

void FieldModel::init(std::uint64_t seed)
{
    if (encoder == EncoderKind::Hash) {
        tables = FeatureTables<float>(hash_cfg);
        tables.init_uniform(seed);
    } else if (encoder == EncoderKind::Octree) {
        if (!octree_tables.octree)
            throw std::logic_error("FieldModel::init: attach_octree first");
        octree_tables.init_uniform(seed);
    }
    mlp_cfg.input_width = encoded_width();
    mlp = glorot_init<float>(mlp_cfg, seed + 1);
    mlp_grads_ = make_grads(mlp);
    adam_.init(param_groups());
}

std::size_t FieldModel::parameter_count() const
{
    std::size_t n = mlp_cfg.parameter_count();
    if (encoder == EncoderKind::Hash)
        n += tables.parameter_count();
    else if (encoder == EncoderKind::Octree)
        n += octree_tables.parameter_count();
    return n;
}

std::vector<ParamGroup<float>> FieldModel::param_groups()
{
    std::vector<ParamGroup<float>> groups(3);
    groups[0].name = "tables";
    groups[0].flags = { /*apply_l2=*/false, /*skip_zero_grad=*/true };
    if (encoder == EncoderKind::Hash) {
        for (std::size_t l = 0; l < tables.values.size(); ++l)
            groups[0].spans.push_back({ tables.values[l].data(), tables.grads[l].data(),
                                        std::size_t(tables.values[l].size()) });
    } else if (encoder == EncoderKind::Octree) {
        for (std::size_t l = 0; l < octree_tables.values.size(); ++l)
            groups[0].spans.push_back({ octree_tables.values[l].data(),
                                        octree_tables.grads[l].data(),
                                        std::size_t(octree_tables.values[l].size()) });
    }
    groups[1].name = "mlp_weights";
    groups[1].flags = { /*apply_l2=*/true, /*skip_zero_grad=*/false };
    groups[2].name = "mlp_biases";
    groups[2].flags = { /*apply_l2=*/false, /*skip_zero_grad=*/false };
    if (mlp_grads_.weights.size() != mlp.weights.size())
        mlp_grads_ = make_grads(mlp);
    for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
        groups[1].spans.push_back({ mlp.weights[k].data(), mlp_grads_.weights[k].data(),
                                    std::size_t(mlp.weights[k].size()) });
        groups[2].spans.push_back({ mlp.biases[k].data(), mlp_grads_.biases[k].data(),
                                    std::size_t(mlp.biases[k].size()) });
    }
    return groups;
}

void FieldModel::encode(const MatX<float>& X, MatX<float>& Y, EncodeCache<float>* cache,
                        OctreeEncodeCache<float>* ocache) const
{
    switch (encoder) {
    case EncoderKind::Hash: {
        EncodeCache<float> local;
        encode_forward(tables, X, Y, cache ? *cache : local);
        break;
    }
    case EncoderKind::Frequency:
        frequency_encode(X, n_frequencies, Y);
        break;
    case EncoderKind::Octree: {
        OctreeEncodeCache<float> local;
        octree_encode_forward(octree_tables, X, Y, ocache ? *ocache : local);
        break;
    }
    case EncoderKind::None:
        Y = X;
        break;
    }
}

MatX<float> FieldModel::evaluate(const MatX<float>& X) const
{
    MatX<float> Y, out;
    encode(X, Y, nullptr, nullptr);
    MlpCache<float> cache;
    mlp_forward(mlp, Y, out, cache);
    return out;
}

float FieldModel::train_step(const MatX<float>& X, const MatX<float>& target, LossKind loss,
                             std::int64_t step)
{
    // Models restored from a checkpoint have no gradient buffers yet.
    if (mlp_grads_.weights.size() != mlp.weights.size())
        mlp_grads_ = make_grads(mlp);

    MatX<float> Y, pred, dPred, dY;
    EncodeCache<float> cache;
    OctreeEncodeCache<float> ocache;
    encode(X, Y, &cache, &ocache);

    MlpCache<float> mlp_cache;
    mlp_forward(mlp, Y, pred, mlp_cache);

    const float loss_value = loss_with_grad(loss, pred, target, dPred);

    mlp_backward(mlp, mlp_cache, dPred, mlp_grads_, dY);
    if (encoder == EncoderKind::Hash)
        encode_backward(tables, cache, dY);
    else if (encoder == EncoderKind::Octree)
        octree_encode_backward(octree_tables, ocache, dY);

    auto groups = param_groups();
    const float lr_now = float(lr_at(schedule, hyper.lr, step));
    adam_step(adam_, groups, hyper, lr_now);
    return loss_value;
}

float loss_with_grad(LossKind kind, const MatX<float>& pred, const MatX<float>& target,
                     MatX<float>& dPred)
{
    switch (kind) {
    case LossKind::L2: return l2_loss(pred, target, dPred);
    case LossKind::Mape: return mape_loss(pred, target, dPred);
    case LossKind::RelativeL2: return relative_l2_loss(pred, target, dPred);
    }
    throw std::logic_error("loss_with_grad: unknown loss");
}

} // namespace nf
