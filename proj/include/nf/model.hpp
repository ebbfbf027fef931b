#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nf/adam.hpp"
#include "nf/frequency.hpp"
#include "nf/grid.hpp"
#include "nf/losses.hpp"
#include "nf/mlp.hpp"
#include "nf/octree_encoding.hpp"

namespace nf {

enum class EncoderKind { Hash, Frequency, Octree, None };
enum class LossKind { L2, Mape, RelativeL2 };

// A trainable field: encoder + MLP + Adam state. The encoder selects which
// parameter tables exist; frequency and raw-coordinate encoders have none.
class FieldModel {
public:
    EncoderKind encoder = EncoderKind::Hash;
    HashEncodingConfig hash_cfg;
    int n_frequencies = 10;
    MlpConfig mlp_cfg;
    AdamHyper hyper;
    LrSchedule schedule;

    FeatureTables<float> tables;
    OctreeFeatureTables<float> octree_tables;
    MlpParams<float> mlp;

    // Builds tables and MLP parameters and resets the optimizer. For the
    // octree encoder the caller supplies the prebuilt octree first via
    // attach_octree.
    void init(std::uint64_t seed);

    void attach_octree(const SurfaceOctree& octree, int start_level = 4, int features = 8);

    int encoded_width() const;
    std::size_t parameter_count() const;

    // Pure forward evaluation, X is dims x batch in [0,1]^d.
    MatX<float> evaluate(const MatX<float>& X) const;

    // One training step: forward, loss, backward, Adam update. Returns the
    // batch loss. `step` indexes the learning-rate schedule.
    float train_step(const MatX<float>& X, const MatX<float>& target, LossKind loss,
                     std::int64_t step);

    AdamState<float>& adam_state() { return adam_; }
    const AdamState<float>& adam_state() const { return adam_; }

    std::vector<ParamGroup<float>> param_groups();

private:
    void encode(const MatX<float>& X, MatX<float>& Y, EncodeCache<float>* cache,
                OctreeEncodeCache<float>* ocache) const;

    AdamState<float> adam_;
    MlpGrads<float> mlp_grads_;
};

float loss_with_grad(LossKind kind, const MatX<float>& pred, const MatX<float>& target,
                     MatX<float>& dPred);

} // namespace nf
