#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nf/grid.hpp"

namespace nf {

struct AdamHyper {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-15;
    double l2 = 1e-6; // applied only to groups flagged apply_l2

    void validate() const
    {
        if (!(lr > 0) || !(eps > 0) || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw std::invalid_argument("AdamHyper: invalid hyperparameters");
    }
};

struct GroupFlags {
    bool apply_l2 = false;
    bool skip_zero_grad = false;
};

// A parameter group is a named set of flat spans over parameter storage and
// the matching gradient accumulators, all sharing one update policy.
template <typename Scalar>
struct ParamSpan {
    Scalar* params = nullptr;
    Scalar* grads = nullptr;
    std::size_t size = 0;
};

template <typename Scalar>
struct ParamGroup {
    std::string name;
    GroupFlags flags;
    std::vector<ParamSpan<Scalar>> spans;

    std::size_t total_size() const
    {
        std::size_t n = 0;
        for (const auto& s : spans)
            n += s.size;
        return n;
    }
};

template <typename Scalar>
struct AdamState {
    std::uint64_t step = 0;
    std::vector<VecX<Scalar>> m;
    std::vector<VecX<Scalar>> v;

    template <typename Groups>
    void init(const Groups& groups)
    {
        step = 0;
        m.clear();
        v.clear();
        for (const auto& g : groups) {
            m.emplace_back(VecX<Scalar>::Zero(g.total_size()));
            v.emplace_back(VecX<Scalar>::Zero(g.total_size()));
        }
    }
};

// One Adam step with bias correction over all groups. Entries in groups
// flagged skip_zero_grad whose gradient is bitwise 0 are left untouched
// (parameter, m and v alike). Gradient accumulators are zeroed afterward.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, std::vector<ParamGroup<Scalar>>& groups,
               const AdamHyper& hyper, Scalar lr_now)
{
    hyper.validate();
    if (state.m.size() != groups.size())
        throw std::invalid_argument("adam_step: state does not match group count");

    for (const auto& g : groups)
        for (const auto& s : g.spans)
            for (std::size_t i = 0; i < s.size; ++i)
                if (!std::isfinite(s.grads[i]))
                    throw std::runtime_error("adam_step: non-finite gradient in group '" + g.name + "'");

    state.step += 1;
    const Scalar b1 = Scalar(hyper.beta1);
    const Scalar b2 = Scalar(hyper.beta2);
    const Scalar bc1 = Scalar(1) - std::pow(b1, Scalar(state.step));
    const Scalar bc2 = Scalar(1) - std::pow(b2, Scalar(state.step));
    const Scalar eps = Scalar(hyper.eps);

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        ParamGroup<Scalar>& group = groups[gi];
        Scalar* m = state.m[gi].data();
        Scalar* v = state.v[gi].data();
        std::size_t base = 0;
        for (const auto& span : group.spans) {
            for (std::size_t i = 0; i < span.size; ++i) {
                Scalar g = span.grads[i];
                if (group.flags.skip_zero_grad && g == Scalar(0))
                    continue;
                if (group.flags.apply_l2)
                    g += Scalar(hyper.l2) * span.params[i];
                const std::size_t j = base + i;
                m[j] = b1 * m[j] + (Scalar(1) - b1) * g;
                v[j] = b2 * v[j] + (Scalar(1) - b2) * g * g;
                span.params[i] -= lr_now * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
            }
            base += span.size;
        }
        for (const auto& span : group.spans)
            for (std::size_t i = 0; i < span.size; ++i)
                span.grads[i] = Scalar(0);
    }
}

// Step-decay schedule: base_lr * factor^(number of milestones <= step).
struct LrSchedule {
    std::vector<std::int64_t> milestones;
    double factor = 0.33;

    void validate() const
    {
        if (!(factor > 0) || factor > 1)
            throw std::invalid_argument("LrSchedule: factor must be in (0, 1]");
        for (std::size_t i = 1; i < milestones.size(); ++i)
            if (milestones[i] <= milestones[i - 1])
                throw std::invalid_argument("LrSchedule: milestones must be strictly increasing");
    }
};

inline double lr_at(const LrSchedule& schedule, double base_lr, std::int64_t step)
{
    int hits = 0;
    for (std::int64_t mi : schedule.milestones)
        if (mi <= step)
            ++hits;
    return base_lr * std::pow(schedule.factor, hits);
}

// Default desk-scale placement: first decay at 65% of the run, then every
// further 30%.
inline LrSchedule default_schedule(std::int64_t total_steps, double factor = 0.33)
{
    LrSchedule s;
    s.factor = factor;
    std::int64_t next = static_cast<std::int64_t>(0.65 * double(total_steps));
    const std::int64_t stride = static_cast<std::int64_t>(0.30 * double(total_steps));
    while (next < total_steps && stride > 0) {
        s.milestones.push_back(next);
        next += stride;
    }
    return s;
}

} // namespace nf
