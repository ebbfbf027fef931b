#pragma once

#include <map>
#include <string>

#include "nf/model.hpp"

namespace nf {

// Fully resolved run configuration. Defaults mirror the standard
// hyperparameters (L=16, F=2, N_min=16, Adam betas 0.9/0.99, eps 1e-15).
struct RunConfig {
    std::string task = "image";   // image | sdf
    std::string encoder = "hash"; // hash | frequency | octree | none
    std::string input;
    std::string output = "out";
    std::uint64_t seed = 1337;
    std::int64_t steps = 10000;
    int batch_size = 0; // 0: task default (2^14 image, 2^13 sdf)
    std::int64_t log_interval = 1000;
    int threads = 1;

    int n_levels = 16;
    std::int64_t table_size = 1 << 14;
    int n_features = 2;
    int n_min = 16;
    int n_max = 0; // 0: image width/2 or 2048 for SDF
    std::string interpolation = "linear"; // linear | smoothstep

    int hidden_layers = 2;
    int hidden_width = 64;
    int n_frequencies = 10;

    double lr = 0; // 0: task default (1e-2 image, 1e-4 sdf)
    double lr_decay = 0.33;
    std::string loss = ""; // sdf only: mape | l2 | relative-l2 (default mape)
    double perturb_std = -1;
    std::int64_t iou_points = 1 << 20;
    int octree_max_level = 10;

    int render_width = 512;
    int render_height = 512;

    void resolve_defaults();
    void validate() const;

    EncoderKind encoder_kind() const;
    Interpolation interpolation_mode() const;
    LossKind loss_kind() const;
};

// Flat TOML subset: `key = value` lines, `#` comments, quoted strings,
// integers, floats, booleans. Unknown keys are rejected by name.
std::map<std::string, std::string> parse_toml_file(const std::string& path);

// Applies file values onto cfg; throws std::invalid_argument naming the
// offending key on unknown keys or type mismatches.
void apply_config_values(const std::map<std::string, std::string>& values, RunConfig& cfg);

// Writes the resolved config back out (provenance copy in the output dir).
void write_config(const RunConfig& cfg, const std::string& path);

} // namespace nf
