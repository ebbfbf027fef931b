#include "nf/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace nf {

void RunConfig::resolve_defaults()
{
    if (batch_size == 0)
        batch_size = task == "sdf" ? (1 << 13) : (1 << 14);
    if (lr == 0)
        lr = task == "sdf" ? 1e-4 : 1e-2;
    if (n_max == 0 && task == "sdf")
        n_max = 2048;
    if (loss.empty())
        loss = task == "sdf" ? "mape" : "l2";
}

void RunConfig::validate() const
{
    auto one_of = [](const std::string& v, std::initializer_list<const char*> allowed,
                     const std::string& key) {
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* a) { return v == a; }))
            throw std::invalid_argument("config: invalid value '" + v + "' for key '" + key + "'");
    };
    one_of(task, { "image", "sdf" }, "task");
    one_of(encoder, { "hash", "frequency", "octree", "none" }, "encoder");
    one_of(interpolation, { "linear", "smoothstep" }, "interpolation");
    if (!loss.empty())
        one_of(loss, { "l2", "mape", "relative-l2" }, "loss");
    if (table_size < 1 || (table_size & (table_size - 1)) != 0)
        throw std::invalid_argument("config: table_size must be a power of two");
    if (steps < 0 || n_levels < 1 || n_features < 1 || n_min < 1)
        throw std::invalid_argument("config: invalid hyperparameter");
    if (input.empty())
        throw std::invalid_argument("config: missing input path (key 'input')");
}

EncoderKind RunConfig::encoder_kind() const
{
    if (encoder == "hash")
        return EncoderKind::Hash;
    if (encoder == "frequency")
        return EncoderKind::Frequency;
    if (encoder == "octree")
        return EncoderKind::Octree;
    return EncoderKind::None;
}

Interpolation RunConfig::interpolation_mode() const
{
    return interpolation == "smoothstep" ? Interpolation::Smoothstep : Interpolation::Linear;
}

LossKind RunConfig::loss_kind() const
{
    if (loss == "l2")
        return LossKind::L2;
    if (loss == "relative-l2")
        return LossKind::RelativeL2;
    return LossKind::Mape;
}

std::map<std::string, std::string> parse_toml_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open file: " + path);
    std::map<std::string, std::string> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
            throw std::invalid_argument("config: tables are not supported (line "
                                        + std::to_string(line_no) + ")");
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected 'key = value' at line "
                                        + std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        values[key] = value;
    }
    return values;
}

namespace {

template <typename T>
T parse_number(const std::string& value, const std::string& key)
{
    std::istringstream ss(value);
    T out;
    ss >> out;
    if (ss.fail() || !ss.eof())
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + value
                                    + "'");
    return out;
}

} // namespace

void apply_config_values(const std::map<std::string, std::string>& values, RunConfig& cfg)
{
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        { "task", [&](const std::string& k, const std::string& v) { (void)k; cfg.task = v; } },
        { "encoder", [&](const std::string&, const std::string& v) { cfg.encoder = v; } },
        { "input", [&](const std::string&, const std::string& v) { cfg.input = v; } },
        { "output", [&](const std::string&, const std::string& v) { cfg.output = v; } },
        { "seed", [&](const std::string& k, const std::string& v) { cfg.seed = parse_number<std::uint64_t>(v, k); } },
        { "steps", [&](const std::string& k, const std::string& v) { cfg.steps = parse_number<std::int64_t>(v, k); } },
        { "batch_size", [&](const std::string& k, const std::string& v) { cfg.batch_size = parse_number<int>(v, k); } },
        { "log_interval", [&](const std::string& k, const std::string& v) { cfg.log_interval = parse_number<std::int64_t>(v, k); } },
        { "threads", [&](const std::string& k, const std::string& v) { cfg.threads = parse_number<int>(v, k); } },
        { "n_levels", [&](const std::string& k, const std::string& v) { cfg.n_levels = parse_number<int>(v, k); } },
        { "table_size", [&](const std::string& k, const std::string& v) { cfg.table_size = parse_number<std::int64_t>(v, k); } },
        { "n_features", [&](const std::string& k, const std::string& v) { cfg.n_features = parse_number<int>(v, k); } },
        { "n_min", [&](const std::string& k, const std::string& v) { cfg.n_min = parse_number<int>(v, k); } },
        { "n_max", [&](const std::string& k, const std::string& v) { cfg.n_max = parse_number<int>(v, k); } },
        { "interpolation", [&](const std::string&, const std::string& v) { cfg.interpolation = v; } },
        { "hidden_layers", [&](const std::string& k, const std::string& v) { cfg.hidden_layers = parse_number<int>(v, k); } },
        { "hidden_width", [&](const std::string& k, const std::string& v) { cfg.hidden_width = parse_number<int>(v, k); } },
        { "n_frequencies", [&](const std::string& k, const std::string& v) { cfg.n_frequencies = parse_number<int>(v, k); } },
        { "lr", [&](const std::string& k, const std::string& v) { cfg.lr = parse_number<double>(v, k); } },
        { "lr_decay", [&](const std::string& k, const std::string& v) { cfg.lr_decay = parse_number<double>(v, k); } },
        { "loss", [&](const std::string&, const std::string& v) { cfg.loss = v; } },
        { "perturb_std", [&](const std::string& k, const std::string& v) { cfg.perturb_std = parse_number<double>(v, k); } },
        { "iou_points", [&](const std::string& k, const std::string& v) { cfg.iou_points = parse_number<std::int64_t>(v, k); } },
        { "octree_max_level", [&](const std::string& k, const std::string& v) { cfg.octree_max_level = parse_number<int>(v, k); } },
        { "render_width", [&](const std::string& k, const std::string& v) { cfg.render_width = parse_number<int>(v, k); } },
        { "render_height", [&](const std::string& k, const std::string& v) { cfg.render_height = parse_number<int>(v, k); } },
    };
    for (const auto& [key, value] : values) {
        const auto it = setters.find(key);
        if (it == setters.end())
            throw std::invalid_argument("config: unknown key '" + key + "'");
        it->second(key, value);
    }
}

void write_config(const RunConfig& cfg, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write config: " + path);
    out << "task = \"" << cfg.task << "\"\n";
    out << "encoder = \"" << cfg.encoder << "\"\n";
    out << "input = \"" << cfg.input << "\"\n";
    out << "output = \"" << cfg.output << "\"\n";
    out << "seed = " << cfg.seed << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "log_interval = " << cfg.log_interval << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "n_levels = " << cfg.n_levels << "\n";
    out << "table_size = " << cfg.table_size << "\n";
    out << "n_features = " << cfg.n_features << "\n";
    out << "n_min = " << cfg.n_min << "\n";
    out << "n_max = " << cfg.n_max << "\n";
    out << "interpolation = \"" << cfg.interpolation << "\"\n";
    out << "hidden_layers = " << cfg.hidden_layers << "\n";
    out << "hidden_width = " << cfg.hidden_width << "\n";
    out << "n_frequencies = " << cfg.n_frequencies << "\n";
    out.precision(17);
    out << "lr = " << cfg.lr << "\n";
    out << "lr_decay = " << cfg.lr_decay << "\n";
    out << "loss = \"" << cfg.loss << "\"\n";
    out << "perturb_std = " << cfg.perturb_std << "\n";
    out << "iou_points = " << cfg.iou_points << "\n";
    out << "octree_max_level = " << cfg.octree_max_level << "\n";
    out << "render_width = " << cfg.render_width << "\n";
    out << "render_height = " << cfg.render_height << "\n";
}

} // namespace nf
