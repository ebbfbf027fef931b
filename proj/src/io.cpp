#include "nf/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace nf {

namespace {

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Image load_ppm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open image: " + path);
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255)
        throw std::runtime_error("unsupported PPM (need binary P6, maxval 255): " + path);
    in.get();
    std::vector<unsigned char> data(std::size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
    if (!in)
        throw std::runtime_error("truncated PPM: " + path);
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(3, std::size_t(w) * h);
    for (std::size_t i = 0; i < std::size_t(w) * h; ++i)
        for (int c = 0; c < 3; ++c)
            img.rgb(c, i) = float(data[i * 3 + c]) / 255.0f;
    return img;
}

void save_ppm(const Image& img, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write image: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> data(std::size_t(img.width) * img.height * 3);
    for (std::size_t i = 0; i < std::size_t(img.width) * img.height; ++i)
        for (int c = 0; c < 3; ++c) {
            const float v = std::min(std::max(img.rgb(c, i), 0.0f), 1.0f);
            data[i * 3 + c] = static_cast<unsigned char>(v * 255.0f + 0.5f);
        }
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
}

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};

Image load_png(const std::string& path)
{
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw std::runtime_error("cannot open image: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("PNG read failure: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    std::vector<unsigned char> data(std::size_t(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = data.data() + std::size_t(y) * w * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(3, std::size_t(w) * h);
    for (std::size_t i = 0; i < std::size_t(w) * h; ++i)
        for (int c = 0; c < 3; ++c)
            img.rgb(c, i) = float(data[i * 3 + c]) / 255.0f;
    return img;
}

void save_png(const Image& img, const std::string& path)
{
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw std::runtime_error("cannot write image: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failure: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(std::size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::min(std::max(img.rgb(c, std::size_t(y) * img.width + x), 0.0f), 1.0f);
                row[std::size_t(x) * 3 + c] = static_cast<unsigned char>(v * 255.0f + 0.5f);
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_tag(std::ostream& out, const char tag[4]) { out.write(tag, 4); }

void expect_tag(std::istream& in, const char tag[4], const std::string& what)
{
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, tag, 4) != 0)
        throw std::runtime_error("checkpoint: missing " + what + " section");
}

template <typename T>
void write_pod(std::ostream& out, T value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw std::runtime_error("checkpoint: truncated file");
    return value;
}

void write_floats(std::ostream& out, const float* data, std::size_t n)
{
    out.write(reinterpret_cast<const char*>(data), std::streamsize(n * sizeof(float)));
}

void read_floats(std::istream& in, float* data, std::size_t n)
{
    in.read(reinterpret_cast<char*>(data), std::streamsize(n * sizeof(float)));
    if (!in)
        throw std::runtime_error("checkpoint: truncated float block");
}

} // namespace

Image load_image(const std::string& path)
{
    if (ends_with(path, ".ppm"))
        return load_ppm(path);
    return load_png(path);
}

void save_image(const Image& image, const std::string& path)
{
    if (ends_with(path, ".ppm"))
        save_ppm(image, path);
    else
        save_png(image, path);
}

void write_report_csv(const TrainReport& report, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write report: " + path);
    out << "step,time_s,loss,metric,lr\n";
    out.precision(10);
    for (const auto& row : report.rows)
        out << row.step << ',' << row.time_s << ',' << row.loss << ',' << row.metric << ','
            << row.lr << '\n';
}

TrainReport read_report_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read report: " + path);
    TrainReport report;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        TrainReportRow row;
        char comma;
        std::istringstream ss(line);
        ss >> row.step >> comma >> row.time_s >> comma >> row.loss >> comma >> row.metric
            >> comma >> row.lr;
        report.rows.push_back(row);
    }
    return report;
}

void save_checkpoint(const FieldModel& model, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write checkpoint: " + path);
    write_tag(out, "NFC1");
    write_pod<std::uint32_t>(out, std::uint32_t(model.encoder));
    write_pod<std::uint32_t>(out, std::uint32_t(model.n_frequencies));

    if (model.encoder == EncoderKind::Hash) {
        write_tag(out, "HGE1");
        const auto& cfg = model.hash_cfg;
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.dims));
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.levels));
        write_pod<std::uint32_t>(out, cfg.table_size);
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.features));
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.n_min));
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.n_max));
        write_pod<std::uint32_t>(out, std::uint32_t(cfg.interpolation));
        for (const auto& level : model.tables.values) {
            write_pod<std::uint64_t>(out, std::uint64_t(level.cols()));
            write_floats(out, level.data(), std::size_t(level.size()));
        }
    } else if (model.encoder == EncoderKind::Octree) {
        write_tag(out, "OCT1");
        write_pod<std::uint32_t>(out, std::uint32_t(model.octree_tables.start_level));
        write_pod<std::uint32_t>(out, std::uint32_t(model.octree_tables.level_count()));
        write_pod<std::uint32_t>(out, std::uint32_t(model.octree_tables.features));
        for (const auto& level : model.octree_tables.values) {
            write_pod<std::uint64_t>(out, std::uint64_t(level.cols()));
            write_floats(out, level.data(), std::size_t(level.size()));
        }
    }

    write_tag(out, "MLP1");
    const auto& mcfg = model.mlp_cfg;
    write_pod<std::uint32_t>(out, std::uint32_t(mcfg.input_width));
    write_pod<std::uint32_t>(out, std::uint32_t(mcfg.hidden_layers));
    write_pod<std::uint32_t>(out, std::uint32_t(mcfg.hidden_width));
    write_pod<std::uint32_t>(out, std::uint32_t(mcfg.output_width));
    write_pod<std::uint32_t>(out, std::uint32_t(mcfg.output_activation));
    for (std::size_t k = 0; k < model.mlp.weights.size(); ++k) {
        write_floats(out, model.mlp.weights[k].data(), std::size_t(model.mlp.weights[k].size()));
        write_floats(out, model.mlp.biases[k].data(), std::size_t(model.mlp.biases[k].size()));
    }

    write_tag(out, "ADM1");
    const auto& adam = model.adam_state();
    write_pod<std::uint64_t>(out, adam.step);
    write_pod<std::uint32_t>(out, std::uint32_t(adam.m.size()));
    for (std::size_t g = 0; g < adam.m.size(); ++g) {
        write_pod<std::uint64_t>(out, std::uint64_t(adam.m[g].size()));
        write_floats(out, adam.m[g].data(), std::size_t(adam.m[g].size()));
        write_floats(out, adam.v[g].data(), std::size_t(adam.v[g].size()));
    }
}

void load_checkpoint(FieldModel& model, const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read checkpoint: " + path);
    expect_tag(in, "NFC1", "file header");
    model.encoder = EncoderKind(read_pod<std::uint32_t>(in));
    model.n_frequencies = int(read_pod<std::uint32_t>(in));

    if (model.encoder == EncoderKind::Hash) {
        expect_tag(in, "HGE1", "feature table");
        HashEncodingConfig cfg;
        cfg.dims = int(read_pod<std::uint32_t>(in));
        cfg.levels = int(read_pod<std::uint32_t>(in));
        cfg.table_size = read_pod<std::uint32_t>(in);
        cfg.features = int(read_pod<std::uint32_t>(in));
        cfg.n_min = int(read_pod<std::uint32_t>(in));
        cfg.n_max = int(read_pod<std::uint32_t>(in));
        cfg.interpolation = Interpolation(read_pod<std::uint32_t>(in));
        model.hash_cfg = cfg;
        model.tables = FeatureTables<float>(cfg);
        for (auto& level : model.tables.values) {
            const auto len = read_pod<std::uint64_t>(in);
            if (len != std::uint64_t(level.cols()))
                throw std::runtime_error("checkpoint: level length mismatch");
            read_floats(in, level.data(), std::size_t(level.size()));
        }
    } else if (model.encoder == EncoderKind::Octree) {
        expect_tag(in, "OCT1", "octree table");
        const auto start = int(read_pod<std::uint32_t>(in));
        const auto levels = int(read_pod<std::uint32_t>(in));
        const auto features = int(read_pod<std::uint32_t>(in));
        if (!model.octree_tables.octree || model.octree_tables.start_level != start
            || model.octree_tables.level_count() != levels
            || model.octree_tables.features != features)
            throw std::runtime_error("checkpoint: octree structure mismatch (attach the octree "
                                     "built from the same mesh first)");
        for (auto& level : model.octree_tables.values) {
            const auto len = read_pod<std::uint64_t>(in);
            if (len != std::uint64_t(level.cols()))
                throw std::runtime_error("checkpoint: octree level length mismatch");
            read_floats(in, level.data(), std::size_t(level.size()));
        }
    }

    expect_tag(in, "MLP1", "MLP parameters");
    MlpConfig mcfg;
    mcfg.input_width = int(read_pod<std::uint32_t>(in));
    mcfg.hidden_layers = int(read_pod<std::uint32_t>(in));
    mcfg.hidden_width = int(read_pod<std::uint32_t>(in));
    mcfg.output_width = int(read_pod<std::uint32_t>(in));
    mcfg.output_activation = OutputActivation(read_pod<std::uint32_t>(in));
    model.mlp_cfg = mcfg;
    model.mlp = glorot_init<float>(mcfg, 0);
    for (std::size_t k = 0; k < model.mlp.weights.size(); ++k) {
        read_floats(in, model.mlp.weights[k].data(), std::size_t(model.mlp.weights[k].size()));
        read_floats(in, model.mlp.biases[k].data(), std::size_t(model.mlp.biases[k].size()));
    }

    expect_tag(in, "ADM1", "optimizer state");
    auto& adam = model.adam_state();
    adam.step = read_pod<std::uint64_t>(in);
    const auto n_groups = read_pod<std::uint32_t>(in);
    adam.m.resize(n_groups);
    adam.v.resize(n_groups);
    for (std::uint32_t g = 0; g < n_groups; ++g) {
        const auto len = read_pod<std::uint64_t>(in);
        adam.m[g].resize(Eigen::Index(len));
        adam.v[g].resize(Eigen::Index(len));
        read_floats(in, adam.m[g].data(), std::size_t(len));
        read_floats(in, adam.v[g].data(), std::size_t(len));
    }
}

} // namespace nf
