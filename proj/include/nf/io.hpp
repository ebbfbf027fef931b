#pragma once

#include <string>
#include <vector>

#include "nf/grid.hpp"
#include "nf/model.hpp"

namespace nf {

// RGB image with unit-range floats; pixel (x, y) is column y*width + x.
struct Image {
    int width = 0;
    int height = 0;
    MatX<float> rgb; // 3 x (width*height)

    Eigen::Vector3f pixel(int x, int y) const { return rgb.col(std::size_t(y) * width + x); }
};

// PNG (8-bit, any color type) or binary PPM, by file extension.
Image load_image(const std::string& path);
void save_image(const Image& image, const std::string& path);

struct TrainReportRow {
    std::int64_t step = 0;
    double time_s = 0;
    double loss = 0;
    double metric = 0;
    double lr = 0;
};

struct TrainReport {
    std::vector<TrainReportRow> rows;
};

void write_report_csv(const TrainReport& report, const std::string& path);
TrainReport read_report_csv(const std::string& path);

// Binary checkpoint: little-endian sections tagged HGE1 (feature tables),
// OCT1 (octree feature tables), MLP1 (network parameters) and ADM1
// (optimizer state). Loading an octree checkpoint requires the model to
// have the octree attached already; the structure is rebuilt from the mesh.
void save_checkpoint(const FieldModel& model, const std::string& path);
void load_checkpoint(FieldModel& model, const std::string& path);

} // namespace nf
