#pragma once

#include <cmath>
#include <stdexcept>

#include "nf/grid.hpp"

namespace nf {

inline int frequency_output_width(int dims, int n_frequencies)
{
    return 2 * n_frequencies * dims;
}

// Axis-aligned sine/cosine encoding with frequencies 2^0 .. 2^{n-1}.
// Output layout per input component: n sines then n cosines.
template <typename Scalar>
void frequency_encode(const MatX<Scalar>& X, int n_frequencies, MatX<Scalar>& Y)
{
    if (n_frequencies < 1)
        throw std::invalid_argument("frequency_encode: n_frequencies must be >= 1");
    const int d = static_cast<int>(X.rows());
    const int batch = static_cast<int>(X.cols());
    Y.resize(frequency_output_width(d, n_frequencies), batch);
    for (int p = 0; p < batch; ++p) {
        for (int i = 0; i < d; ++i) {
            Scalar scaled = X(i, p);
            const int base = i * 2 * n_frequencies;
            for (int k = 0; k < n_frequencies; ++k) {
                Y(base + k, p) = std::sin(scaled);
                Y(base + n_frequencies + k, p) = std::cos(scaled);
                scaled *= Scalar(2);
            }
        }
    }
}

} // namespace nf
