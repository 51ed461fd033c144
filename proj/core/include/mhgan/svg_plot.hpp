#pragma once

#include <string>
#include <vector>

#include "mhgan/tensor.hpp"

namespace mhgan {

// Scatter plot of real (hollow markers) versus generated (filled markers)
// samples, one color per class, with a legend, on a fixed 800x800 viewBox.
// Data beyond two dimensions is projected onto its first two coordinates.
// Output bytes are deterministic for identical inputs.
std::string render_scatter_svg(const Tensor& real_x, const std::vector<int>& real_y,
                               const Tensor& fake_x, const std::vector<int>& fake_y,
                               int classes);

}  // namespace mhgan
