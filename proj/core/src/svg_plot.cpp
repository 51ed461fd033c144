#include "mhgan/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mhgan {

namespace {

const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

constexpr double kCanvas = 800.0;
constexpr double kMargin = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_scatter_svg(const Tensor& real_x, const std::vector<int>& real_y,
                               const Tensor& fake_x, const std::vector<int>& fake_y,
                               int classes) {
  MHGAN_REQUIRE(real_x.rank() == 2 && fake_x.rank() == 2, "scatter plot expects [n, D] inputs");
  MHGAN_REQUIRE(real_x.shape[1] >= 2 && fake_x.shape[1] >= 2, "scatter plot needs D >= 2");
  MHGAN_REQUIRE(static_cast<size_t>(real_x.shape[0]) == real_y.size() &&
                    static_cast<size_t>(fake_x.shape[0]) == fake_y.size(),
                "labels do not match samples");
  MHGAN_REQUIRE(classes >= 1, "scatter plot needs classes >= 1");

  double lo = 1e30, hi = -1e30;
  auto scan = [&](const Tensor& x) {
    const int d = x.shape[1];
    for (int i = 0; i < x.shape[0]; ++i)
      for (int c = 0; c < 2; ++c) {
        const double v = x.values[static_cast<size_t>(i) * d + c];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  };
  scan(real_x);
  scan(fake_x);
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double scale = (kCanvas - 2.0 * kMargin) / (hi - lo);
  auto sx = [&](double v) { return kMargin + (v - lo) * scale; };
  auto sy = [&](double v) { return kCanvas - kMargin - (v - lo) * scale; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 800\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" +
         fmt(kCanvas - 2 * kMargin) + "\" height=\"" + fmt(kCanvas - 2 * kMargin) +
         "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  auto emit_points = [&](const Tensor& x, const std::vector<int>& y, bool filled) {
    const int d = x.shape[1];
    for (int i = 0; i < x.shape[0]; ++i) {
      const char* color = kPalette[static_cast<size_t>(y[static_cast<size_t>(i)] % 10)];
      const std::string cx = fmt(sx(x.values[static_cast<size_t>(i) * d]));
      const std::string cy = fmt(sy(x.values[static_cast<size_t>(i) * d + 1]));
      if (filled)
        svg += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"2.5\" fill=\"" + color +
               "\" fill-opacity=\"0.8\"/>\n";
      else
        svg += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"3\" fill=\"none\" stroke=\"" +
               color + "\" stroke-opacity=\"0.55\"/>\n";
    }
  };
  emit_points(real_x, real_y, /*filled=*/false);
  emit_points(fake_x, fake_y, /*filled=*/true);

  double ly = kMargin + 8.0;
  svg += "<text x=\"" + fmt(kCanvas - kMargin - 150.0) + "\" y=\"" + fmt(ly) +
         "\" font-family=\"sans-serif\" font-size=\"13\">hollow: real, filled: generated"
         "</text>\n";
  for (int c = 0; c < classes && c < 10; ++c) {
    ly += 18.0;
    const std::string bx = fmt(kCanvas - kMargin - 150.0);
    svg += "<circle cx=\"" + bx + "\" cy=\"" + fmt(ly - 4.0) + "\" r=\"5\" fill=\"" +
           kPalette[static_cast<size_t>(c)] + "\"/>\n";
    svg += "<text x=\"" + fmt(kCanvas - kMargin - 138.0) + "\" y=\"" + fmt(ly) +
           "\" font-family=\"sans-serif\" font-size=\"13\">class " + std::to_string(c) +
           "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace mhgan
