#include "saesim/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace saesim {

namespace {

constexpr int kCell = 56;
constexpr int kMargin = 48;
constexpr int kGap = 32;

struct Rgb {
  int r, g, b;
};

Rgb parse_hex(const char* hex) {
  Rgb c{};
  std::sscanf(hex + 1, "%02x%02x%02x", &c.r, &c.g, &c.b);
  return c;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string ramp_color(double v) {
  if (!std::isfinite(v)) v = 0.0;
  const double x = std::clamp(v, 0.0, 1.0) * static_cast<double>(kViridis.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(x));
  const auto hi = std::min(lo + 1, kViridis.size() - 1);
  const double t = x - static_cast<double>(lo);
  const Rgb a = parse_hex(kViridis[lo]);
  const Rgb b = parse_hex(kViridis[hi]);
  auto mix = [t](int p, int q) { return static_cast<int>(std::lround(p + (q - p) * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b));
  return buf;
}

std::string render_heatmap_svg(std::span<const io::SweepRow> rows) {
  std::set<int> la, lb;
  std::map<std::string, std::vector<const io::SweepRow*>> panels;
  for (const auto& r : rows) {
    la.insert(r.layer_a);
    lb.insert(r.layer_b);
    panels[to_string(r.report.metric)].push_back(&r);
  }
  const std::vector<int> ya(la.begin(), la.end());
  const std::vector<int> xb(lb.begin(), lb.end());
  auto col_of = [&](int l) { return static_cast<int>(std::lower_bound(xb.begin(), xb.end(), l) - xb.begin()); };
  auto row_of = [&](int l) { return static_cast<int>(std::lower_bound(ya.begin(), ya.end(), l) - ya.begin()); };

  const int panel_w = kMargin + kCell * static_cast<int>(xb.size());
  const int width = static_cast<int>(panels.size()) * (panel_w + kGap) + kGap;
  const int height = kMargin * 2 + kCell * static_cast<int>(ya.size());

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  int x0 = kGap;
  for (const auto& [metric, cells] : panels) {
    svg += "<g transform=\"translate(" + std::to_string(x0) + ",0)\">\n";
    svg += "<text x=\"" + std::to_string(kMargin) + "\" y=\"16\" font-size=\"13\">" + metric + "</text>\n";
    for (std::size_t i = 0; i < xb.size(); ++i) {
      svg += "<text x=\"" + std::to_string(kMargin + kCell * static_cast<int>(i) + kCell / 2) + "\" y=\"" +
             std::to_string(kMargin - 6) + "\" text-anchor=\"middle\">B" + std::to_string(xb[i]) + "</text>\n";
    }
    for (std::size_t i = 0; i < ya.size(); ++i) {
      svg += "<text x=\"" + std::to_string(kMargin - 6) + "\" y=\"" +
             std::to_string(kMargin + kCell * static_cast<int>(i) + kCell / 2 + 4) + "\" text-anchor=\"end\">A" +
             std::to_string(ya[i]) + "</text>\n";
    }
    for (const auto* r : cells) {
      const int x = kMargin + kCell * col_of(r->layer_b);
      const int y = kMargin + kCell * row_of(r->layer_a);
      const bool ok = r->status.empty();
      const double s = r->report.paired_score;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) + "\" fill=\"" +
             (ok ? ramp_color(s) : std::string("#bbbbbb")) + "\"/>\n";
      const char* ink = ok && s > 0.6 ? "#000000" : "#ffffff";
      const std::string label = ok ? fmt2(s) : "n/a";
      svg += "<text x=\"" + std::to_string(x + kCell / 2) + "\" y=\"" + std::to_string(y + kCell / 2 - 2) +
             "\" text-anchor=\"middle\" fill=\"" + ink + "\">" + label + "</text>\n";
      if (ok) {
        svg += "<text x=\"" + std::to_string(x + kCell / 2) + "\" y=\"" + std::to_string(y + kCell / 2 + 12) +
               "\" text-anchor=\"middle\" font-size=\"9\" fill=\"" + ink + "\">p=" + fmt2(r->report.p_value) +
               "</text>\n";
      }
    }
    svg += "</g>\n";
    x0 += panel_w + kGap;
  }
  return svg + "</svg>\n";
}

}  // namespace saesim
