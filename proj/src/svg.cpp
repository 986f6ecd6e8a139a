#include "synthtab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

constexpr const char* kRealColor = "#1f77b4";  // blue
constexpr const char* kSynthColor = "#ff7f0e"; // orange
// road classes follow the geographic figure legend: asphalt blue,
// cobblestone green, dirt red
constexpr const char* kClassColors[3] = {"#1f77b4", "#2ca02c", "#d62728"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct AxisMap {
    double data_lo, data_hi;
    double view_lo, view_hi;

    double operator()(double v) const {
        const double t = (v - data_lo) / (data_hi - data_lo);
        return view_lo + t * (view_hi - view_lo);
    }
};

AxisMap make_axis(double lo, double hi, double view_lo, double view_hi) {
    if (!(hi > lo)) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, view_lo, view_hi};
}

std::string heat_color(double v) {
    // -1 -> blue, 0 -> white, +1 -> red
    v = std::clamp(v, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (v >= 0.0) {
        g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
        b = g;
    } else {
        r = static_cast<int>(std::lround(255.0 * (1.0 + v)));
        g = r;
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string fmt_value(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

void draw_frame(SvgCanvas& svg, double x0, double y0, double x1, double y1) {
    svg.rect(x0, y0, x1 - x0, y1 - y0, "none", "#333333", 1.0);
}

} // namespace

std::string fmt_coord(double v) { return fmt_value(v, 3); }

SvgCanvas::SvgCanvas() {
    buf_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
           "width=\"800\" height=\"600\">\n";
    buf_ += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
}

void SvgCanvas::comment(const std::string& text) {
    buf_ += "<!-- " + escape_xml(text) + " -->\n";
}

void SvgCanvas::rect(double x, double y, double w, double h, const std::string& fill,
                     const std::string& stroke, double stroke_width) {
    buf_ += "<rect x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(y) + "\" width=\"" +
            fmt_coord(w) + "\" height=\"" + fmt_coord(h) + "\" fill=\"" + fill + "\"";
    if (!stroke.empty()) {
        buf_ += " stroke=\"" + stroke + "\" stroke-width=\"" + fmt_coord(stroke_width) + "\"";
    }
    buf_ += "/>\n";
}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                     double width) {
    buf_ += "<line x1=\"" + fmt_coord(x1) + "\" y1=\"" + fmt_coord(y1) + "\" x2=\"" +
            fmt_coord(x2) + "\" y2=\"" + fmt_coord(y2) + "\" stroke=\"" + stroke +
            "\" stroke-width=\"" + fmt_coord(width) + "\"/>\n";
}

void SvgCanvas::polyline(std::span<const double> xs, std::span<const double> ys,
                         const std::string& stroke, double width) {
    buf_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
            fmt_coord(width) + "\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) buf_ += ' ';
        buf_ += fmt_coord(xs[i]) + "," + fmt_coord(ys[i]);
    }
    buf_ += "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& fill,
                       double opacity) {
    buf_ += "<circle cx=\"" + fmt_coord(cx) + "\" cy=\"" + fmt_coord(cy) + "\" r=\"" +
            fmt_coord(r) + "\" fill=\"" + fill + "\"";
    if (opacity < 1.0) buf_ += " fill-opacity=\"" + fmt_coord(opacity) + "\"";
    buf_ += "/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& s, int size,
                     const std::string& anchor, const std::string& fill) {
    buf_ += "<text x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(y) + "\" font-family=\"sans-serif\" font-size=\"" +
            std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
            escape_xml(s) + "</text>\n";
}

std::string SvgCanvas::finish() {
    if (!finished_) {
        buf_ += "</svg>\n";
        finished_ = true;
    }
    return buf_;
}

std::string render_kde_figure(const KdeOverlay& overlay) {
    SvgCanvas svg;
    const double x0 = 70, x1 = 770, y0 = 60, y1 = 540;
    double dmax = 0.0;
    for (double d : overlay.real_density) dmax = std::max(dmax, d);
    for (double d : overlay.synth_density) dmax = std::max(dmax, d);
    if (dmax <= 0.0) dmax = 1.0;
    const AxisMap xm = make_axis(overlay.grid.front(), overlay.grid.back(), x0, x1);
    const AxisMap ym = make_axis(0.0, dmax * 1.05, y1, y0); // y grows upward

    svg.comment("affine map: x_view = " + fmt_coord(x0) + " + (x - " +
                format_double(xm.data_lo) + ") / (" + format_double(xm.data_hi - xm.data_lo) +
                ") * " + fmt_coord(x1 - x0) + "; y_view = " + fmt_coord(y1) + " - density / " +
                format_double(ym.data_hi) + " * " + fmt_coord(y1 - y0));
    svg.text(400, 30, "Density: " + overlay.column, 18, "middle");
    draw_frame(svg, x0, y0, x1, y1);

    auto draw = [&](const std::vector<double>& density, const char* color) {
        std::vector<double> xs, ys;
        xs.reserve(overlay.grid.size());
        ys.reserve(overlay.grid.size());
        for (size_t i = 0; i < overlay.grid.size(); ++i) {
            xs.push_back(xm(overlay.grid[i]));
            ys.push_back(ym(density[i]));
        }
        svg.polyline(xs, ys, color, 2.0);
    };
    draw(overlay.real_density, kRealColor);
    draw(overlay.synth_density, kSynthColor);

    svg.line(600, 70, 640, 70, kRealColor, 3.0);
    svg.text(648, 74, "real", 14);
    svg.line(600, 92, 640, 92, kSynthColor, 3.0);
    svg.text(648, 96, "synthetic", 14);

    // x axis ticks at the ends and middle
    for (double t : {0.0, 0.5, 1.0}) {
        const double v = xm.data_lo + t * (xm.data_hi - xm.data_lo);
        const double px = xm(v);
        svg.line(px, y1, px, y1 + 6, "#333333", 1.0);
        svg.text(px, y1 + 22, fmt_value(v, 3), 12, "middle");
    }
    return svg.finish();
}

std::string render_heatmap_figure(const std::string& title, const CorrelationResult& corr) {
    SvgCanvas svg;
    const size_t d = corr.columns.size();
    const double x0 = 150, y0 = 110, size = std::min(600.0 / static_cast<double>(d),
                                                     440.0 / static_cast<double>(d));
    svg.comment("cell value v maps to fill: white at 0, red toward +1, blue toward -1");
    svg.text(400, 40, title, 18, "middle");
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < d; ++j) {
            const double v = corr.values.at(i, j);
            const double x = x0 + static_cast<double>(j) * size;
            const double y = y0 + static_cast<double>(i) * size;
            svg.rect(x, y, size, size, heat_color(v), "#666666", 0.5);
            svg.text(x + size / 2, y + size / 2 + 4, fmt_value(v, 2), 12, "middle");
        }
        svg.text(x0 - 8, y0 + static_cast<double>(i) * size + size / 2 + 4, corr.columns[i], 12,
                 "end");
        svg.text(x0 + static_cast<double>(i) * size + size / 2,
                 y0 + static_cast<double>(d) * size + 16, corr.columns[i], 12, "middle");
    }
    return svg.finish();
}

std::string render_confusion_figure(const std::string& title,
                                    const std::vector<std::vector<size_t>>& confusion,
                                    const std::vector<std::string>& labels) {
    SvgCanvas svg;
    const size_t d = confusion.size();
    const double x0 = 200, y0 = 120;
    const double size = std::min(440.0 / static_cast<double>(d), 380.0 / static_cast<double>(d));
    size_t cmax = 1;
    for (const auto& row : confusion) {
        for (size_t v : row) cmax = std::max(cmax, v);
    }
    svg.comment("cell shade scales with count / " + std::to_string(cmax));
    svg.text(400, 40, title, 18, "middle");
    svg.text(400, 70, "rows: truth, columns: predicted", 13, "middle", "#555555");
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < d; ++j) {
            const double frac = static_cast<double>(confusion[i][j]) / static_cast<double>(cmax);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - 0.85 * frac)));
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade, shade, 255);
            const double x = x0 + static_cast<double>(j) * size;
            const double y = y0 + static_cast<double>(i) * size;
            svg.rect(x, y, size, size, color, "#666666", 0.5);
            svg.text(x + size / 2, y + size / 2 + 4, std::to_string(confusion[i][j]), 13,
                     "middle", frac > 0.55 ? "#ffffff" : "#000000");
        }
        const std::string label = i < labels.size() ? labels[i] : "class_" + std::to_string(i);
        svg.text(x0 - 8, y0 + static_cast<double>(i) * size + size / 2 + 4, label, 12, "end");
        svg.text(x0 + static_cast<double>(i) * size + size / 2,
                 y0 + static_cast<double>(d) * size + 16, label, 12, "middle");
    }
    return svg.finish();
}

namespace {

void draw_geo_panel(SvgCanvas& svg, const GeoSeries& series, double x0, double x1, double y0,
                    double y1, double lon_lo, double lon_hi, double lat_lo, double lat_hi) {
    const AxisMap xm = make_axis(lon_lo, lon_hi, x0, x1);
    const AxisMap ym = make_axis(lat_lo, lat_hi, y1, y0);
    draw_frame(svg, x0, y0, x1, y1);
    svg.text((x0 + x1) / 2, y0 - 10, series.title, 14, "middle");

    // cap the point count so files stay reviewable; stride is deterministic
    const size_t n = series.latitude.size();
    const size_t stride = std::max<size_t>(1, n / 2000);
    for (size_t i = 0; i < n; i += stride) {
        const int cls = series.road_class[i];
        const char* color = (cls >= 0 && cls < 3) ? kClassColors[cls] : "#777777";
        svg.circle(xm(series.longitude[i]), ym(series.latitude[i]), 1.6, color, 0.55);
    }
    // fitted regression line clipped to the panel range
    std::vector<double> xs, ys;
    for (double t : {0.0, 1.0}) {
        const double lon = lon_lo + t * (lon_hi - lon_lo);
        double lat = series.slope * lon + series.intercept;
        lat = std::clamp(lat, std::min(lat_lo, lat_hi), std::max(lat_lo, lat_hi));
        xs.push_back(xm(lon));
        ys.push_back(ym(lat));
    }
    svg.polyline(xs, ys, "#000000", 1.5);
}

} // namespace

std::string render_geo_figure(const GeoSeries& real, const GeoSeries& synth) {
    SvgCanvas svg;
    double lon_lo = 1e300, lon_hi = -1e300, lat_lo = 1e300, lat_hi = -1e300;
    for (const GeoSeries* s : {&real, &synth}) {
        for (double v : s->longitude) {
            lon_lo = std::min(lon_lo, v);
            lon_hi = std::max(lon_hi, v);
        }
        for (double v : s->latitude) {
            lat_lo = std::min(lat_lo, v);
            lat_hi = std::max(lat_hi, v);
        }
    }
    svg.comment("shared axes: longitude in [" + format_double(lon_lo) + ", " +
                format_double(lon_hi) + "], latitude in [" + format_double(lat_lo) + ", " +
                format_double(lat_hi) + "]");
    svg.text(400, 30, "Geographic comparison (regression lines overlaid)", 16, "middle");
    draw_geo_panel(svg, real, 60, 390, 70, 520, lon_lo, lon_hi, lat_lo, lat_hi);
    draw_geo_panel(svg, synth, 430, 760, 70, 520, lon_lo, lon_hi, lat_lo, lat_hi);

    const char* names[3] = {"asphalt", "cobblestone", "dirt"};
    double lx = 170;
    for (int c = 0; c < 3; ++c) {
        svg.circle(lx, 560, 5, kClassColors[c]);
        svg.text(lx + 10, 564, names[c], 13);
        lx += 150;
    }
    return svg.finish();
}

std::string render_loss_figure(const std::vector<double>& total,
                               const std::vector<double>& reconstruction,
                               const std::vector<double>& kl) {
    SvgCanvas svg;
    const double x0 = 70, x1 = 770, y0 = 60, y1 = 540;
    double lo = 1e300, hi = -1e300;
    for (const auto* series : {&total, &reconstruction, &kl}) {
        for (double v : *series) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const AxisMap xm = make_axis(0.0, static_cast<double>(std::max<size_t>(1, total.size() - 1)),
                                 x0, x1);
    const AxisMap ym = make_axis(lo, hi, y1, y0);
    svg.comment("x: epoch index, y: loss value in [" + format_double(lo) + ", " +
                format_double(hi) + "]");
    svg.text(400, 30, "Training loss by epoch", 18, "middle");
    draw_frame(svg, x0, y0, x1, y1);

    auto draw = [&](const std::vector<double>& series, const char* color) {
        if (series.empty()) return;
        std::vector<double> xs, ys;
        for (size_t i = 0; i < series.size(); ++i) {
            xs.push_back(xm(static_cast<double>(i)));
            ys.push_back(ym(series[i]));
        }
        svg.polyline(xs, ys, color, 2.0);
    };
    draw(total, "#000000");
    draw(reconstruction, kRealColor);
    draw(kl, kSynthColor);
    svg.line(600, 70, 640, 70, "#000000", 3.0);
    svg.text(648, 74, "total", 13);
    svg.line(600, 92, 640, 92, kRealColor, 3.0);
    svg.text(648, 96, "reconstruction", 13);
    svg.line(600, 114, 640, 114, kSynthColor, 3.0);
    svg.text(648, 118, "kl", 13);
    return svg.finish();
}

} // namespace synthtab
