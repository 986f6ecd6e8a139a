#pragma once

#include <span>
#include <string>
#include <vector>

#include "synthtab/fidelity.hpp"
#include "synthtab/utility_eval.hpp"

namespace synthtab {

/// Hand-emitted SVG, fixed 800x600 viewBox, no timestamps: the same inputs
/// always produce the same bytes. The data-to-viewport affine map is written
/// into the file as a comment.
class SvgCanvas {
public:
    SvgCanvas();
    void comment(const std::string& text);
    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "", double stroke_width = 0.0);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width);
    void polyline(std::span<const double> xs, std::span<const double> ys,
                  const std::string& stroke, double width);
    void circle(double cx, double cy, double r, const std::string& fill,
                double opacity = 1.0);
    void text(double x, double y, const std::string& s, int size,
              const std::string& anchor = "start", const std::string& fill = "#000000");
    std::string finish();

    static constexpr double kWidth = 800.0;
    static constexpr double kHeight = 600.0;

private:
    std::string buf_;
    bool finished_ = false;
};

std::string fmt_coord(double v); // fixed 3-decimal form used in all SVG output

struct GeoSeries {
    std::vector<double> latitude;
    std::vector<double> longitude;
    std::vector<int> road_class; // colors: 0 asphalt blue, 1 cobblestone green, 2 dirt red
    double slope = 0.0;          // latitude over longitude
    double intercept = 0.0;
    std::string title;
};

std::string render_kde_figure(const KdeOverlay& overlay);
std::string render_heatmap_figure(const std::string& title, const CorrelationResult& corr);
std::string render_confusion_figure(const std::string& title,
                                    const std::vector<std::vector<size_t>>& confusion,
                                    const std::vector<std::string>& labels);
std::string render_geo_figure(const GeoSeries& real, const GeoSeries& synth);
std::string render_loss_figure(const std::vector<double>& total,
                               const std::vector<double>& reconstruction,
                               const std::vector<double>& kl);

} // namespace synthtab
