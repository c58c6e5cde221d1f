#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace rfaffect {

namespace svg {

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    return colors;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;        // data range
    double px0, px1, py0, py1;    // pixel box (py0 = top)

    double x(double v) const { return px0 + (v - x0) / (x1 - x0) * (px1 - px0); }
    double y(double v) const { return py1 - (v - y0) / (y1 - y0) * (py1 - py0); }
};

inline void open_doc(std::ostringstream& os, int w, int h, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"15\">" << escape(title) << "</text>\n";
}

inline void axes(std::ostringstream& os, const Frame& f, const std::string& xlabel,
                 const std::string& ylabel) {
    os << "<line x1=\"" << num(f.px0) << "\" y1=\"" << num(f.py1) << "\" x2=\"" << num(f.px1)
       << "\" y2=\"" << num(f.py1) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(f.px0) << "\" y1=\"" << num(f.py0) << "\" x2=\"" << num(f.px0)
       << "\" y2=\"" << num(f.py1) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double fx = f.x0 + (f.x1 - f.x0) * t / 4.0;
        double fy = f.y0 + (f.y1 - f.y0) * t / 4.0;
        os << "<text x=\"" << num(f.x(fx)) << "\" y=\"" << num(f.py1 + 16)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(fx)
           << "</text>\n"
           << "<text x=\"" << num(f.px0 - 6) << "\" y=\"" << num(f.y(fy) + 3)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << num((f.px0 + f.px1) / 2) << "\" y=\"" << num(f.py1 + 32)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(xlabel)
       << "</text>\n"
       << "<text x=\"14\" y=\"" << num((f.py0 + f.py1) / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
       << num((f.py0 + f.py1) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

inline Frame fit_frame(const std::vector<Series>& series, int w, int h) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (x0 >= x1) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y0 >= y1) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    double mx = 0.03 * (x1 - x0), my = 0.05 * (y1 - y0);
    return Frame{x0 - mx, x1 + mx, y0 - my, y1 + my,
                 52.0, static_cast<double>(w) - 16.0, 34.0, static_cast<double>(h) - 40.0};
}

inline void legend(std::ostringstream& os, const std::vector<Series>& series, const Frame& f) {
    double lx = f.px1 - 150, ly = f.py0 + 8;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].label.empty())
            continue;
        const std::string& color = palette()[i % palette().size()];
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\""
           << " fill=\"" << color << "\"/>\n"
           << "<text x=\"" << num(lx + 14) << "\" y=\"" << num(ly + 9)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[i].label)
           << "</text>\n";
        ly += 15;
    }
}

}  // namespace detail

inline std::string line_chart(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<Series>& series,
                              int w = 640, int h = 440) {
    std::ostringstream os;
    detail::open_doc(os, w, h, title);
    detail::Frame f = detail::fit_frame(series, w, h);
    detail::axes(os, f, xlabel, ylabel);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string& color = palette()[i % palette().size()];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].points)
            os << detail::num(f.x(x)) << ',' << detail::num(f.y(y)) << ' ';
        os << "\"/>\n";
    }
    detail::legend(os, series, f);
    os << "</svg>\n";
    return os.str();
}

inline std::string scatter_chart(const std::string& title, const std::string& xlabel,
                                 const std::string& ylabel, const std::vector<Series>& groups,
                                 int w = 640, int h = 440) {
    std::ostringstream os;
    detail::open_doc(os, w, h, title);
    detail::Frame f = detail::fit_frame(groups, w, h);
    detail::axes(os, f, xlabel, ylabel);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::string& color = palette()[i % palette().size()];
        for (const auto& [x, y] : groups[i].points)
            os << "<circle cx=\"" << detail::num(f.x(x)) << "\" cy=\"" << detail::num(f.y(y))
               << "\" r=\"3.5\" fill=\"" << color << "\" fill-opacity=\"0.8\"/>\n";
    }
    detail::legend(os, groups, f);
    os << "</svg>\n";
    return os.str();
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values, const std::string& ylabel,
                             int w = 640, int h = 440) {
    std::ostringstream os;
    detail::open_doc(os, w, h, title);
    double top = 0.0;
    for (double v : values)
        top = std::max(top, v);
    if (top <= 0.0)
        top = 1.0;
    detail::Frame f{0.0, static_cast<double>(values.size()), 0.0, top * 1.08,
                    52.0, static_cast<double>(w) - 16.0, 34.0, static_cast<double>(h) - 40.0};
    os << "<line x1=\"" << detail::num(f.px0) << "\" y1=\"" << detail::num(f.py1) << "\" x2=\""
       << detail::num(f.px1) << "\" y2=\"" << detail::num(f.py1) << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        double bx0 = f.x(static_cast<double>(i) + 0.15);
        double bx1 = f.x(static_cast<double>(i) + 0.85);
        double by = f.y(values[i]);
        os << "<rect x=\"" << detail::num(bx0) << "\" y=\"" << detail::num(by) << "\" width=\""
           << detail::num(bx1 - bx0) << "\" height=\"" << detail::num(f.py1 - by) << "\" fill=\""
           << palette()[i % palette().size()] << "\"/>\n"
           << "<text x=\"" << detail::num((bx0 + bx1) / 2) << "\" y=\"" << detail::num(by - 4)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::num(values[i]) << "</text>\n"
           << "<text x=\"" << detail::num((bx0 + bx1) / 2) << "\" y=\"" << detail::num(f.py1 + 16)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::escape(labels[i]) << "</text>\n";
    }
    os << "<text x=\"14\" y=\"" << detail::num((f.py0 + f.py1) / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
       << detail::num((f.py0 + f.py1) / 2) << ")\">" << detail::escape(ylabel) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

inline std::string heatmap(const std::string& title, const std::vector<std::vector<double>>& m,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, int cell = 56) {
    const int rows = static_cast<int>(m.size());
    const int cols = rows > 0 ? static_cast<int>(m.front().size()) : 0;
    const int left = 80, top = 60;
    const int w = left + cols * cell + 20, h = top + rows * cell + 20;
    double peak = 1e-300;
    for (const auto& row : m)
        for (double v : row)
            peak = std::max(peak, v);
    std::ostringstream os;
    detail::open_doc(os, w, h, title);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double v = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            int shade = static_cast<int>(std::lround(255.0 * (1.0 - 0.85 * v / peak)));
            os << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell << "\" width=\""
               << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
               << ",255)\" stroke=\"white\"/>\n"
               << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\""
               << top + r * cell + cell / 2 + 4
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
               << detail::num(v) << "</text>\n";
        }
        os << "<text x=\"" << left - 8 << "\" y=\"" << top + r * cell + cell / 2 + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::escape(row_labels[static_cast<std::size_t>(r)]) << "</text>\n";
    }
    for (int c = 0; c < cols; ++c)
        os << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top - 8
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::escape(col_labels[static_cast<std::size_t>(c)]) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace svg

}  // namespace rfaffect
