#include "plugsmc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "plugsmc/errors.hpp"

namespace plugsmc::svg {

namespace {

constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 48;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0;
      hi = 1;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

class Frame {
 public:
  Frame(const Plot& plot, Range xr, Range yr) : plot_(plot), xr_(xr), yr_(yr) {
    w_ = plot.width - kLeft - kRight;
    h_ = plot.height - kTop - kBottom;
  }

  bool usable(double y) const { return std::isfinite(y) && (!plot_.log_y || y > 0); }
  double ty(double y) const { return plot_.log_y ? std::log10(y) : y; }
  double px(double x) const { return kLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * w_; }
  double py(double y) const { return kTop + h_ - (ty(y) - yr_.lo) / (yr_.hi - yr_.lo) * h_; }

  void axes(std::ostream& os) const {
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << w_ << "\" height=\"" << h_
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double v : ticks(xr_.lo, xr_.hi)) {
      const double x = px(v);
      os << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + h_ << "\" x2=\"" << num(x) << "\" y2=\"" << kTop + h_ + 4
         << "\" stroke=\"#444\"/>"
         << "<text x=\"" << num(x) << "\" y=\"" << kTop + h_ + 17 << "\" text-anchor=\"middle\">" << num(v)
         << "</text>\n";
    }
    for (double v : ticks(yr_.lo, yr_.hi)) {
      const double y = kTop + h_ - (v - yr_.lo) / (yr_.hi - yr_.lo) * h_;
      const std::string label = plot_.log_y ? "1e" + num(v) : num(v);
      os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft << "\" y2=\"" << num(y)
         << "\" stroke=\"#444\"/>"
         << "<text x=\"" << kLeft - 7 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    os << "<text x=\"" << kLeft + w_ / 2 << "\" y=\"" << plot_.height - 10 << "\" text-anchor=\"middle\">"
       << escape(plot_.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << kTop + h_ / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(plot_.y_label) << "</text>\n";
    os << "<text x=\"" << kLeft + w_ / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(plot_.title) << "</text>\n";
  }

 private:
  const Plot& plot_;
  Range xr_, yr_;
  double w_, h_;
};

}  // namespace

std::string render(const Plot& plot) {
  Range xr, yr;
  auto add_y = [&](double y) {
    if (std::isfinite(y) && (!plot.log_y || y > 0)) yr.add(plot.log_y ? std::log10(y) : y);
  };
  for (const auto& r : plot.ribbons) {
    for (double x : r.x) xr.add(x);
    for (double y : r.lower) add_y(y);
    for (double y : r.upper) add_y(y);
  }
  for (const auto& l : plot.lines) {
    for (double x : l.x) xr.add(x);
    for (double y : l.y) add_y(y);
  }
  for (double y : plot.horizontal_rules) add_y(y);
  xr.finish();
  yr.finish();
  const double pad = 0.04 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;
  const Frame frame(plot, xr, yr);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (const auto& r : plot.ribbons) {
    const std::size_t n = std::min({r.x.size(), r.lower.size(), r.upper.size()});
    std::size_t i = 0;
    while (i < n) {
      while (i < n && !(frame.usable(r.lower[i]) && frame.usable(r.upper[i]))) ++i;
      std::size_t j = i;
      while (j < n && frame.usable(r.lower[j]) && frame.usable(r.upper[j])) ++j;
      if (j > i) {
        os << "<polygon fill=\"" << r.color << "\" fill-opacity=\"" << r.opacity << "\" stroke=\"none\" points=\"";
        for (std::size_t k = i; k < j; ++k) os << num(frame.px(r.x[k])) << ',' << num(frame.py(r.upper[k])) << ' ';
        for (std::size_t k = j; k-- > i;) os << num(frame.px(r.x[k])) << ',' << num(frame.py(r.lower[k])) << ' ';
        os << "\"/>\n";
      }
      i = j;
    }
  }
  for (double y : plot.horizontal_rules) {
    if (!frame.usable(y)) continue;
    os << "<line x1=\"" << kLeft << "\" x2=\"" << plot.width - kRight << "\" y1=\"" << num(frame.py(y))
       << "\" y2=\"" << num(frame.py(y)) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (const auto& l : plot.lines) {
    const std::size_t n = std::min(l.x.size(), l.y.size());
    if (l.markers) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!frame.usable(l.y[k])) continue;
        os << "<circle cx=\"" << num(frame.px(l.x[k])) << "\" cy=\"" << num(frame.py(l.y[k])) << "\" r=\"1.8\" fill=\""
           << l.color << "\"/>\n";
      }
      continue;
    }
    std::size_t i = 0;
    while (i < n) {
      while (i < n && !frame.usable(l.y[i])) ++i;
      std::size_t j = i;
      while (j < n && frame.usable(l.y[j])) ++j;
      if (j > i) {
        os << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"" << l.width << "\" points=\"";
        for (std::size_t k = i; k < j; ++k) os << num(frame.px(l.x[k])) << ',' << num(frame.py(l.y[k])) << ' ';
        os << "\"/>\n";
      }
      i = j;
    }
  }
  frame.axes(os);
  double legend_y = kTop + 14;
  for (const auto& l : plot.lines) {
    if (l.label.empty()) continue;
    os << "<rect x=\"" << plot.width - kRight - 150 << "\" y=\"" << legend_y - 8 << "\" width=\"10\" height=\"10\" fill=\""
       << l.color << "\"/><text x=\"" << plot.width - kRight - 135 << "\" y=\"" << legend_y << "\">" << escape(l.label)
       << "</text>\n";
    legend_y += 15;
  }
  os << "</svg>\n";
  return os.str();
}

void write(const Plot& plot, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << render(plot);
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

}  // namespace plugsmc::svg
