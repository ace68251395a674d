#include "calderon/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace calderon {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }
  bool drawable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  void fit(const std::vector<double>& values) {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (double v : values)
      if (drawable(v)) {
        a = std::min(a, map(v));
        b = std::max(b, map(v));
      }
    if (!std::isfinite(a)) a = 0.0, b = 1.0;
    if (b - a < 1e-12) {
      a -= 0.5;
      b += 0.5;
    }
    const double pad = 0.05 * (b - a);
    lo = a - pad;
    hi = b + pad;
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo); e <= hi; e += 1.0) t.push_back(e);
      if (t.size() < 2)
        for (int i = 0; i <= 4; ++i) t.push_back(lo + (hi - lo) * i / 4.0);
      return t;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0})
      if (f * mag >= raw) {
        step = f * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) t.push_back(v);
    return t;
  }

  std::string label(double mapped) const { return log ? fmt(std::pow(10.0, mapped)) : fmt(mapped); }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  const double left = 80, right = 180, top = 40, bottom = 60;
  const double w = spec.width, h = spec.height;
  const double pw = w - left - right, ph = h - top - bottom;
  Axis ax{spec.logx}, ay{spec.logy};
  std::vector<double> xs, ys;
  for (const auto& s : spec.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  ax.fit(xs);
  ay.fit(ys);
  auto sx = [&](double v) { return left + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto sy = [&](double v) { return top + ph - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double X = left + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    o << "<line x1=\"" << px(X) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(X) << "\" y2=\""
      << px(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(X) << "\" y=\"" << px(top + ph + 18) << "\" text-anchor=\"middle\">"
      << ax.label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double Y = top + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
    o << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(Y) << "\" x2=\"" << px(left) << "\" y2=\"" << px(Y)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(left - 8) << "\" y=\"" << px(Y + 4) << "\" text-anchor=\"end\">" << ay.label(t)
      << "</text>\n";
  }
  o << "<text x=\"" << px(left + pw / 2) << "\" y=\"" << px(h - 15) << "\" text-anchor=\"middle\">"
    << escape(spec.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << px(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.ylabel) << "</text>\n";

  double ly = top + 10;
  for (const auto& s : spec.series) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (ax.drawable(s.x[i]) && ay.drawable(s.y[i])) pts.emplace_back(sx(s.x[i]), sy(s.y[i]));
    if (s.line) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) o << (i ? " " : "") << px(pts[i].first) << "," << px(pts[i].second);
      o << "\"/>\n";
    } else {
      for (const auto& [X, Y] : pts)
        o << "<circle cx=\"" << px(X) << "\" cy=\"" << px(Y) << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
    }
    o << "<rect x=\"" << px(left + pw + 12) << "\" y=\"" << px(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << s.color << "\"/>\n";
    o << "<text x=\"" << px(left + pw + 28) << "\" y=\"" << px(ly + 1) << "\">" << escape(s.label) << "</text>\n";
    ly += 18;
  }
  for (const auto& note : spec.notes) {
    o << "<text x=\"" << px(left + pw + 12) << "\" y=\"" << px(ly + 1) << "\">" << escape(note) << "</text>\n";
    ly += 18;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace calderon
