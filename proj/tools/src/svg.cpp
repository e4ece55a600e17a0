#include "llmc_cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "llmc/format.hpp"

namespace llmc::cli {
namespace {

struct Bin {
  double lo, hi, density, pdf;
};

std::vector<Bin> parse_bins(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line.rfind("bin_left,bin_right,count,density,pdf", 0) != 0) {
    throw std::invalid_argument("histogram csv: bad header");
  }
  std::vector<Bin> bins;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const auto d = parse_double(cell);
      if (!d) throw std::invalid_argument("histogram csv: bad number '" + cell + "'");
      v.push_back(*d);
    }
    if (v.size() != 5) throw std::invalid_argument("histogram csv: expected 5 columns");
    bins.push_back({v[0], v[1], v[3], v[4]});
  }
  if (bins.empty()) throw std::invalid_argument("histogram csv: no bins");
  return bins;
}

bool geometric(const std::vector<Bin>& bins) {
  if (bins.size() < 2 || !(bins.front().lo > 0.0)) return false;
  const double r = bins.front().hi / bins.front().lo;
  const double w = bins.front().hi - bins.front().lo;
  const Bin& last = bins.back();
  return std::abs(last.hi / last.lo - r) < 1e-6 * r && std::abs((last.hi - last.lo) - w) > 1e-6 * w;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// One panel at (ox, oy) of size w x h.
void panel(std::ostringstream& os, const std::vector<Bin>& bins, bool log_x, bool log_y, double ox, double oy,
           double w, double h) {
  const double x0 = bins.front().lo;
  const double x1 = bins.back().hi;
  auto fx = [&](double x) {
    const double u = log_x ? std::log(x / x0) / std::log(x1 / x0) : (x - x0) / (x1 - x0);
    return ox + u * w;
  };
  double ymax = 0.0;
  double ymin_pos = INFINITY;
  for (const Bin& b : bins) {
    ymax = std::max({ymax, b.density, b.pdf});
    if (b.density > 0.0) ymin_pos = std::min(ymin_pos, b.density);
    if (b.pdf > 0.0) ymin_pos = std::min(ymin_pos, b.pdf);
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  if (!std::isfinite(ymin_pos)) ymin_pos = ymax * 1e-6;
  const double ylo = log_y ? std::pow(10.0, std::floor(std::log10(ymin_pos))) : 0.0;
  const double yhi = log_y ? std::pow(10.0, std::ceil(std::log10(ymax))) : ymax * 1.05;
  auto fy = [&](double y) {
    double u = 0.0;
    if (log_y) {
      u = y > 0.0 ? std::log(y / ylo) / std::log(yhi / ylo) : 0.0;
    } else {
      u = y / yhi;
    }
    return oy + h - std::clamp(u, 0.0, 1.0) * h;
  };

  os << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (const Bin& b : bins) {
    if (!(b.density > 0.0)) continue;
    const double top = fy(b.density);
    os << "<rect x=\"" << num(fx(b.lo)) << "\" y=\"" << num(top) << "\" width=\"" << num(fx(b.hi) - fx(b.lo))
       << "\" height=\"" << num(oy + h - top) << "\" fill=\"#9ecae1\" stroke=\"#4a90c2\" stroke-width=\"0.5\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (const Bin& b : bins) {
    if (log_y && !(b.pdf > 0.0)) continue;
    const double mid = log_x ? std::sqrt(b.lo * b.hi) : 0.5 * (b.lo + b.hi);
    os << num(fx(mid)) << "," << num(fy(b.pdf)) << " ";
  }
  os << "\"/>\n";

  // Axis labels: ends of each axis only.
  os << "<text x=\"" << ox << "\" y=\"" << oy + h + 16 << "\" font-size=\"11\">" << num(x0) << "</text>\n";
  os << "<text x=\"" << ox + w << "\" y=\"" << oy + h + 16 << "\" font-size=\"11\" text-anchor=\"end\">" << num(x1)
     << "</text>\n";
  os << "<text x=\"" << ox - 4 << "\" y=\"" << oy + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << num(yhi)
     << "</text>\n";
  os << "<text x=\"" << ox - 4 << "\" y=\"" << oy + h << "\" font-size=\"11\" text-anchor=\"end\">" << num(ylo)
     << "</text>\n";
  os << "<text x=\"" << ox + w / 2 << "\" y=\"" << oy - 6 << "\" font-size=\"12\" text-anchor=\"middle\">"
     << (log_y ? "log scale" : "linear scale") << "</text>\n";
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

}  // namespace

std::string render_histogram_svg(const std::string& histogram_csv, const std::string& title) {
  const std::vector<Bin> bins = parse_bins(histogram_csv);
  const bool log_x = geometric(bins);
  const double w = 380;
  const double h = 260;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"340\" viewBox=\"0 0 900 340\">\n";
  os << "<rect width=\"900\" height=\"340\" fill=\"white\"/>\n";
  os << "<text x=\"450\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  panel(os, bins, log_x, false, 60, 45, w, h);
  panel(os, bins, log_x, true, 500, 45, w, h);
  os << "</svg>\n";
  return os.str();
}

}  // namespace llmc::cli
