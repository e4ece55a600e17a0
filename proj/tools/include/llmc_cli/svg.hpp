#ifndef LLMC_CLI_SVG_HPP
#define LLMC_CLI_SVG_HPP

#include <string>

namespace llmc::cli {

/// Two panels side by side (linear y, log y) drawn from histogram.csv text:
/// columns bin_left,bin_right,count,density,pdf. Bars are the densities, the polyline
/// is the pdf column. Throws std::invalid_argument on malformed input.
std::string render_histogram_svg(const std::string& histogram_csv, const std::string& title);

}  // namespace llmc::cli

#endif  // LLMC_CLI_SVG_HPP
