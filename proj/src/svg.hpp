#ifndef PLMM_SVG_HPP
#define PLMM_SVG_HPP

#include <string>

#include "inference.hpp"
#include "path.hpp"

namespace plmm {

// Coefficient paths vs log(lambda), one polyline per ever-active feature.
// Self-contained static SVG, 800x600 viewBox, no timestamps.
std::string plot_paths_svg(const FitPath &fit);

// CV error with +/- one standard error bars and a lambda_min marker.
std::string plot_cve_svg(const CVResult &cv);

void write_file(const std::string &path, const std::string &content);

}  // namespace plmm

#endif  // PLMM_SVG_HPP
