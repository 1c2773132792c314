#pragma once

// Command-line driver. Exit codes: 0 success, 1 a scientific check failed, 2 an error.

#include <string>
#include <vector>

#include "incomp/config.hpp"
#include "incomp/plasma.hpp"

namespace incomp::cli {

int run(int argc, const char* const* argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args);

/// Parses a model description (keys N, ell, frame, holes, charges, eps, U, deltaU_bound).
/// Unknown keys are rejected.
PlasmaModel parse_model(const std::string& json_text);

/// Bulk-covering disks. In unit-density lengths the radius is max(1, min(6, R/2)) with
/// R = sqrt(n/pi) the neutral support radius, scaled by the frame's length unit unless
/// `radius` > 0. Centres lie on a grid of stride r/2 within R - r of `centroid`, which is
/// always included.
std::vector<Region> auto_disks(const Point& centroid, int n, const Frame& frame, double radius = 0.0);

}  // namespace incomp::cli
