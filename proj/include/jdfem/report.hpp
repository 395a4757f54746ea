#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "jdfem/experiment.hpp"

namespace jdfem {

/// Per-level table with header
/// `level,h,eps_w,eps_l,M,mean_sq_error,std,mean_dofs,wall_ms`, preceded by a
/// `# master_seed=... arm=...` comment line.
void write_level_csv(const ArmReport& arm, std::uint64_t seed, std::ostream& out);

/// Report JSON: version, seed, config echo, conventions, reference
/// discretization and per-arm levels, rates and flags. Wall times are kept
/// out of the JSON so that reruns are byte-identical.
std::string report_to_json(const ConvergenceReport& report);
ConvergenceReport report_from_json(std::string_view text);

/// Log-log axes mapping data coordinates to SVG pixels.
struct LogAxes {
  double x_lo = 0.0;  ///< log10 bounds
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  double left = 80.0;  ///< plot area in pixels
  double top = 40.0;
  double width = 520.0;
  double height = 380.0;

  std::array<double, 2> map(double x, double y) const;
};

/// Decade-aligned axes enclosing every (x, y).
LogAxes fit_axes(const std::vector<std::array<double, 2>>& points);

/// Guide through `anchor` with the given log-log slope, evaluated at x.
double guide_value(std::array<double, 2> anchor, double slope, double x);

enum class PlotKind { ErrorVsH, ErrorVsDofs };

struct RenderedPlot {
  PlotKind kind;
  std::string file_name;
  std::string svg;
};

/// Error (square root of the mean squared V-error) against h and against the
/// mean DOF count, one polyline per arm, with the fitted slope (3 decimals)
/// and guides of slope magnitude 0.5 and 1.0 through the coarsest point of
/// the first arm. Throws for reports whose arms have fewer than two levels.
std::vector<RenderedPlot> render_report(const ConvergenceReport& report);

}  // namespace jdfem
