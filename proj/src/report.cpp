#include "jdfem/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "jdfem/config.hpp"
#include "jdfem/error.hpp"

namespace jdfem {

using nlohmann::json;

void write_level_csv(const ArmReport& arm, std::uint64_t seed, std::ostream& out) {
  out << "# master_seed=" << seed << " arm=" << to_string(arm.mesh) << '\n';
  out << "level,h,eps_w,eps_l,M,mean_sq_error,std,mean_dofs,wall_ms\n";
  for (const LevelResult& r : arm.levels) {
    out << r.level << ',' << format_double(r.h) << ',' << format_double(r.eps_w) << ','
        << format_double(r.eps_l) << ',' << r.samples << ',' << format_double(r.mean_sq_error)
        << ',' << format_double(r.std) << ',' << format_double(r.mean_dofs) << ','
        << std::fixed << std::setprecision(3) << r.wall_ms << std::defaultfloat << '\n';
  }
  if (!out) throw IoError("level CSV: write failed");
}

namespace {

MeshMode mesh_from(const std::string& s) {
  if (s == "adapted") return MeshMode::Adapted;
  if (s == "standard") return MeshMode::Standard;
  throw InvalidArgument("report: unknown mesh mode '" + s + "'");
}

json rate_json(const std::optional<RateFit>& fit) {
  if (!fit) return nullptr;
  return json{{"slope", fit->slope}, {"intercept", fit->intercept}};
}

std::optional<RateFit> rate_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return RateFit{j.at("slope").get<double>(), j.at("intercept").get<double>()};
}

}  // namespace

std::string report_to_json(const ConvergenceReport& report) {
  json arms = json::array();
  for (const ArmReport& arm : report.arms) {
    json levels = json::array();
    for (const LevelResult& r : arm.levels) {
      json voided = json::array();
      for (const VoidedSample& v : r.voided) voided.push_back({{"index", v.index}, {"reason", v.reason}});
      levels.push_back({{"level", r.level},
                        {"h", r.h},
                        {"eps_w", r.eps_w},
                        {"eps_l", r.eps_l},
                        {"M", r.samples},
                        {"mean_sq_error", r.mean_sq_error},
                        {"std", r.std},
                        {"std_error", r.std_error()},
                        {"mean_dofs", r.mean_dofs},
                        {"capped", r.capped},
                        {"voided", voided}});
    }
    arms.push_back({{"mesh", to_string(arm.mesh)},
                    {"kappa", arm.kappa},
                    {"levels", levels},
                    {"rate_h", rate_json(arm.rate_h)},
                    {"rate_dofs", rate_json(arm.rate_dofs)},
                    {"flags", arm.flags}});
  }
  const json j = {
      {"version", report.version},
      {"seed", report.seed},
      {"config", report.config_echo},
      {"conventions",
       {{"covariance", "matern32: var * (1 + sqrt(3) d / r) * exp(-sqrt(3) d / r)"},
        {"v_norm", "values and gradients at the 800 x 800 cell centres, lowest-index triangle on ties"},
        {"equilibration", "eps_w = h^(kappa / gamma), eps_l = h^(kappa * rc)"},
        {"coupling", "one reference-fidelity draw per sample index, restricted to dyadic sublattices"},
        {"reference_eps", "set from the reference level's own h"}}},
      {"reference",
       {{"mesh", to_string(report.reference.mesh)},
        {"h", report.reference.h},
        {"eps_w", report.reference.eps_w},
        {"eps_l", report.reference.eps_l}}},
      {"arms", arms},
      {"flags", report.flags}};
  return j.dump(2) + "\n";
}

ConvergenceReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("report: invalid JSON: ") + e.what());
  }
  try {
    ConvergenceReport report;
    report.version = j.value("version", std::string(kVersion));
    report.seed = j.value("seed", std::uint64_t{0});
    report.config_echo = j.value("config", std::string());
    if (j.contains("reference")) {
      const json& r = j.at("reference");
      report.reference = Discretization{mesh_from(r.at("mesh").get<std::string>()),
                                        r.at("h").get<double>(), r.at("eps_w").get<double>(),
                                        r.at("eps_l").get<double>()};
    }
    for (const json& a : j.at("arms")) {
      ArmReport arm;
      arm.mesh = mesh_from(a.at("mesh").get<std::string>());
      arm.kappa = a.value("kappa", 1.0);
      for (const json& l : a.at("levels")) {
        LevelResult r;
        r.level = l.at("level").get<std::size_t>();
        r.h = l.at("h").get<double>();
        r.eps_w = l.value("eps_w", 0.0);
        r.eps_l = l.value("eps_l", 0.0);
        r.samples = l.at("M").get<std::size_t>();
        r.mean_sq_error = l.at("mean_sq_error").get<double>();
        r.std = l.value("std", 0.0);
        r.mean_dofs = l.at("mean_dofs").get<double>();
        r.capped = l.value("capped", false);
        if (l.contains("voided")) {
          for (const json& v : l.at("voided")) {
            r.voided.push_back(VoidedSample{v.at("index").get<std::uint64_t>(),
                                            v.at("reason").get<std::string>()});
          }
        }
        arm.levels.push_back(r);
      }
      if (a.contains("rate_h")) arm.rate_h = rate_from(a.at("rate_h"));
      if (a.contains("rate_dofs")) arm.rate_dofs = rate_from(a.at("rate_dofs"));
      if (a.contains("flags")) arm.flags = a.at("flags").get<std::vector<std::string>>();
      report.arms.push_back(std::move(arm));
    }
    if (j.contains("flags")) report.flags = j.at("flags").get<std::vector<std::string>>();
    return report;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("report: malformed field: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// SVG

std::array<double, 2> LogAxes::map(double x, double y) const {
  const double u = (std::log10(x) - x_lo) / (x_hi - x_lo);
  const double v = (std::log10(y) - y_lo) / (y_hi - y_lo);
  return {left + u * width, top + (1.0 - v) * height};
}

LogAxes fit_axes(const std::vector<std::array<double, 2>>& points) {
  if (points.empty()) throw InvalidArgument("fit_axes: no points");
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& p : points) {
    if (!(p[0] > 0.0) || !(p[1] > 0.0)) throw InvalidArgument("fit_axes: log axes need positive data");
    x0 = std::min(x0, std::log10(p[0]));
    x1 = std::max(x1, std::log10(p[0]));
    y0 = std::min(y0, std::log10(p[1]));
    y1 = std::max(y1, std::log10(p[1]));
  }
  LogAxes axes;
  axes.x_lo = std::floor(x0);
  axes.x_hi = std::max(std::ceil(x1), axes.x_lo + 1.0);
  axes.y_lo = std::floor(y0);
  axes.y_hi = std::max(std::ceil(y1), axes.y_lo + 1.0);
  return axes;
}

double guide_value(std::array<double, 2> anchor, double slope, double x) {
  return anchor[1] * std::pow(x / anchor[0], slope);
}

namespace {

constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::string render_one(const ConvergenceReport& report, PlotKind kind) {
  const bool by_h = kind == PlotKind::ErrorVsH;
  std::vector<std::vector<std::array<double, 2>>> series;
  std::vector<double> slopes;
  for (const ArmReport& arm : report.arms) {
    std::vector<std::array<double, 2>> pts;
    for (const LevelResult& r : arm.levels) {
      if (r.samples == 0 || !(r.mean_sq_error > 0.0)) continue;
      pts.push_back({by_h ? r.h : r.mean_dofs, std::sqrt(r.mean_sq_error)});
    }
    const auto [fit_h, fit_d] = fit_rate(arm.levels);
    slopes.push_back(by_h ? fit_h.slope : fit_d.slope);
    series.push_back(std::move(pts));
  }

  // Guides through the coarsest point of the first arm.
  const std::array<double, 2> anchor = series.front().front();
  const double sign = by_h ? 1.0 : -1.0;
  double x_min = anchor[0];
  double x_max = anchor[0];
  std::vector<std::array<double, 2>> all;
  for (const auto& s : series) {
    for (const auto& p : s) {
      all.push_back(p);
      x_min = std::min(x_min, p[0]);
      x_max = std::max(x_max, p[0]);
    }
  }
  const std::array<double, 2> guide_slopes{0.5, 1.0};
  for (double g : guide_slopes) {
    all.push_back({x_min, guide_value(anchor, sign * g, x_min)});
    all.push_back({x_max, guide_value(anchor, sign * g, x_max)});
  }
  const LogAxes axes = fit_axes(all);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\"480\" "
         "viewBox=\"0 0 680 480\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"680\" height=\"480\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fmt(axes.left) << "\" y=\"" << fmt(axes.top) << "\" width=\""
      << fmt(axes.width) << "\" height=\"" << fmt(axes.height)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = axes.x_lo; d <= axes.x_hi + 1e-9; d += 1.0) {
    const double px = axes.left + (d - axes.x_lo) / (axes.x_hi - axes.x_lo) * axes.width;
    svg << "<line class=\"tick\" x1=\"" << fmt(px) << "\" y1=\"" << fmt(axes.top + axes.height)
        << "\" x2=\"" << fmt(px) << "\" y2=\"" << fmt(axes.top + axes.height + 5)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(axes.top + axes.height + 20)
        << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = axes.y_lo; d <= axes.y_hi + 1e-9; d += 1.0) {
    const double py = axes.top + (1.0 - (d - axes.y_lo) / (axes.y_hi - axes.y_lo)) * axes.height;
    svg << "<line class=\"tick\" x1=\"" << fmt(axes.left - 5) << "\" y1=\"" << fmt(py)
        << "\" x2=\"" << fmt(axes.left) << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(axes.left - 8) << "\" y=\"" << fmt(py + 4)
        << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(axes.left + axes.width / 2) << "\" y=\"470\" text-anchor=\"middle\">"
      << (by_h ? "h" : "mean DOFs") << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fmt(axes.top + axes.height / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fmt(axes.top + axes.height / 2)
      << ")\">strong V-error</text>\n";

  for (double g : guide_slopes) {
    const auto a = axes.map(x_min, guide_value(anchor, sign * g, x_min));
    const auto b = axes.map(x_max, guide_value(anchor, sign * g, x_max));
    svg << "<line class=\"guide\" data-slope=\"" << fmt(sign * g) << "\" x1=\"" << fmt(a[0])
        << "\" y1=\"" << fmt(a[1]) << "\" x2=\"" << fmt(b[0]) << "\" y2=\"" << fmt(b[1])
        << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    svg << "<text class=\"guide-label\" x=\"" << fmt(b[0] + 4) << "\" y=\"" << fmt(b[1])
        << "\" fill=\"gray\">slope " << fmt(sign * g) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kColours[s % 4];
    svg << "<polyline class=\"data\" data-arm=\"" << to_string(report.arms[s].mesh)
        << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].size(); ++i) {
      const auto p = axes.map(series[s][i][0], series[s][i][1]);
      svg << (i ? " " : "") << fmt(p[0]) << ',' << fmt(p[1]);
    }
    svg << "\"/>\n";
    for (const auto& pt : series[s]) {
      const auto p = axes.map(pt[0], pt[1]);
      svg << "<circle cx=\"" << fmt(p[0]) << "\" cy=\"" << fmt(p[1]) << "\" r=\"3\" fill=\""
          << colour << "\"/>\n";
    }
    std::ostringstream slope;
    slope << std::fixed << std::setprecision(3) << slopes[s];
    svg << "<text class=\"slope\" x=\"" << fmt(axes.left + 10) << "\" y=\""
        << fmt(axes.top + 18 + 16 * static_cast<double>(s)) << "\" fill=\"" << colour << "\">"
        << to_string(report.arms[s].mesh) << ": slope " << slope.str() << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::vector<RenderedPlot> render_report(const ConvergenceReport& report) {
  if (report.arms.empty()) throw InvalidArgument("render_report: report has no arms");
  for (const ArmReport& arm : report.arms) {
    std::size_t valid = 0;
    for (const LevelResult& r : arm.levels) valid += (r.samples > 0 && r.mean_sq_error > 0.0);
    if (valid < 2) throw InvalidArgument("render_report: every arm needs at least two levels");
  }
  return {RenderedPlot{PlotKind::ErrorVsH, "error_vs_h.svg", render_one(report, PlotKind::ErrorVsH)},
          RenderedPlot{PlotKind::ErrorVsDofs, "error_vs_dofs.svg",
                       render_one(report, PlotKind::ErrorVsDofs)}};
}

}  // namespace jdfem
