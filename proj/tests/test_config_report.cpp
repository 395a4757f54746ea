#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "jdfem/config.hpp"
#include "jdfem/error.hpp"
#include "jdfem/report.hpp"

using namespace jdfem;

namespace {

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

ConvergenceReport synthetic_report(double order, std::size_t n_levels = 4) {
  ConvergenceReport r;
  r.seed = 42;
  r.config_echo = echo_config(ExperimentConfig{});
  r.reference = Discretization{MeshMode::Adapted, 0.025, 0.025, 0.0006};
  ArmReport arm;
  for (std::size_t l = 0; l < n_levels; ++l) {
    LevelResult lr;
    lr.level = l + 1;
    lr.h = 0.4 / std::pow(2.0, static_cast<double>(l));
    lr.eps_w = lr.h;
    lr.eps_l = std::pow(lr.h, 2.01);
    lr.samples = 10;
    const double err = 0.8 * std::pow(lr.h, order);
    lr.mean_sq_error = err * err;
    lr.std = 0.1 * lr.mean_sq_error;
    lr.mean_dofs = 2.0 / (lr.h * lr.h);
    lr.wall_ms = 12.5;
    arm.levels.push_back(lr);
  }
  if (n_levels >= 2) {
    auto [fh, fd] = fit_rate(arm.levels);
    arm.rate_h = fh;
    arm.rate_dofs = fd;
  }
  r.arms.push_back(arm);
  return r;
}

std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  std::regex num(R"(-?[0-9]+(\.[0-9]+)?)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), num); it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const ExperimentConfig c = parse_config(
      "# comment\n; other comment\n[fields]\nsigma1 = 0.5\n[subordinator]\nfamily = gamma\nshape = 4\nrate = 10\n"
      "[run]\narms = standard\nseed = 77\n");
  EXPECT_EQ(c.sigma1, 0.5);
  EXPECT_EQ(c.sigma2, 0.3);
  EXPECT_EQ(c.law.family, SubordinatorLaw::Family::Gamma);
  EXPECT_EQ(c.law.shape, 4.0);
  EXPECT_EQ(c.seed, 77u);
  ASSERT_EQ(c.arms.size(), 1u);
  EXPECT_EQ(c.arms[0], MeshMode::Standard);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(config_error_key("[fields]\nsigma3 = 1\n"), "fields.sigma3");
  EXPECT_EQ(config_error_key("[field]\nsigma1 = 1\n"), "field.sigma1");
  EXPECT_EQ(config_error_key("sigma1 = 1\n"), "sigma1");
  EXPECT_EQ(config_error_key("[fields]\nsigma1 = -1\n"), "fields.sigma1");
  EXPECT_EQ(config_error_key("[fields]\nsigma1 = abc\n"), "fields.sigma1");
  EXPECT_EQ(config_error_key("[levels]\ncount = 5\nreference = 5\n"), "levels.reference");
  EXPECT_EQ(config_error_key("[pde]\nbc = robin\n"), "pde.bc");
  EXPECT_THROW(load_config("/nonexistent/file.ini"), IoError);
}

TEST(Config, EchoRoundTrip) {
  ExperimentConfig c;
  c.law = SubordinatorLaw::poisson(5.0);
  c.downscale = 1.0 / 15.0;
  c.r2 = 0.05;
  c.h_ratio = 1.7;
  c.cutoff_a = std::numeric_limits<double>::infinity();
  c.bc = BoundarySpec::Mode::HomogeneousDirichlet;
  c.arms = {MeshMode::Standard, MeshMode::Adapted};
  c.seed = 18446744073709551615ull;
  const std::string echo = echo_config(c);
  const ExperimentConfig back = parse_config(echo);
  EXPECT_EQ(echo_config(back), echo);
  EXPECT_EQ(back.downscale, c.downscale);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_TRUE(std::isinf(back.cutoff_a));
  for (const std::string& key : config_keys()) {
    EXPECT_EQ(get_config_value(back, key), get_config_value(c, key)) << key;
  }
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 2.01, 50.0}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Report, JsonRoundTripAndNoWallTimes) {
  const ConvergenceReport r = synthetic_report(1.0);
  const std::string json = report_to_json(r);
  EXPECT_EQ(json.find("wall"), std::string::npos);
  EXPECT_EQ(json.back(), '\n');
  const ConvergenceReport back = report_from_json(json);
  EXPECT_EQ(report_to_json(back), json);
  EXPECT_EQ(back.seed, 42u);
  ASSERT_EQ(back.arms.size(), 1u);
  EXPECT_EQ(back.arms[0].levels[2].mean_sq_error, r.arms[0].levels[2].mean_sq_error);
}

TEST(Report, LevelCsv) {
  const ConvergenceReport r = synthetic_report(1.0, 2);
  std::ostringstream out;
  write_level_csv(r.arms[0], r.seed, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# master_seed=42 arm=adapted");
  std::getline(in, line);
  EXPECT_EQ(line, "level,h,eps_w,eps_l,M,mean_sq_error,std,mean_dofs,wall_ms");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("1,0.4,0.4,", 0), 0u);
  EXPECT_NE(line.find(",12.500"), std::string::npos);
}

TEST(Plot, SlopeAnnotationReadsFitRate) {
  const ConvergenceReport r = synthetic_report(1.0);
  const auto plots = render_report(r);
  ASSERT_EQ(plots.size(), 2u);
  EXPECT_EQ(plots[0].file_name, "error_vs_h.svg");
  EXPECT_EQ(plots[1].file_name, "error_vs_dofs.svg");
  std::smatch m;
  const std::regex slope_text("class=\"slope\"[^>]*>adapted: slope ([-0-9.]+)<");
  ASSERT_TRUE(std::regex_search(plots[0].svg, m, slope_text));
  EXPECT_NEAR(std::stod(m[1]), 1.0, 0.01);
  EXPECT_EQ(m[1].str(), "1.000");
  ASSERT_TRUE(std::regex_search(plots[1].svg, m, slope_text));
  EXPECT_EQ(m[1].str(), "-0.500");

  const ConvergenceReport r7 = synthetic_report(0.7);
  std::ostringstream expect;
  expect << std::fixed << std::setprecision(3) << r7.arms[0].rate_h->slope;
  ASSERT_TRUE(std::regex_search(render_report(r7)[0].svg, m, slope_text));
  EXPECT_EQ(m[1].str(), expect.str());
}

TEST(Plot, SinglePolylineAndGuides) {
  const ConvergenceReport r = synthetic_report(1.0, 2);
  for (const auto& p : render_report(r)) {
    const std::string& s = p.svg;
    std::size_t polylines = 0;
    for (std::size_t pos = s.find("<polyline"); pos != std::string::npos; pos = s.find("<polyline", pos + 1)) ++polylines;
    EXPECT_EQ(polylines, 1u);
    std::size_t guides = 0;
    for (std::size_t pos = s.find("class=\"guide\""); pos != std::string::npos; pos = s.find("class=\"guide\"", pos + 1)) ++guides;
    EXPECT_EQ(guides, 2u);
  }
}

TEST(Plot, GuideCoordinatesByHand) {
  const ConvergenceReport r = synthetic_report(1.0);
  const std::string svg = render_report(r)[0].svg;
  // Points: h in [0.05, 0.4], error 0.8 h in [0.04, 0.32]; guides through (0.4, 0.32)
  // with slope 0.5 reach 0.32 * sqrt(1/8) = 0.11314 and slope 1 reach 0.04 at h = 0.05.
  // Decade axes: x in [1e-2, 1e0], y in [1e-2, 1e0].
  const auto px = [](double x) { return 80.0 + (std::log10(x) + 2.0) / 2.0 * 520.0; };
  const auto py = [](double y) { return 40.0 + (1.0 - (std::log10(y) + 2.0) / 2.0) * 380.0; };
  std::smatch m;
  const std::regex half("class=\"guide\" data-slope=\"0.50\" x1=\"([0-9.]+)\" y1=\"([0-9.]+)\" x2=\"([0-9.]+)\" y2=\"([0-9.]+)\"");
  ASSERT_TRUE(std::regex_search(svg, m, half));
  EXPECT_NEAR(std::stod(m[1]), px(0.05), 0.006);
  EXPECT_NEAR(std::stod(m[2]), py(0.32 * std::sqrt(0.125)), 0.006);
  EXPECT_NEAR(std::stod(m[3]), px(0.4), 0.006);
  EXPECT_NEAR(std::stod(m[4]), py(0.32), 0.006);
  const std::regex one("class=\"guide\" data-slope=\"1.00\" x1=\"([0-9.]+)\" y1=\"([0-9.]+)\"");
  ASSERT_TRUE(std::regex_search(svg, m, one));
  EXPECT_NEAR(std::stod(m[2]), py(0.04), 0.006);
  const auto pts = numbers(svg.substr(svg.find("points=\"")));
  EXPECT_NEAR(pts[0], px(0.4), 0.006);
  EXPECT_NEAR(pts[1], py(0.32), 0.006);
}

TEST(Plot, RejectsSingleLevel) {
  EXPECT_THROW(render_report(synthetic_report(1.0, 1)), InvalidArgument);
}
