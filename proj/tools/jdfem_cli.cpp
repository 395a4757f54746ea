// jdfem command-line driver. Talks to the library only through jdfem.h.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "jdfem/jdfem.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

// One JSON object per line on stderr.
void report_error(const std::string& status, const std::string& message,
                  const std::string& key = {}) {
  std::cerr << "{\"error\":\"" << escape(status) << "\"";
  if (!key.empty()) std::cerr << ",\"key\":\"" << escape(key) << "\"";
  std::cerr << ",\"message\":\"" << escape(message) << "\"}\n";
}

struct Failure {
  int exit_code;
};

[[noreturn]] void fail_status(jdfem_status status) {
  report_error(jdfem_status_name(status), jdfem_last_error(), jdfem_last_error_key());
  throw Failure{status == JDFEM_ERR_CONFIG ? kExitConfig : kExitRuntime};
}

void check(jdfem_status status) {
  if (status != JDFEM_OK) fail_status(status);
}

[[noreturn]] void fail(int code, const std::string& status, const std::string& message,
                       const std::string& key = {}) {
  report_error(status, message, key);
  throw Failure{code};
}

struct Text {
  jdfem_string* s = nullptr;
  ~Text() { jdfem_string_free(s); }
  std::string str() const { return std::string(jdfem_string_data(s), jdfem_string_size(s)); }
};

struct Config {
  jdfem_config* c = nullptr;
  ~Config() { jdfem_config_free(c); }
};

struct Report {
  jdfem_report* r = nullptr;
  ~Report() { jdfem_report_free(r); }
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool overwrite = false;
  unsigned level = 0;
  std::string mesh = "adapted";
  std::uint64_t index = 0;
  std::string format = "binary";
  unsigned raster = 800;
  int which = 1;
  std::string report;
};

// Seed precedence: --seed, then JDFEM_SEED, then the config file.
void load_config(const Options& opt, Config& cfg) {
  if (opt.config.empty()) {
    check(jdfem_config_default(&cfg.c));
  } else {
    check(jdfem_config_load(opt.config.c_str(), &cfg.c));
  }
  std::optional<std::string> seed;
  if (opt.seed) {
    seed = std::to_string(*opt.seed);
  } else if (const char* env = std::getenv("JDFEM_SEED"); env != nullptr && *env != '\0') {
    seed = env;
  }
  if (seed) {
    const jdfem_status st = jdfem_config_set(cfg.c, "run.seed", seed->c_str());
    if (st != JDFEM_OK) fail_status(st);
  }
  check(jdfem_config_validate(cfg.c));
}

// Outputs are staged in a sibling directory and renamed into place.
class OutputDir {
 public:
  OutputDir(const std::string& target, bool overwrite) : target_(target) {
    if (target.empty()) fail(kExitConfig, "usage_error", "--out is required");
    if (fs::exists(target_) && !overwrite) {
      fail(kExitRuntime, "output_exists",
           "output directory " + target_.string() + " exists; pass --overwrite to replace it");
    }
    const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    staging_ = parent / (target_.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }

  std::string file(const std::string& name) const { return (staging_ / name).string(); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(file(name), std::ios::binary);
    out << content;
    out.close();
    if (!out) fail(kExitRuntime, "io_error", "write failed for " + file(name));
  }

  void commit() {
    std::error_code ec;
    if (fs::exists(target_)) {
      const fs::path old = target_.string() + ".old-" + std::to_string(::getpid());
      fs::rename(target_, old, ec);
      if (ec) fail(kExitRuntime, "io_error", "cannot move aside " + target_.string());
      fs::rename(staging_, target_, ec);
      if (ec) {
        fs::rename(old, target_);
        fail(kExitRuntime, "io_error", "cannot rename output into " + target_.string());
      }
      fs::remove_all(old, ec);
    } else {
      fs::rename(staging_, target_, ec);
      if (ec) fail(kExitRuntime, "io_error", "cannot rename output into " + target_.string());
    }
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

jdfem_sample_spec sample_spec(const Options& opt) {
  jdfem_sample_spec spec{};
  spec.index = opt.index;
  spec.level = opt.level;
  if (opt.mesh == "adapted") {
    spec.mesh = JDFEM_MESH_ADAPTED;
  } else if (opt.mesh == "standard") {
    spec.mesh = JDFEM_MESH_STANDARD;
  } else {
    fail(kExitConfig, "usage_error", "--mesh must be adapted or standard", "mesh");
  }
  return spec;
}

jdfem_format format(const Options& opt) {
  if (opt.format == "binary") return JDFEM_FORMAT_BINARY;
  if (opt.format == "csv") return JDFEM_FORMAT_CSV;
  fail(kExitConfig, "usage_error", "--format must be binary or csv", "format");
}

std::string extension(const Options& opt) { return opt.format == "csv" ? ".csv" : ".bin"; }

void write_config_echo(const Config& cfg, const OutputDir& out) {
  Text echo;
  check(jdfem_config_echo(cfg.c, &echo.s));
  out.write("config.ini", echo.str());
}

int cmd_field(const Options& opt) {
  if (opt.which != 1 && opt.which != 2) fail(kExitConfig, "usage_error", "--which must be 1 or 2");
  Config cfg;
  load_config(opt, cfg);
  const auto spec = sample_spec(opt);
  const auto fmt = format(opt);
  OutputDir out(opt.out, opt.overwrite);
  const std::string name = "w" + std::to_string(opt.which) + extension(opt);
  check(jdfem_write_field(cfg.c, &spec, opt.which, fmt, out.file(name).c_str()));
  write_config_echo(cfg, out);
  out.commit();
  return kExitOk;
}

int cmd_path(const Options& opt) {
  Config cfg;
  load_config(opt, cfg);
  const auto spec = sample_spec(opt);
  OutputDir out(opt.out, opt.overwrite);
  check(jdfem_write_paths(cfg.c, &spec, out.file("l1.csv").c_str(), out.file("l2.csv").c_str()));
  write_config_echo(cfg, out);
  out.commit();
  return kExitOk;
}

int cmd_coeff(const Options& opt) {
  Config cfg;
  load_config(opt, cfg);
  const auto spec = sample_spec(opt);
  const auto fmt = format(opt);
  OutputDir out(opt.out, opt.overwrite);
  check(jdfem_write_coefficient(cfg.c, &spec, fmt, opt.raster,
                                out.file("coefficient" + extension(opt)).c_str(),
                                out.file("coefficient.json").c_str()));
  write_config_echo(cfg, out);
  out.commit();
  return kExitOk;
}

int cmd_solve(const Options& opt) {
  Config cfg;
  load_config(opt, cfg);
  const auto spec = sample_spec(opt);
  const auto fmt = format(opt);
  OutputDir out(opt.out, opt.overwrite);
  check(jdfem_write_solution(cfg.c, &spec, fmt, opt.raster,
                             out.file("solution" + extension(opt)).c_str(),
                             out.file("mesh.txt").c_str(), out.file("solution.json").c_str()));
  write_config_echo(cfg, out);
  out.commit();
  return kExitOk;
}

void progress_line(const char* line, void*) { std::cerr << line << '\n'; }

void write_plots(const Report& report, const OutputDir& out) {
  Text h;
  Text d;
  check(jdfem_report_render(report.r, JDFEM_PLOT_ERROR_VS_H, &h.s));
  check(jdfem_report_render(report.r, JDFEM_PLOT_ERROR_VS_DOFS, &d.s));
  out.write("error_vs_h.svg", h.str());
  out.write("error_vs_dofs.svg", d.str());
}

int cmd_converge(const Options& opt, bool quiet) {
  Config cfg;
  load_config(opt, cfg);
  OutputDir out(opt.out, opt.overwrite);
  Report report;
  check(jdfem_run_experiment(cfg.c, opt.workers, quiet ? nullptr : progress_line, nullptr,
                             &report.r));
  Text json;
  check(jdfem_report_json(report.r, &json.s));
  out.write("report.json", json.str());
  std::ostringstream rates;
  for (std::size_t a = 0; a < jdfem_report_arm_count(report.r); ++a) {
    const std::string arm = jdfem_report_arm_name(report.r, a);
    Text csv;
    check(jdfem_report_level_csv(report.r, a, &csv.s));
    out.write("levels_" + arm + ".csv", csv.str());
    double slope_h = 0.0;
    double slope_d = 0.0;
    if (jdfem_report_rate(report.r, a, &slope_h, &slope_d) == JDFEM_OK) {
      rates << arm << " rate_h=" << slope_h << " rate_dofs=" << slope_d << '\n';
    } else {
      rates << arm << " rate_h=none rate_dofs=none\n";
    }
  }
  out.write("rates.txt", rates.str());
  write_config_echo(cfg, out);
  Text probe;
  if (jdfem_report_render(report.r, JDFEM_PLOT_ERROR_VS_H, &probe.s) == JDFEM_OK) {
    write_plots(report, out);
  }
  out.commit();
  return kExitOk;
}

int cmd_plot(const Options& opt) {
  if (opt.report.empty()) fail(kExitConfig, "usage_error", "--report is required");
  std::ifstream in(opt.report);
  if (!in) fail(kExitRuntime, "io_error", "cannot open report " + opt.report);
  std::ostringstream text;
  text << in.rdbuf();
  Report report;
  check(jdfem_report_from_json(text.str().c_str(), &report.r));
  OutputDir out(opt.out, opt.overwrite);
  write_plots(report, out);
  out.commit();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subordinated random fields, jump-diffusion coefficients and FEM strong-error studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(jdfem_version()));
  Options opt;
  bool quiet = false;

  const auto common = [&](CLI::App* sub, bool sample) {
    sub->add_option("--config", opt.config, "Experiment configuration (INI)");
    sub->add_option("--seed", opt.seed, "Master seed (overrides JDFEM_SEED and the config)");
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_flag("--overwrite", opt.overwrite, "Replace an existing output directory");
    if (sample) {
      sub->add_option("--level", opt.level, "Discretization level (0 = reference)");
      sub->add_option("--mesh", opt.mesh, "Mesh for level > 0: adapted or standard");
      sub->add_option("--index", opt.index, "Sample index");
    }
  };
  auto* field = app.add_subcommand("field", "Dump a Gaussian random field lattice");
  common(field, true);
  field->add_option("--which", opt.which, "1 for W1, 2 for W2");
  field->add_option("--format", opt.format, "binary or csv");
  auto* path = app.add_subcommand("path", "Dump the subordinator paths");
  common(path, true);
  auto* coeff = app.add_subcommand("coeff", "Dump a coefficient raster");
  common(coeff, true);
  coeff->add_option("--format", opt.format, "binary or csv");
  coeff->add_option("--raster", opt.raster, "Raster resolution");
  auto* solve = app.add_subcommand("solve", "One pathwise solve, dump the solution raster");
  common(solve, true);
  solve->add_option("--format", opt.format, "binary or csv");
  solve->add_option("--raster", opt.raster, "Raster resolution");
  auto* converge = app.add_subcommand("converge", "Run a strong-error convergence study");
  common(converge, false);
  converge->add_option("--workers", opt.workers, "Worker threads");
  converge->add_flag("--quiet", quiet, "No progress lines");
  auto* plot = app.add_subcommand("plot", "Render SVG convergence plots from a report");
  plot->add_option("--report", opt.report, "report.json from converge")->required();
  plot->add_option("--out", opt.out, "Output directory")->required();
  plot->add_flag("--overwrite", opt.overwrite, "Replace an existing output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage_error", e.what());
    return kExitConfig;
  }

  try {
    if (*field) return cmd_field(opt);
    if (*path) return cmd_path(opt);
    if (*coeff) return cmd_coeff(opt);
    if (*solve) return cmd_solve(opt);
    if (*converge) return cmd_converge(opt, quiet);
    if (*plot) return cmd_plot(opt);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    report_error("internal_error", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
