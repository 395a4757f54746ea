#include "jdfem/jdfem.h"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "jdfem/config.hpp"
#include "jdfem/error.hpp"
#include "jdfem/experiment.hpp"
#include "jdfem/report.hpp"

struct jdfem_config {
  jdfem::ExperimentConfig value;
};

struct jdfem_report {
  jdfem::ConvergenceReport value;
};

struct jdfem_string {
  std::string value;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_key;

template <class F>
jdfem_status guarded(F&& body) {
  g_last_error.clear();
  g_last_key.clear();
  try {
    body();
    return JDFEM_OK;
  } catch (const jdfem::ConfigError& e) {
    g_last_error = e.what();
    g_last_key = e.key();
    return JDFEM_ERR_CONFIG;
  } catch (const jdfem::InvalidArgument& e) {
    g_last_error = e.what();
    return JDFEM_ERR_INVALID_ARGUMENT;
  } catch (const jdfem::NumericalError& e) {
    g_last_error = e.what();
    return JDFEM_ERR_NUMERICAL;
  } catch (const jdfem::IoError& e) {
    g_last_error = e.what();
    return JDFEM_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return JDFEM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return JDFEM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return JDFEM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw jdfem::InvalidArgument(std::string(what) + " must not be NULL");
}

jdfem_string* make_string(std::string s) { return new jdfem_string{std::move(s)}; }

std::ofstream open_out(const char* path, bool binary) {
  need(path, "output path");
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw jdfem::IoError(std::string("cannot open ") + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const char* path) {
  out.close();
  if (!out) throw jdfem::IoError(std::string("write failed for ") + path);
}

struct Prepared {
  jdfem::Experiment experiment;
  jdfem::Discretization disc;
  jdfem::Experiment::Inputs inputs;
};

Prepared prepare(const jdfem_config* config, const jdfem_sample_spec* spec) {
  need(config, "config");
  need(spec, "sample spec");
  jdfem::Experiment experiment(config->value);
  const jdfem::MeshMode mode =
      spec->mesh == JDFEM_MESH_STANDARD ? jdfem::MeshMode::Standard : jdfem::MeshMode::Adapted;
  const jdfem::Discretization disc =
      spec->level == 0 ? experiment.reference() : experiment.level(mode, spec->level);
  auto inputs = experiment.draw(spec->index);
  return Prepared{std::move(experiment), disc, std::move(inputs)};
}

void write_metadata(const char* path, const Prepared& p, const jdfem_sample_spec* spec,
                    const jdfem::CoefficientSample& a, std::uint32_t n) {
  if (path == nullptr) return;
  const jdfem::ExperimentConfig& cfg = p.experiment.config();
  const nlohmann::json j = {
      {"version", jdfem::kVersion},
      {"seed", cfg.seed},
      {"index", spec->index},
      {"level", spec->level},
      {"mesh", jdfem::to_string(p.disc.mesh)},
      {"h", p.disc.h},
      {"eps_w", p.disc.eps_w},
      {"eps_l", p.disc.eps_l},
      {"w1_step", a.w1().grid().step(0)},
      {"w2_step", a.w2().grid().step(0)},
      {"path_step", a.l1().grid_step()},
      {"path_method", jdfem::to_string(cfg.method)},
      {"K", cfg.cutoff_k},
      {"A", std::isinf(cfg.cutoff_a) ? nlohmann::json("inf") : nlohmann::json(cfg.cutoff_a)},
      {"raster_n", n},
      {"raster_layout", "cell centres ((i + 1/2) / n, (j + 1/2) / n), x fastest"},
      {"config", jdfem::echo_config(cfg)}};
  std::ofstream out = open_out(path, false);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_lattice(const jdfem::LatticeField2D& field, jdfem_format format, const char* path) {
  std::ofstream out = open_out(path, format == JDFEM_FORMAT_BINARY);
  if (format == JDFEM_FORMAT_BINARY) {
    jdfem::write_field_binary(field, out);
  } else {
    jdfem::write_field_csv(field, out);
  }
  finish(out, path);
}

}  // namespace

extern "C" {

const char* jdfem_version(void) { return jdfem::kVersion; }

const char* jdfem_status_name(jdfem_status status) {
  switch (status) {
    case JDFEM_OK:
      return "ok";
    case JDFEM_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case JDFEM_ERR_CONFIG:
      return "config_error";
    case JDFEM_ERR_NUMERICAL:
      return "numerical_error";
    case JDFEM_ERR_IO:
      return "io_error";
    case JDFEM_ERR_INTERNAL:
      return "internal_error";
  }
  return "unknown";
}

const char* jdfem_last_error(void) { return g_last_error.c_str(); }
const char* jdfem_last_error_key(void) { return g_last_key.c_str(); }

const char* jdfem_string_data(const jdfem_string* s) { return s ? s->value.c_str() : ""; }
size_t jdfem_string_size(const jdfem_string* s) { return s ? s->value.size() : 0; }
void jdfem_string_free(jdfem_string* s) { delete s; }

jdfem_status jdfem_config_default(jdfem_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new jdfem_config{};
  });
}

jdfem_status jdfem_config_load(const char* path, jdfem_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new jdfem_config{jdfem::load_config(path)};
  });
}

jdfem_status jdfem_config_parse(const char* text, jdfem_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new jdfem_config{jdfem::parse_config(text)};
  });
}

jdfem_status jdfem_config_set(jdfem_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    jdfem::set_config_value(config->value, key, value);
  });
}

jdfem_status jdfem_config_get(const jdfem_config* config, const char* key, jdfem_string** out) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(out, "out");
    *out = make_string(jdfem::get_config_value(config->value, key));
  });
}

jdfem_status jdfem_config_validate(const jdfem_config* config) {
  return guarded([&] {
    need(config, "config");
    config->value.validate();
  });
}

jdfem_status jdfem_config_echo(const jdfem_config* config, jdfem_string** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = make_string(jdfem::echo_config(config->value));
  });
}

void jdfem_config_free(jdfem_config* config) { delete config; }

jdfem_status jdfem_write_field(const jdfem_config* config, const jdfem_sample_spec* spec,
                               int which, jdfem_format format, const char* path) {
  return guarded([&] {
    if (which != 1 && which != 2) throw jdfem::InvalidArgument("field selector must be 1 or 2");
    const Prepared p = prepare(config, spec);
    const jdfem::CoefficientSample a = p.experiment.coefficient(p.inputs, p.disc);
    write_lattice(which == 1 ? a.w1() : a.w2(), format, path);
  });
}

jdfem_status jdfem_write_paths(const jdfem_config* config, const jdfem_sample_spec* spec,
                               const char* path_l1, const char* path_l2) {
  return guarded([&] {
    const Prepared p = prepare(config, spec);
    const jdfem::CoefficientSample a = p.experiment.coefficient(p.inputs, p.disc);
    std::ofstream o1 = open_out(path_l1, false);
    jdfem::write_path_csv(a.l1(), o1);
    finish(o1, path_l1);
    std::ofstream o2 = open_out(path_l2, false);
    jdfem::write_path_csv(a.l2(), o2);
    finish(o2, path_l2);
  });
}

jdfem_status jdfem_write_coefficient(const jdfem_config* config, const jdfem_sample_spec* spec,
                                     jdfem_format format, uint32_t n, const char* path,
                                     const char* metadata_path) {
  return guarded([&] {
    const Prepared p = prepare(config, spec);
    const jdfem::CoefficientSample a = p.experiment.coefficient(p.inputs, p.disc);
    write_lattice(jdfem::sample_raster([&a](double x, double y) { return a(x, y); }, n), format,
                  path);
    write_metadata(metadata_path, p, spec, a, n);
  });
}

jdfem_status jdfem_write_solution(const jdfem_config* config, const jdfem_sample_spec* spec,
                                  jdfem_format format, uint32_t n, const char* path,
                                  const char* mesh_path, const char* metadata_path) {
  return guarded([&] {
    const Prepared p = prepare(config, spec);
    const jdfem::FemSolution u = p.experiment.solve(p.inputs, p.disc);
    write_lattice(jdfem::rasterize(u, n).value_field(), format, path);
    if (mesh_path != nullptr) {
      std::ofstream out = open_out(mesh_path, false);
      const auto bc = p.experiment.config().bc == jdfem::BoundarySpec::Mode::HomogeneousDirichlet
                          ? jdfem::BoundarySpec::homogeneous_dirichlet()
                          : jdfem::BoundarySpec::mixed();
      jdfem::write_mesh_text(u.mesh(), bc, out);
      finish(out, mesh_path);
    }
    write_metadata(metadata_path, p, spec, p.experiment.coefficient(p.inputs, p.disc), n);
  });
}

jdfem_status jdfem_run_experiment(const jdfem_config* config, uint32_t workers,
                                  jdfem_progress_fn progress, void* user, jdfem_report** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    jdfem::RunOptions options;
    options.workers = workers == 0 ? 1 : workers;
    if (progress != nullptr) {
      options.progress = [progress, user](const std::string& line) { progress(line.c_str(), user); };
    }
    *out = new jdfem_report{jdfem::run_experiment(config->value, options)};
  });
}

jdfem_status jdfem_report_from_json(const char* text, jdfem_report** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new jdfem_report{jdfem::report_from_json(text)};
  });
}

jdfem_status jdfem_report_json(const jdfem_report* report, jdfem_string** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = make_string(jdfem::report_to_json(report->value));
  });
}

size_t jdfem_report_arm_count(const jdfem_report* report) {
  return report ? report->value.arms.size() : 0;
}

const char* jdfem_report_arm_name(const jdfem_report* report, size_t arm) {
  if (report == nullptr || arm >= report->value.arms.size()) return nullptr;
  return jdfem::to_string(report->value.arms[arm].mesh);
}

jdfem_status jdfem_report_level_csv(const jdfem_report* report, size_t arm, jdfem_string** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    if (arm >= report->value.arms.size()) throw jdfem::InvalidArgument("arm index out of range");
    std::ostringstream csv;
    jdfem::write_level_csv(report->value.arms[arm], report->value.seed, csv);
    *out = make_string(csv.str());
  });
}

jdfem_status jdfem_report_rate(const jdfem_report* report, size_t arm, double* slope_h,
                               double* slope_dofs) {
  return guarded([&] {
    need(report, "report");
    if (arm >= report->value.arms.size()) throw jdfem::InvalidArgument("arm index out of range");
    const jdfem::ArmReport& a = report->value.arms[arm];
    if (!a.rate_h || !a.rate_dofs) throw jdfem::NumericalError("arm has no fitted rate");
    if (slope_h) *slope_h = a.rate_h->slope;
    if (slope_dofs) *slope_dofs = a.rate_dofs->slope;
  });
}

size_t jdfem_report_flag_count(const jdfem_report* report) {
  if (report == nullptr) return 0;
  size_t n = report->value.flags.size();
  for (const auto& arm : report->value.arms) n += arm.flags.size();
  return n;
}

jdfem_status jdfem_report_render(const jdfem_report* report, jdfem_plot_kind kind,
                                 jdfem_string** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    const auto plots = jdfem::render_report(report->value);
    const jdfem::PlotKind want =
        kind == JDFEM_PLOT_ERROR_VS_DOFS ? jdfem::PlotKind::ErrorVsDofs : jdfem::PlotKind::ErrorVsH;
    for (const auto& p : plots) {
      if (p.kind == want) *out = make_string(p.svg);
    }
  });
}

void jdfem_report_free(jdfem_report* report) { delete report; }

jdfem_status jdfem_matern32(double variance, double correlation_length, double distance,
                            double* out) {
  return guarded([&] {
    need(out, "out");
    *out = jdfem::cov_eval(jdfem::CovarianceModel::matern32(variance, correlation_length),
                           distance);
  });
}

jdfem_status jdfem_tail_probability(int family, double p1, double p2, double threshold,
                                    double horizon, double* out) {
  return guarded([&] {
    need(out, "out");
    if (family != 0 && family != 1) throw jdfem::InvalidArgument("family must be 0 or 1");
    const auto law =
        family == 0 ? jdfem::SubordinatorLaw::poisson(p1) : jdfem::SubordinatorLaw::gamma(p1, p2);
    *out = jdfem::tail_probability(law, threshold, horizon);
  });
}

jdfem_status jdfem_equilibrate(double h, double kappa, double gamma, double rc, double* eps_w,
                               double* eps_l) {
  return guarded([&] {
    need(eps_w, "eps_w");
    need(eps_l, "eps_l");
    const auto [w, l] = jdfem::equilibrate(h, kappa, gamma, rc);
    *eps_w = w;
    *eps_l = l;
  });
}

}  // extern "C"
