#include "jdfem/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "jdfem/error.hpp"

namespace jdfem {

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a number, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

MeshMode parse_mesh(const std::string& key, const std::string& t) {
  if (t == "adapted") return MeshMode::Adapted;
  if (t == "standard") return MeshMode::Standard;
  throw ConfigError(key, "expected adapted or standard, got '" + t + "'");
}

struct Entry {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

Entry real(std::string key, double ExperimentConfig::*field) {
  return Entry{std::move(key),
               [field](ExperimentConfig& c, const std::string& k, std::string_view v) {
                 c.*field = parse_double(k, v);
               },
               [field](const ExperimentConfig& c) { return format_double(c.*field); }};
}

Entry count(std::string key, std::size_t ExperimentConfig::*field) {
  return Entry{std::move(key),
               [field](ExperimentConfig& c, const std::string& k, std::string_view v) {
                 c.*field = static_cast<std::size_t>(parse_u64(k, v));
               },
               [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back(Entry{"subordinator.family",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        const std::string s = trim(v);
                        if (s == "poisson") {
                          c.law.family = SubordinatorLaw::Family::Poisson;
                        } else if (s == "gamma") {
                          c.law.family = SubordinatorLaw::Family::Gamma;
                        } else {
                          throw ConfigError(k, "expected poisson or gamma, got '" + s + "'");
                        }
                      },
                      [](const ExperimentConfig& c) {
                        return std::string(c.law.family == SubordinatorLaw::Family::Poisson
                                               ? "poisson"
                                               : "gamma");
                      }});
    t.push_back(Entry{"subordinator.intensity",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        c.law.intensity = parse_double(k, v);
                      },
                      [](const ExperimentConfig& c) { return format_double(c.law.intensity); }});
    t.push_back(Entry{"subordinator.shape",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        c.law.shape = parse_double(k, v);
                      },
                      [](const ExperimentConfig& c) { return format_double(c.law.shape); }});
    t.push_back(Entry{"subordinator.rate",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        c.law.rate = parse_double(k, v);
                      },
                      [](const ExperimentConfig& c) { return format_double(c.law.rate); }});
    t.push_back(Entry{"subordinator.method",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        const std::string s = trim(v);
                        if (s == "exact") {
                          c.method = PathMethod::Exact;
                        } else if (s == "grid") {
                          c.method = PathMethod::Grid;
                        } else {
                          throw ConfigError(k, "expected exact or grid, got '" + s + "'");
                        }
                      },
                      [](const ExperimentConfig& c) { return std::string(to_string(c.method)); }});
    t.push_back(real("subordinator.downscale", &ExperimentConfig::downscale));
    t.push_back(real("fields.sigma1", &ExperimentConfig::sigma1));
    t.push_back(real("fields.r1", &ExperimentConfig::r1));
    t.push_back(real("fields.sigma2", &ExperimentConfig::sigma2));
    t.push_back(real("fields.r2", &ExperimentConfig::r2));
    t.push_back(real("coefficient.abar", &ExperimentConfig::abar));
    t.push_back(real("coefficient.phi1", &ExperimentConfig::phi1_amplitude));
    t.push_back(real("coefficient.phi2", &ExperimentConfig::phi2_slope));
    t.push_back(real("coefficient.K", &ExperimentConfig::cutoff_k));
    t.push_back(real("coefficient.A", &ExperimentConfig::cutoff_a));
    t.push_back(Entry{"pde.bc",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        const std::string s = trim(v);
                        if (s == "mixed") {
                          c.bc = BoundarySpec::Mode::Mixed;
                        } else if (s == "dirichlet") {
                          c.bc = BoundarySpec::Mode::HomogeneousDirichlet;
                        } else {
                          throw ConfigError(k, "expected mixed or dirichlet, got '" + s + "'");
                        }
                      },
                      [](const ExperimentConfig& c) { return std::string(to_string(c.bc)); }});
    t.push_back(real("pde.source", &ExperimentConfig::source));
    t.push_back(real("levels.h_base", &ExperimentConfig::h_base));
    t.push_back(real("levels.ratio", &ExperimentConfig::h_ratio));
    t.push_back(count("levels.count", &ExperimentConfig::levels));
    t.push_back(count("levels.reference", &ExperimentConfig::reference_level));
    t.push_back(Entry{"levels.reference_mesh",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        c.reference_mesh = parse_mesh(k, trim(v));
                      },
                      [](const ExperimentConfig& c) {
                        return std::string(to_string(c.reference_mesh));
                      }});
    t.push_back(count("sampling.samples", &ExperimentConfig::samples));
    t.push_back(real("sampling.rel_std", &ExperimentConfig::rel_std));
    t.push_back(count("sampling.max_samples", &ExperimentConfig::max_samples));
    t.push_back(real("equilibration.gamma", &ExperimentConfig::gamma));
    t.push_back(real("equilibration.rc", &ExperimentConfig::rc));
    t.push_back(real("equilibration.kappa_adapted", &ExperimentConfig::kappa_adapted));
    t.push_back(real("equilibration.kappa_standard", &ExperimentConfig::kappa_standard));
    t.push_back(real("equilibration.kappa_reference", &ExperimentConfig::kappa_reference));
    t.push_back(Entry{"run.seed",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        c.seed = parse_u64(k, v);
                      },
                      [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    t.push_back(Entry{"run.arms",
                      [](ExperimentConfig& c, const std::string& k, std::string_view v) {
                        std::vector<MeshMode> arms;
                        std::string item;
                        std::istringstream in{std::string(v)};
                        while (std::getline(in, item, ',')) {
                          const std::string s = trim(item);
                          if (!s.empty()) arms.push_back(parse_mesh(k, s));
                        }
                        c.arms = std::move(arms);
                      },
                      [](const ExperimentConfig& c) {
                        std::string out;
                        for (std::size_t i = 0; i < c.arms.size(); ++i) {
                          if (i) out += ",";
                          out += to_string(c.arms[i]);
                        }
                        return out;
                      }});
    return t;
  }();
  return table;
}

const Entry& find_entry(std::string_view key) {
  for (const Entry& e : entries()) {
    if (e.key == key) return e;
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const Entry& e = find_entry(key);
  e.set(config, e.key, value);
}

std::string get_config_value(const ExperimentConfig& config, std::string_view key) {
  return find_entry(key).get(config);
}

ExperimentConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty() || body.empty()) {
      bool known = false;
      for (const Entry& e : entries()) known = known || e.key.starts_with(section + ".");
      if (!body.data().empty() || !known) {
        throw ConfigError(section, body.data().empty() ? "unknown section" : "key outside of a section");
      }
    }
    for (const auto& [name, node] : body) {
      set_config_value(config, section + "." + name, node.data());
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string echo_config(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Entry& e : entries()) {
    const auto dot = e.key.find('.');
    const std::string s = e.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << e.key.substr(dot + 1) << " = " << e.get(config) << '\n';
  }
  return out.str();
}

}  // namespace jdfem
