#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <pdds/dataset.hpp>
#include <pdds/errors.hpp>

namespace pdds::cli {

namespace {

namespace pt = boost::property_tree;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  double out = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  long long out = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 0) throw ConfigError(key + ": must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(trim(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

using Section = std::pair<std::string, std::vector<Field>>;

// clang-format off
#define PDDS_NUM(sec, name, member)                                                     \
  Field{name, [](const ExperimentConfig& c) { return fmt(c.member); },                  \
        [](ExperimentConfig& c, const std::string& v) { c.member = to_double(sec "." name, v); }}
#define PDDS_INT(sec, name, member, type)                                               \
  Field{name, [](const ExperimentConfig& c) { return std::to_string(c.member); },       \
        [](ExperimentConfig& c, const std::string& v) {                                 \
          c.member = static_cast<type>(to_int(sec "." name, v)); }}
#define PDDS_UINT(sec, name, member)                                                    \
  Field{name, [](const ExperimentConfig& c) { return std::to_string(c.member); },       \
        [](ExperimentConfig& c, const std::string& v) { c.member = to_uint(sec "." name, v); }}
#define PDDS_BOOL(sec, name, member)                                                    \
  Field{name, [](const ExperimentConfig& c) { return bool_str(c.member); },             \
        [](ExperimentConfig& c, const std::string& v) { c.member = to_bool(sec "." name, v); }}
#define PDDS_STR(sec, name, member)                                                     \
  Field{name, [](const ExperimentConfig& c) { return c.member; },                       \
        [](ExperimentConfig& c, const std::string& v) { c.member = trim(v); }}
// clang-format on

const std::vector<Section>& sections() {
  static const std::vector<Section> table = {
      {"target",
       {PDDS_STR("target", "name", target.name), PDDS_INT("target", "dim", target.dim, int),
        PDDS_NUM("target", "mu", target.mu), PDDS_NUM("target", "sigma", target.sigma),
        PDDS_NUM("target", "funnel_sigma", target.funnel_sigma),
        PDDS_UINT("target", "seed", target.seed),
        PDDS_INT("target", "components", target.components, int),
        PDDS_NUM("target", "mean_range", target.mean_range),
        PDDS_BOOL("target", "normalize", target.normalize),
        PDDS_STR("target", "data_path", target.data_path),
        PDDS_NUM("target", "prior_sigma", target.prior_sigma),
        PDDS_BOOL("target", "standardize", target.standardize),
        PDDS_BOOL("target", "intercept", target.intercept)}},
      {"schedule",
       {Field{"kind", [](const ExperimentConfig& c) { return to_string(c.schedule.kind); },
              [](ExperimentConfig& c, const std::string& v) {
                c.schedule.kind = schedule_kind_from_string(trim(v));
              }},
        PDDS_INT("schedule", "steps", schedule.steps, int),
        PDDS_NUM("schedule", "offset", schedule.offset),
        PDDS_NUM("schedule", "beta0", schedule.beta0),
        PDDS_NUM("schedule", "betaT", schedule.betaT)}},
      {"smc",
       {PDDS_INT("smc", "particles", smc.particles, std::size_t),
        Field{"resample", [](const ExperimentConfig& c) { return to_string(c.smc.resample); },
              [](ExperimentConfig& c, const std::string& v) {
                c.smc.resample = resample_scheme_from_string(trim(v));
              }},
        Field{"integrator", [](const ExperimentConfig& c) { return to_string(c.smc.integrator); },
              [](ExperimentConfig& c, const std::string& v) {
                c.smc.integrator = integrator_from_string(trim(v));
              }},
        Field{"mode",
              [](const ExperimentConfig& c) {
                return std::string(c.mode == SmcMode::adaptive ? "adaptive" : "every_step");
              },
              [](ExperimentConfig& c, const std::string& v) {
                const auto s = trim(v);
                if (s == "adaptive") {
                  c.mode = SmcMode::adaptive;
                } else if (s == "every_step") {
                  c.mode = SmcMode::every_step;
                } else {
                  throw ConfigError("smc.mode: expected adaptive or every_step");
                }
              }},
        PDDS_NUM("smc", "ess_threshold", smc.ess_threshold)}},
      {"mcmc",
       {PDDS_INT("mcmc", "steps", mcmc.n_steps, int),
        Field{"step_times",
              [](const ExperimentConfig& c) {
                std::vector<double> t;
                for (const auto& p : c.mcmc.step_sizes) t.push_back(p.first);
                return join(t);
              },
              [](ExperimentConfig& c, const std::string& v) {
                const auto t = to_list("mcmc.step_times", v);
                c.mcmc.step_sizes.resize(t.size());
                for (std::size_t i = 0; i < t.size(); ++i) c.mcmc.step_sizes[i].first = t[i];
              }},
        Field{"step_sizes",
              [](const ExperimentConfig& c) {
                std::vector<double> g;
                for (const auto& p : c.mcmc.step_sizes) g.push_back(p.second);
                return join(g);
              },
              [](ExperimentConfig& c, const std::string& v) {
                const auto g = to_list("mcmc.step_sizes", v);
                if (g.size() != c.mcmc.step_sizes.size()) {
                  throw ConfigError("mcmc.step_sizes must list one value per mcmc.step_times entry");
                }
                for (std::size_t i = 0; i < g.size(); ++i) c.mcmc.step_sizes[i].second = g[i];
              }}}},
      {"potential",
       {Field{"variant", [](const ExperimentConfig& c) { return to_string(c.potential); },
              [](ExperimentConfig& c, const std::string& v) {
                c.potential = potential_variant_from_string(trim(v));
              }},
        PDDS_STR("potential", "checkpoint", checkpoint)}},
      {"net",
       {PDDS_INT("net", "hidden", net.hidden, int), PDDS_INT("net", "layers", net.layers, int),
        PDDS_INT("net", "encoder_layers", net.encoder_layers, int),
        PDDS_INT("net", "embed_dim", net.embed_dim, int),
        PDDS_UINT("net", "init_seed", train.init_seed)}},
      {"train",
       {Field{"loss", [](const ExperimentConfig& c) { return to_string(c.train.loss); },
              [](ExperimentConfig& c, const std::string& v) {
                c.train.loss = loss_kind_from_string(trim(v));
              }},
        PDDS_INT("train", "batch", train.batch, int),
        PDDS_INT("train", "updates", train.updates, int),
        PDDS_INT("train", "rounds", train.rounds, int),
        PDDS_NUM("train", "lr", train.adam.learning_rate),
        PDDS_NUM("train", "decay_rate", train.adam.decay_rate),
        PDDS_INT("train", "decay_every", train.adam.decay_every, int)}},
      {"vi",
       {PDDS_BOOL("vi", "enabled", vi_enabled), PDDS_INT("vi", "steps", vi.steps, int),
        PDDS_NUM("vi", "lr", vi.learning_rate), PDDS_INT("vi", "n_mc", vi.n_mc, int),
        PDDS_UINT("vi", "seed", vi_seed), PDDS_STR("vi", "load_path", vi_load_path)}},
      {"run",
       {Field{"seeds", [](const ExperimentConfig& c) { return join_seeds(c.seeds); },
              [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); }},
        PDDS_STR("run", "out", out), PDDS_INT("run", "threads", threads, int),
        PDDS_INT("run", "thin", thin, std::size_t)}},
      {"eval",
       {PDDS_INT("eval", "exact_samples", eval_exact_samples, std::size_t),
        PDDS_BOOL("eval", "sinkhorn", eval_sinkhorn_enabled),
        PDDS_NUM("eval", "sinkhorn_tol", eval_sinkhorn.tol),
        PDDS_INT("eval", "sinkhorn_max_iter", eval_sinkhorn.max_iter, int),
        PDDS_NUM("eval", "radius", eval_radius)}},
      {"demo",
       {PDDS_NUM("demo", "grid_min", demo_min), PDDS_NUM("demo", "grid_max", demo_max),
        PDDS_INT("demo", "grid_points", demo_points, int),
        Field{"times", [](const ExperimentConfig& c) { return join(c.demo_times); },
              [](ExperimentConfig& c, const std::string& v) {
                c.demo_times = to_list("demo.times", v);
              }}}},
  };
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& [name, fields] : sections()) {
    if (name != section) continue;
    for (const auto& f : fields) {
      if (lower(f.key) == lower(key)) return &f;
    }
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  return std::any_of(sections().begin(), sections().end(),
                     [&](const Section& s) { return s.first == section; });
}

void validate(const ExperimentConfig& c) {
  static const std::vector<std::string> targets{"gaussian", "standard_normal", "mixture",
                                                "funnel", "gmm", "logreg"};
  if (std::find(targets.begin(), targets.end(), c.target.name) == targets.end()) {
    throw ConfigError("target.name: unknown target '" + c.target.name + "'");
  }
  if (c.target.dim < 1) throw ConfigError("target.dim must be >= 1");
  if (c.target.name == "logreg") {
    if (c.target.data_path.empty()) throw ConfigError("target.data_path is required for logreg");
  }
  auto must_exist = [](const std::string& key, const std::string& path) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      throw ConfigError(key + ": file '" + path + "' does not exist");
    }
  };
  must_exist("target.data_path", c.target.data_path);
  must_exist("potential.checkpoint", c.checkpoint);
  must_exist("vi.load_path", c.vi_load_path);
  if (c.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  if (c.threads < 0) throw ConfigError("run.threads must be >= 0");
  if (c.thin < 1) throw ConfigError("run.thin must be >= 1");
  if (!(c.eval_radius > 0.0)) throw ConfigError("eval.radius must be positive");
  if (!(c.eval_sinkhorn.tol > 0.0) || c.eval_sinkhorn.max_iter < 1) {
    throw ConfigError("eval.sinkhorn_tol and eval.sinkhorn_max_iter must be positive");
  }
  if (c.demo_points < 2 || !(c.demo_max > c.demo_min)) {
    throw ConfigError("demo grid needs grid_points >= 2 and grid_max > grid_min");
  }
  if (c.vi.steps < 1 || c.vi.n_mc < 1 || !(c.vi.learning_rate > 0.0)) {
    throw ConfigError("vi.steps, vi.n_mc and vi.lr must be positive");
  }
  try {
    NoiseSchedule check(c.schedule);
    c.smc.validate();
    c.mcmc.validate();
    c.train.validate();
    PotentialNetwork::parameter_count(1, c.net);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, char** envp) {
  // The INI reader only knows whole-line ';' comments. Drop '#' lines and
  // cut trailing comments that start with whitespace then ';' or '#'.
  std::string cleaned;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty() && t[0] == '#') continue;
      for (std::size_t i = 1; i < line.size(); ++i) {
        if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
          line.resize(i);
          break;
        }
      }
      cleaned += line + '\n';
    }
  }
  pt::ptree tree;
  try {
    std::istringstream in(cleaned);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config: key '" + section + "' must appear inside a [section]");
    }
    const std::string sec = lower(section);
    if (!known_section(sec)) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& entry : body) {
      if (!find_field(sec, entry.first)) {
        throw ConfigError("config: unknown key " + sec + "." + entry.first);
      }
    }
  }

  ExperimentConfig c;
  auto apply = [&](const std::string& sec, const std::string& key, const std::string& value) {
    const Field* f = find_field(sec, key);
    if (!f) throw ConfigError("unknown key " + sec + "." + key);
    try {
      f->set(c, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(sec + "." + key + ": " + e.what());
    }
  };
  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    for (const auto& [key, value] : body) values[lower(section) + "." + lower(key)] = value.data();
  }
  if (envp != nullptr) {
    for (char** e = envp; *e != nullptr; ++e) {
      const std::string entry = *e;
      if (entry.rfind("PDDS_", 0) != 0) continue;
      const auto eq = entry.find('=');
      if (eq == std::string::npos) continue;
      const std::string name = lower(entry.substr(5, eq - 5));
      const auto us = name.find('_');
      if (us == std::string::npos) {
        throw ConfigError("environment override " + entry.substr(0, eq) + " has no key part");
      }
      const std::string sec = name.substr(0, us);
      const std::string key = name.substr(us + 1);
      if (!find_field(sec, key)) {
        throw ConfigError("environment override " + entry.substr(0, eq) +
                          " does not name a config key");
      }
      values[sec + "." + key] = entry.substr(eq + 1);
    }
  }
  auto take = [&](const std::string& full) {
    auto it = values.find(full);
    if (it == values.end()) return;
    const auto dot = full.find('.');
    apply(full.substr(0, dot), full.substr(dot + 1), it->second);
    values.erase(it);
  };
  // The step-size table's times must be applied before its values.
  take("mcmc.step_times");
  take("mcmc.step_sizes");
  while (!values.empty()) take(values.begin()->first);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, char** envp) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), envp);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, fields] : sections()) {
    out += "[" + name + "]\n";
    for (const auto& f : fields) out += f.key + " = " + f.get(config) + "\n";
    out += "\n";
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto a = to_uint("seeds", item.substr(0, dash));
      const auto b = to_uint("seeds", item.substr(dash + 1));
      if (b < a) throw ConfigError("seed range '" + item + "' is empty");
      if (b - a > 10'000'000) throw ConfigError("seed range '" + item + "' is too large");
      for (auto s = a; s <= b; ++s) out.push_back(s);
    } else {
      out.push_back(to_uint("seeds", item));
    }
  }
  if (out.empty()) throw ConfigError("empty seed list '" + text + "'");
  return out;
}

TargetPtr build_target(const ExperimentConfig& config) {
  const auto& t = config.target;
  try {
    if (t.name == "gaussian") return make_gaussian(t.mu, t.sigma);
    if (t.name == "standard_normal") return make_standard_normal(t.dim);
    if (t.name == "mixture") return make_mixture6();
    if (t.name == "funnel") return make_funnel(t.funnel_sigma);
    if (t.name == "gmm") {
      Gmm40Options o;
      o.dim = t.dim;
      o.seed = t.seed;
      o.components = t.components;
      o.mean_range = t.mean_range;
      o.normalize_weights = t.normalize;
      return make_gmm40(o);
    }
    if (t.name == "logreg") {
      DatasetOptions o;
      o.standardize = t.standardize;
      o.intercept = t.intercept;
      const Dataset data = load_dataset(t.data_path, o);
      return make_logreg(data.features, data.labels, t.prior_sigma);
    }
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
  throw ConfigError("target.name: unknown target '" + t.name + "'");
}

std::vector<Vec> mode_centers(const ExperimentConfig& config) {
  std::vector<MixtureComponent> comps;
  if (config.target.name == "mixture") {
    comps = mixture6_components();
  } else if (config.target.name == "gmm") {
    Gmm40Options o;
    o.dim = config.target.dim;
    o.seed = config.target.seed;
    o.components = config.target.components;
    o.mean_range = config.target.mean_range;
    o.normalize_weights = config.target.normalize;
    comps = gmm40_components(o);
  }
  std::vector<Vec> centers;
  for (const auto& c : comps) centers.push_back(c.mean);
  return centers;
}

}  // namespace pdds::cli
