#include "fluctsel/experiments/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "fluctsel/core/error.hpp"
#include "fluctsel/priors/priors.hpp"

namespace fluctsel {

const char* technique_name(Technique t) { return t == Technique::Laplace ? "laplace" : "full"; }

namespace {

template <class T>
T parse_scalar(const std::string& key, const std::string& v) {
  T out{};
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (v.empty() || ec != std::errc() || p != e)
    throw std::invalid_argument(key + ": not a valid number: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& s : split_list(v)) out.push_back(parse_scalar<T>(key, s));
  if (out.empty()) throw std::invalid_argument(key + ": empty list");
  return out;
}

std::vector<std::string> parse_priors(const std::string& key, const std::string& v) {
  auto out = split_list(v);
  if (out.empty()) throw std::invalid_argument(key + ": empty list");
  for (const auto& p : out) {
    if (p != "prior1" && p != "prior2" && p != "invgamma")
      throw std::invalid_argument(key + ": unknown prior '" + p + "'");
  }
  return out;
}

std::vector<Technique> parse_laplace(const std::string& key, const std::string& v) {
  if (v == "on") return {Technique::Laplace};
  if (v == "off") return {Technique::Full};
  if (v == "both") return {Technique::Laplace, Technique::Full};
  throw std::invalid_argument(key + ": expected on, off or both, got '" + v + "'");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

struct KeySpec {
  const char* key;
  const char* def;
  Setter set;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> t = {
      {"run.seed", "1", [](auto& c, auto& k, auto& v) { c.seed = parse_scalar<std::uint64_t>(k, v); }},
      {"run.workers", "1",
       [](auto& c, auto& k, auto& v) {
         c.workers = parse_scalar<int>(k, v);
         require(c.workers >= 1, k + ": must be >= 1");
       }},
      {"run.out", "out", [](auto& c, auto&, auto& v) { c.out = v; }},
      {"run.priors", "prior1,prior2", [](auto& c, auto& k, auto& v) { c.priors = parse_priors(k, v); }},
      {"run.laplace", "on", [](auto& c, auto& k, auto& v) { c.techniques = parse_laplace(k, v); }},
      {"design.tmax", "50",
       [](auto& c, auto& k, auto& v) {
         c.design.tmax = parse_scalar<int>(k, v);
         require(c.design.tmax >= 2, k + ": must be >= 2");
       }},
      {"design.n", "100",
       [](auto& c, auto& k, auto& v) {
         c.design.mean_n = parse_scalar<double>(k, v);
         require(c.design.mean_n > 0.0, k + ": must be > 0");
       }},
      {"design.phi_theta", "0.4",
       [](auto& c, auto& k, auto& v) {
         c.design.phi_theta = parse_scalar<double>(k, v);
         require(std::abs(c.design.phi_theta) < 1.0, k + ": must lie in (-1, 1)");
       }},
      {"design.mu_alpha", "2", [](auto& c, auto& k, auto& v) { c.design.mu[0] = parse_scalar<double>(k, v); }},
      {"design.mu_theta", "20", [](auto& c, auto& k, auto& v) { c.design.mu[1] = parse_scalar<double>(k, v); }},
      {"design.mu_omega", "3.5", [](auto& c, auto& k, auto& v) { c.design.mu[2] = parse_scalar<double>(k, v); }},
      {"design.sigma_theta", "20",
       [](auto& c, auto& k, auto& v) {
         c.design.sigma_theta = parse_scalar<double>(k, v);
         require(c.design.sigma_theta > 0.0, k + ": must be > 0");
       }},
      {"design.sigma_z", "20",
       [](auto& c, auto& k, auto& v) {
         c.design.sigma_z = parse_scalar<double>(k, v);
         require(c.design.sigma_z > 0.0, k + ": must be > 0");
       }},
      {"design.first_year", "1",
       [](auto& c, auto& k, auto& v) { c.design.first_year = parse_scalar<int>(k, v); }},
      {"sampler.chains", "4", [](auto& c, auto& k, auto& v) { c.sampler.chains = parse_scalar<int>(k, v); }},
      {"sampler.warmup", "1000", [](auto& c, auto& k, auto& v) { c.sampler.warmup = parse_scalar<int>(k, v); }},
      {"sampler.iterations", "3000",
       [](auto& c, auto& k, auto& v) { c.sampler.total_iters = parse_scalar<int>(k, v); }},
      {"sampler.thin", "2", [](auto& c, auto& k, auto& v) { c.sampler.thin = parse_scalar<int>(k, v); }},
      {"sampler.adapt_delta", "0.95",
       [](auto& c, auto& k, auto& v) { c.sampler.adapt_delta = parse_scalar<double>(k, v); }},
      {"sampler.max_treedepth", "10",
       [](auto& c, auto& k, auto& v) { c.sampler.max_treedepth = parse_scalar<int>(k, v); }},
      {"sampler.max_delta_h", "1000",
       [](auto& c, auto& k, auto& v) { c.sampler.max_delta_h = parse_scalar<double>(k, v); }},
      {"sampler.init_radius", "2",
       [](auto& c, auto& k, auto& v) { c.sampler.init_radius = parse_scalar<double>(k, v); }},
      {"study.replicates", "50",
       [](auto& c, auto& k, auto& v) {
         c.replicates = parse_scalar<int>(k, v);
         require(c.replicates >= 1, k + ": must be >= 1");
       }},
      {"study.divergence_threshold", "0.001",
       [](auto& c, auto& k, auto& v) {
         c.divergence_threshold = parse_scalar<double>(k, v);
         require(c.divergence_threshold > 0.0 && c.divergence_threshold <= 1.0, k + ": must lie in (0, 1]");
       }},
      {"efficiency.tmax", "", [](auto& c, auto& k, auto& v) { c.grid_tmax = parse_list<int>(k, v); }},
      {"efficiency.n", "", [](auto& c, auto& k, auto& v) { c.grid_n = parse_list<double>(k, v); }},
      {"efficiency.phi_theta", "", [](auto& c, auto& k, auto& v) { c.grid_phi = parse_list<double>(k, v); }},
      {"efficiency.replicates", "1",
       [](auto& c, auto& k, auto& v) {
         c.efficiency_replicates = parse_scalar<int>(k, v);
         require(c.efficiency_replicates >= 1, k + ": must be >= 1");
       }},
      {"efficiency.overlap_tolerance", "0.1",
       [](auto& c, auto& k, auto& v) { c.overlap_tolerance = parse_scalar<double>(k, v); }},
      {"data.path", "", [](auto& c, auto&, auto& v) { c.data = v; }},
      {"select.models", "1,2,3,4,5,6,7,8,9,10,11",
       [](auto& c, auto& k, auto& v) {
         c.models = parse_list<int>(k, v);
         for (int id : c.models) require(id >= 1 && id <= 11, k + ": model ids must be in 1..11");
       }},
      {"la_check.grid", "64",
       [](auto& c, auto& k, auto& v) {
         c.kde_grid = parse_scalar<int>(k, v);
         require(c.kde_grid >= 2, k + ": must be >= 2");
       }},
      {"verify.quick", "false", [](auto& c, auto& k, auto& v) { c.verify_quick = parse_bool(k, v); }},
  };
  return t;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& s : key_table())
    if (key == s.key) return &s;
  return nullptr;
}

}  // namespace

ExperimentConfig make_config(const IniMap& ini, const Overrides& ov) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  auto apply = [&](const std::string& key, const std::string& value) {
    const KeySpec* s = find_key(key);
    if (!s) {
      errors.push_back("unknown key '" + key + "'");
      return;
    }
    if (value.empty() && *s->def == '\0') return;
    try {
      s->set(c, key, value);
    } catch (const std::invalid_argument& e) {
      errors.push_back(e.what());
    }
  };
  for (const auto& [k, v] : ini) apply(k, v);
  if (ov.seed) c.seed = *ov.seed;
  if (ov.workers) apply("run.workers", std::to_string(*ov.workers));
  if (ov.out) c.out = *ov.out;
  if (ov.prior) apply("run.priors", *ov.prior);
  if (ov.laplace) apply("run.laplace", *ov.laplace);
  if (ov.data) c.data = *ov.data;
  if (ov.quick) c.verify_quick = *ov.quick;
  c.sampler.seed = c.seed;
  c.design.seed = c.seed;
  try {
    c.sampler.validate();
  } catch (const Error& e) {
    errors.push_back(e.what());
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(Errc::ConfigError, msg);
  }
  return c;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& ov) {
  return make_config(path ? read_ini(*path) : IniMap{}, ov);
}

std::string default_config_text() {
  std::ostringstream o;
  std::string section;
  for (const auto& s : key_table()) {
    const std::string key = s.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) o << '\n';
      o << '[' << sec << "]\n";
      section = sec;
    }
    o << key.substr(dot + 1) << " = " << s.def << '\n';
  }
  return o.str();
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["workers"] = workers;
  j["out"] = out.string();
  j["priors"] = priors;
  std::vector<std::string> tech;
  for (auto t : techniques) tech.push_back(technique_name(t));
  j["techniques"] = tech;
  j["design"] = {{"tmax", design.tmax},
                 {"n", design.mean_n},
                 {"phi_theta", design.phi_theta},
                 {"mu", {design.mu[0], design.mu[1], design.mu[2]}},
                 {"sigma_theta", design.sigma_theta},
                 {"sigma_z", design.sigma_z},
                 {"first_year", design.first_year}};
  j["sampler"] = {{"chains", sampler.chains},
                  {"warmup", sampler.warmup},
                  {"iterations", sampler.total_iters},
                  {"thin", sampler.thin},
                  {"adapt_delta", sampler.adapt_delta},
                  {"max_treedepth", sampler.max_treedepth},
                  {"max_delta_h", sampler.max_delta_h},
                  {"init_radius", sampler.init_radius}};
  j["study"] = {{"replicates", replicates}, {"divergence_threshold", divergence_threshold}};
  j["efficiency"] = {{"tmax", grid_tmax},
                     {"n", grid_n},
                     {"phi_theta", grid_phi},
                     {"replicates", efficiency_replicates},
                     {"overlap_tolerance", overlap_tolerance}};
  j["data"] = data.string();
  j["models"] = models;
  j["kde_grid"] = kde_grid;
  j["verify_quick"] = verify_quick;
  return j;
}

}  // namespace fluctsel
