#include "trajinf/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "trajinf/errors.hpp"

namespace trajinf {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const Entry& e, const std::string& key,
                         const std::string& msg) const {
    throw Error(ErrorKind::Config, "config",
                origin_ + ":" + std::to_string(e.line) + ": " + key + ": " +
                    msg);
  }

  double real(const Entry& e, const std::string& key) const {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (e.value.empty() || *end != '\0' || errno == ERANGE ||
        !std::isfinite(v)) {
      fail(e, key, "expected a finite number, got '" + e.value + "'");
    }
    return v;
  }

  long long integer(const Entry& e, const std::string& key) const {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    if (e.value.empty() || *end != '\0' || errno == ERANGE) {
      fail(e, key, "expected an integer, got '" + e.value + "'");
    }
    return v;
  }

  bool boolean(const Entry& e, const std::string& key) const {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail(e, key, "expected true or false, got '" + e.value + "'");
  }

  std::vector<std::string> list(const Entry& e) const {
    std::vector<std::string> items;
    if (e.value.empty()) return items;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    return items;
  }

 private:
  std::string origin_;
};

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "family",         "N",
      "T",              "sigma_w",
      "lambda",         "q_scale",
      "r_scale",        "sigma0_scale",
      "seed",           "input_std",
      "x0_std",         "test_fraction",
      "s3_state_dim",   "target_rho",
      "mismatch",       "plant_cost",
      "plant_horizon",  "plant_rollouts",
      "hvp",            "gradient",
      "cg_tol",         "cg_max_iter",
      "dare_tol_abs",   "dare_tol_rel",
      "dare_max_newton", "dare_max_fixed_point",
      "top_k",          "sweep_parameter",
      "sweep_values",   "sweep_seeds"};
  return keys;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
  const auto& known = config_keys();

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const Entry here{"", line_no};
    if (eq == std::string::npos) rd.fail(here, line, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      rd.fail(here, key, "unknown key");
    }
    if (entries.count(key)) {
      rd.fail(here, key,
              "duplicate key (first set on line " +
                  std::to_string(entries[key].line) + ")");
    }
    entries[key] = {trim(line.substr(eq + 1)), line_no};
    order.push_back(key);
  }

  RunConfig cfg;
  if (auto it = entries.find("family"); it != entries.end()) {
    try {
      cfg.experiment = default_config(family_from_string(it->second.value));
    } catch (const Error&) {
      rd.fail(it->second, "family", "expected S1, S2, S3 or S4");
    }
  }
  ExperimentConfig& x = cfg.experiment;
  PipelineOptions& p = cfg.pipeline;

  auto positive_int = [&](const Entry& e, const std::string& key,
                          long long min) {
    const long long v = rd.integer(e, key);
    if (v < min || v > 1000000000LL) {
      rd.fail(e, key, "must be an integer >= " + std::to_string(min));
    }
    return static_cast<int>(v);
  };
  auto real_at_least = [&](const Entry& e, const std::string& key, double min,
                           bool strict) {
    const double v = rd.real(e, key);
    if (strict ? !(v > min) : !(v >= min)) {
      std::ostringstream msg;
      msg << "must be " << (strict ? "> " : ">= ") << min;
      rd.fail(e, key, msg.str());
    }
    return v;
  };

  const std::map<std::string, std::function<void(const Entry&)>> setters = {
      {"family", [](const Entry&) {}},
      {"N", [&](const Entry& e) { x.N = positive_int(e, "N", 2); }},
      {"T", [&](const Entry& e) { x.T = positive_int(e, "T", 1); }},
      {"sigma_w",
       [&](const Entry& e) { x.sigma_w = real_at_least(e, "sigma_w", 0, false); }},
      {"lambda",
       [&](const Entry& e) { x.lambda = real_at_least(e, "lambda", 0, true); }},
      {"q_scale",
       [&](const Entry& e) { x.q_scale = real_at_least(e, "q_scale", 0, false); }},
      {"r_scale",
       [&](const Entry& e) { x.r_scale = real_at_least(e, "r_scale", 0, true); }},
      {"sigma0_scale",
       [&](const Entry& e) {
         x.sigma0_scale = real_at_least(e, "sigma0_scale", 0, false);
       }},
      {"seed",
       [&](const Entry& e) {
         const long long v = rd.integer(e, "seed");
         if (v < 0) rd.fail(e, "seed", "must be >= 0");
         x.seed = static_cast<std::uint64_t>(v);
       }},
      {"input_std",
       [&](const Entry& e) {
         x.input_std = real_at_least(e, "input_std", 0, false);
       }},
      {"x0_std",
       [&](const Entry& e) { x.x0_std = real_at_least(e, "x0_std", 0, false); }},
      {"test_fraction",
       [&](const Entry& e) {
         x.test_fraction = real_at_least(e, "test_fraction", 0, true);
         if (x.test_fraction > 1.0) rd.fail(e, "test_fraction", "must be <= 1");
       }},
      {"s3_state_dim",
       [&](const Entry& e) {
         const long long v = rd.integer(e, "s3_state_dim");
         if (v != 8 && v != 10) rd.fail(e, "s3_state_dim", "must be 8 or 10");
         x.system.s3_state_dim = static_cast<int>(v);
       }},
      {"target_rho",
       [&](const Entry& e) {
         const double v = real_at_least(e, "target_rho", 0, true);
         if (v >= 1.0) rd.fail(e, "target_rho", "must be < 1");
         x.system.target_rho = v;
       }},
      {"mismatch",
       [&](const Entry& e) {
         x.system.mismatch = real_at_least(e, "mismatch", 0, false);
       }},
      {"plant_cost",
       [&](const Entry& e) { x.plant_cost = rd.boolean(e, "plant_cost"); }},
      {"plant_horizon",
       [&](const Entry& e) {
         x.plant_horizon = positive_int(e, "plant_horizon", 1);
       }},
      {"plant_rollouts",
       [&](const Entry& e) {
         x.plant_rollouts = positive_int(e, "plant_rollouts", 1);
       }},
      {"hvp",
       [&](const Entry& e) {
         if (e.value == "direct") {
           p.hvp = HvpMethod::Direct;
         } else if (e.value == "cg") {
           p.hvp = HvpMethod::Cg;
         } else {
           rd.fail(e, "hvp", "expected direct or cg");
         }
       }},
      {"gradient",
       [&](const Entry& e) {
         if (e.value == "adjoint") {
           p.gradient = GradientMethod::Adjoint;
         } else if (e.value == "forward") {
           p.gradient = GradientMethod::Forward;
         } else {
           rd.fail(e, "gradient", "expected adjoint or forward");
         }
       }},
      {"cg_tol",
       [&](const Entry& e) { p.cg.tol = real_at_least(e, "cg_tol", 0, true); }},
      {"cg_max_iter",
       [&](const Entry& e) {
         p.cg.max_iter = positive_int(e, "cg_max_iter", 1);
       }},
      {"dare_tol_abs",
       [&](const Entry& e) {
         p.dare.tol_abs = real_at_least(e, "dare_tol_abs", 0, false);
       }},
      {"dare_tol_rel",
       [&](const Entry& e) {
         p.dare.tol_rel = real_at_least(e, "dare_tol_rel", 0, false);
       }},
      {"dare_max_newton",
       [&](const Entry& e) {
         p.dare.max_newton_iterations = positive_int(e, "dare_max_newton", 1);
       }},
      {"dare_max_fixed_point",
       [&](const Entry& e) {
         p.dare.max_fixed_point_iterations =
             positive_int(e, "dare_max_fixed_point", 1);
       }},
      {"top_k",
       [&](const Entry& e) { cfg.top_k = positive_int(e, "top_k", 1); }},
      {"sweep_parameter",
       [&](const Entry& e) {
         static const std::vector<std::string> ok = {
             "N", "T", "sigma_w", "lambda", "target_rho", "mismatch"};
         if (std::find(ok.begin(), ok.end(), e.value) == ok.end()) {
           rd.fail(e, "sweep_parameter",
                   "expected one of N, T, sigma_w, lambda, target_rho, "
                   "mismatch");
         }
         cfg.sweep_parameter = e.value;
       }},
      {"sweep_values",
       [&](const Entry& e) {
         for (const auto& item : rd.list(e)) {
           cfg.sweep_values.push_back(rd.real({item, e.line}, "sweep_values"));
         }
       }},
      {"sweep_seeds",
       [&](const Entry& e) {
         // Either a comma list or a half-open range "a:b".
         if (const auto colon = e.value.find(':');
             colon != std::string::npos) {
           const long long a = rd.integer({trim(e.value.substr(0, colon)), e.line},
                                          "sweep_seeds");
           const long long b = rd.integer(
               {trim(e.value.substr(colon + 1)), e.line}, "sweep_seeds");
           if (a < 0 || b < a) rd.fail(e, "sweep_seeds", "bad range");
           for (long long s = a; s < b; ++s) {
             cfg.sweep_seeds.push_back(static_cast<std::uint64_t>(s));
           }
           return;
         }
         for (const auto& item : rd.list(e)) {
           const long long s = rd.integer({item, e.line}, "sweep_seeds");
           if (s < 0) rd.fail(e, "sweep_seeds", "seeds must be >= 0");
           cfg.sweep_seeds.push_back(static_cast<std::uint64_t>(s));
         }
       }},
  };
  for (const auto& key : order) setters.at(key)(entries.at(key));
  if (x.system.mismatch > 0.0) x.plant_cost = true;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw Error(ErrorKind::Config, "config", "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace trajinf
