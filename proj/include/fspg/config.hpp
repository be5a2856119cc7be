// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_CONFIG_HPP
#define FSPG_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fspg/functionals.hpp"
#include "fspg/solver.hpp"

namespace fspg {

// Flat "key = value" sections: [problem], [grid], [solver], [output].
// Lookup keys are "section.key"; '#' and ';' start comments.
class Config {
public:
  static Config parse_file(const std::string &path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
  }

  static Config parse_text(const std::string &text) {
    Config cfg;
    cfg.raw_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        require(line.back() == ']', "config: malformed section at line " + std::to_string(lineno));
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      require(eq != std::string::npos,
              "config: expected key = value at line " + std::to_string(lineno));
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      require(!key.empty(), "config: empty key at line " + std::to_string(lineno));
      cfg.kv_[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
  }

  bool has(const std::string &key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string &key) const {
    auto it = kv_.find(key);
    require(it != kv_.end(), "config: missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string &key, const std::string &fallback) const {
    auto it = kv_.find(key);
    return it != kv_.end() ? it->second : fallback;
  }

  double get_double(const std::string &key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string &key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_long(const std::string &key, long fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    try {
      std::size_t pos = 0;
      const long r = std::stol(v, &pos);
      require(pos == v.size(), "trailing junk");
      return r;
    } catch (const std::exception &) {
      throw error("config: key '" + key + "' is not an integer: '" + v + "'");
    }
  }

  bool get_bool(const std::string &key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw error("config: key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string &key) const {
    std::vector<double> out;
    std::istringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(to_double(key, trim(item)));
    return out;
  }

  const std::string &raw_text() const { return raw_; }

  // FNV-1a over the raw config text, recorded in the run manifest
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : raw_) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

private:
  static std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string &key, const std::string &v) {
    try {
      std::size_t pos = 0;
      const double r = std::stod(v, &pos);
      require(pos == v.size(), "trailing junk");
      return r;
    } catch (const std::exception &) {
      throw error("config: key '" + key + "' is not a number: '" + v + "'");
    }
  }

  std::map<std::string, std::string> kv_;
  std::string raw_;
};

inline ProblemSpec problem_from_config(const Config &cfg) {
  ProblemSpec ps;
  ps.s = cfg.get_double("problem.s");
  ps.p = cfg.get_double("problem.p");
  ps.lambda = cfg.get_double("problem.lambda", 1.0);
  const std::string kind = cfg.get_string("problem.potential", "constant");
  if (kind == "constant") {
    ps.potential = PotentialSpec::constant(cfg.get_double("problem.v_inf", 1.0));
  } else if (kind == "paper_example") {
    ps.potential = PotentialSpec::paper_example(ps.s);
  } else if (kind == "radial_table") {
    ps.potential = load_radial_table(cfg.get_string("problem.table_path"),
                                     cfg.get_double("problem.v_inf", 0.0));
  } else {
    throw error("config: key 'problem.potential' must be constant, paper_example or "
                "radial_table, got '" + kind + "'");
  }
  const std::string mode = cfg.get_string("problem.poisson_mode", "torus");
  if (mode == "torus")
    ps.poisson_mode = PoissonMode::torus;
  else if (mode == "free_space")
    ps.poisson_mode = PoissonMode::free_space;
  else
    throw error("config: key 'problem.poisson_mode' must be torus or free_space");
  ps.grid.n = static_cast<int>(cfg.get_long("grid.n", 32));
  ps.grid.L = cfg.get_double("grid.L", 30.0);
  ps.grid.validate();
  return ps;
}

inline SolverConfig solver_from_config(const Config &cfg) {
  SolverConfig sc;
  sc.step_size = cfg.get_double("solver.step_size", sc.step_size);
  sc.tol_grad = cfg.get_double("solver.tol_grad", sc.tol_grad);
  sc.tol_energy = cfg.get_double("solver.tol_energy", sc.tol_energy);
  sc.max_iters = cfg.get_long("solver.max_iters", sc.max_iters);
  sc.seed = static_cast<std::uint64_t>(cfg.get_long("solver.seed", 1));
  sc.clip_negative = cfg.get_bool("solver.clip_negative", false);
  const std::string init = cfg.get_string("solver.init", "gaussian");
  if (init == "gaussian") {
    sc.init = SolverConfig::Init::gaussian;
  } else if (init == "file") {
    sc.init = SolverConfig::Init::file;
    sc.init_path = cfg.get_string("solver.init_path");
  } else {
    throw error("config: key 'solver.init' must be gaussian or file");
  }
  sc.validate();
  return sc;
}

inline std::vector<double> lambda_grid_from_config(const Config &cfg) {
  if (cfg.has("solver.lambda_grid")) return cfg.get_double_list("solver.lambda_grid");
  return default_lambda_grid();
}

} // namespace fspg

#endif
