// Copyright (c) the fspg authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef FSPG_REPORT_HPP
#define FSPG_REPORT_HPP

#include <ctime>
#include <fstream>

#include <json.hpp>

#include "fspg/config.hpp"
#include "fspg/solver.hpp"
#include "fspg/verify.hpp"

namespace fspg {

using json = nlohmann::ordered_json;

inline json quartet_to_json(const Quartet &q) {
  return json{{"a", q.a}, {"b", q.b}, {"c", q.c},
              {"d_raw", q.d_raw}, {"e", q.e}, {"mass", q.mass}};
}

inline Quartet quartet_from_json(const json &j) {
  Quartet q;
  q.a = j.at("a");
  q.b = j.at("b");
  q.c = j.at("c");
  q.d_raw = j.at("d_raw");
  q.e = j.at("e");
  q.mass = j.value("mass", 0.0);
  return q;
}

inline json residuals_to_json(const ResidualReport &r) {
  return json{{"nehari", r.nehari},
              {"constraint_g", r.constraint_g},
              {"pohozaev", r.pohozaev},
              {"grad_norm", r.grad_norm},
              {"mu_fit", r.mu_fit},
              {"tangential_res", r.tangential_res},
              {"boundary_mass_fraction", r.boundary_mass_fraction}};
}

inline json result_to_json(const GroundStateResult &r, const std::string &field_path) {
  return json{{"level", r.level},
              {"lambda", r.lambda},
              {"status", to_string(r.status)},
              {"quartet", quartet_to_json(r.quartet)},
              {"residuals", residuals_to_json(r.residuals)},
              {"iterations", static_cast<std::uint64_t>(r.iterations)},
              {"field_path", field_path}};
}

inline void write_json(const json &j, const std::string &path) {
  std::ofstream out(path);
  require(out.good(), "write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline json read_json(const std::string &path) {
  std::ifstream in(path);
  require(in.good(), "read_json: cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void write_trace_csv(const std::vector<TracePoint> &trace, const std::string &path) {
  std::ofstream out(path);
  require(out.good(), "write_trace_csv: cannot open " + path);
  out << "iter,energy,grad_norm,theta\n";
  char buf[160];
  for (const auto &t : trace) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", t.iter, t.energy, t.grad_norm,
                  t.theta);
    out << buf;
  }
}

// config hash, code version and grid diagnostics for every run; the timestamp
// is the one field exempt from byte-for-byte determinism
inline json manifest_json(const Config &cfg, const ProblemSpec &ps,
                          const GroundStateResult &result) {
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(cfg.hash()));
  return json{{"config_hash", hash_hex},
              {"code_version", FSPG_VERSION},
              {"timestamp", static_cast<std::uint64_t>(std::time(nullptr))},
              {"seed", 0}, // overwritten by the caller with the effective seed
              {"grid",
               {{"n", ps.grid.n},
                {"L", ps.grid.L},
                {"spacing", ps.grid.spacing()},
                {"boundary_mass_fraction", result.residuals.boundary_mass_fraction}}}};
}

} // namespace fspg

#endif
