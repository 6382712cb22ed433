#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruelle/acceptance.hpp"

#ifndef RUELLE_VERSION
#define RUELLE_VERSION "0.1.0"
#endif

namespace ruelle {

namespace fs = std::filesystem;
using json = nlohmann::json;

class VerificationError : public Error {
 public:
  using Error::Error;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- configuration ----

struct JobConfig {
  std::string command;
  std::string output;
  unsigned threads = 0;

  std::string space_kind = "finite";
  std::size_t size = 0;

  std::string measure_kind;
  std::vector<double> weights;
  bool renormalize = false;
  double q = 0.5;

  std::string potential_kind;
  double value = 0.0;
  std::size_t range = 2;
  std::string file;
  double alpha = 0.0, gamma = 0.0, c = 1.0;

  std::string method = "power";
  double tol = 1e-13;
  std::size_t max_iter = 100000;

  std::vector<double> betas = default_beta_schedule();
  double epsilon = 0.3;

  std::vector<std::size_t> periods;
  std::string periodic_method = "automatic";
  std::optional<std::size_t> anchor;

  std::optional<std::size_t> cylinder;
  std::size_t reference = 0;

  std::string text;  // raw file contents, hashed into the manifest
  fs::path base_dir;
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c{"solve", "gibbs", "entropy", "pressure-periodic", "zerotemp", "involution", "verify-all"};
  return c;
}

namespace detail {

class ConfigValues {
 public:
  explicit ConfigValues(const std::vector<CLI::ConfigItem>& items) {
    static const std::map<std::string, std::set<std::string>> schema{
        {"", {"command", "output", "threads"}},
        {"space", {"kind", "size"}},
        {"measure", {"kind", "weights", "renormalize", "q"}},
        {"potential", {"kind", "value", "range", "file", "alpha", "gamma", "c"}},
        {"solver", {"method", "tol", "max_iter"}},
        {"zerotemp", {"betas", "epsilon"}},
        {"periodic", {"periods", "method", "anchor"}},
        {"entropy", {"cylinder"}},
        {"involution", {"reference"}}};
    for (const auto& it : items) {
      if (it.name == "++" || it.name == "--") continue;
      if (it.parents.size() > 1) throw ConfigError("nested section " + it.fullname());
      const std::string section = it.parents.empty() ? "" : it.parents[0];
      auto s = schema.find(section);
      if (s == schema.end()) throw ConfigError("unknown section [" + section + "]");
      if (!s->second.count(it.name)) throw ConfigError("unknown key " + it.fullname());
      if (!values_.emplace(it.fullname(), it.inputs).second) throw ConfigError("duplicate key " + it.fullname());
    }
  }

  bool has(const std::string& k) const { return values_.count(k) > 0; }

  std::string str(const std::string& k) const {
    const auto& v = at(k);
    if (v.size() != 1) throw ConfigError(k + " takes a single value");
    return v[0];
  }
  double real(const std::string& k) const { return to_real(k, str(k)); }
  std::size_t count(const std::string& k) const { return to_count(k, str(k)); }
  bool flag(const std::string& k) const {
    const std::string s = str(k);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(k + " must be true or false");
  }
  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    for (const auto& s : at(k)) out.push_back(to_real(k, s));
    if (out.empty()) throw ConfigError(k + " must not be empty");
    return out;
  }
  std::vector<std::size_t> counts(const std::string& k) const {
    std::vector<std::size_t> out;
    for (const auto& s : at(k)) out.push_back(to_count(k, s));
    if (out.empty()) throw ConfigError(k + " must not be empty");
    return out;
  }

 private:
  const std::vector<std::string>& at(const std::string& k) const { return values_.at(k); }
  static double to_real(const std::string& k, const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(k + ": not a finite number: '" + s + "'");
  }
  static std::size_t to_count(const std::string& k, const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw ConfigError(k + ": not a count: '" + s + "'");
    try {
      return static_cast<std::size_t>(std::stoull(s));
    } catch (const std::exception&) {
      throw ConfigError(k + ": count out of range: '" + s + "'");
    }
  }

  std::map<std::string, std::vector<std::string>> values_;
};

inline void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  throw ConfigError(key + ": unsupported value '" + v + "'");
}

}  // namespace detail

inline JobConfig parse_config_text(const std::string& text, fs::path base_dir = {}) {
  std::vector<CLI::ConfigItem> items;
  try {
    std::istringstream in(text);
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  detail::ConfigValues v(items);
  JobConfig c;
  c.text = text;
  c.base_dir = std::move(base_dir);
  if (!v.has("command")) throw ConfigError("missing key command");
  c.command = v.str("command");
  if (!known_commands().count(c.command)) throw ConfigError("unknown command '" + c.command + "'");
  if (v.has("output")) c.output = v.str("output");
  if (v.has("threads")) c.threads = static_cast<unsigned>(v.count("threads"));

  if (v.has("solver.method")) c.method = v.str("solver.method");
  detail::require_one_of("solver.method", c.method, {"power", "contraction", "log_domain"});
  if (v.has("solver.tol")) c.tol = v.real("solver.tol");
  if (!(c.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (v.has("solver.max_iter")) c.max_iter = v.count("solver.max_iter");
  if (v.has("zerotemp.betas")) c.betas = v.reals("zerotemp.betas");
  if (v.has("zerotemp.epsilon")) c.epsilon = v.real("zerotemp.epsilon");
  if (v.has("periodic.periods")) c.periods = v.counts("periodic.periods");
  if (v.has("periodic.method")) c.periodic_method = v.str("periodic.method");
  detail::require_one_of("periodic.method", c.periodic_method, {"automatic", "trace", "exhaustive"});
  if (v.has("periodic.anchor")) c.anchor = v.count("periodic.anchor");
  if (v.has("entropy.cylinder")) c.cylinder = v.count("entropy.cylinder");
  if (v.has("involution.reference")) c.reference = v.count("involution.reference");

  if (c.command == "verify-all") return c;

  if (!v.has("space.kind") || !v.has("space.size")) throw ConfigError("missing [space] kind or size");
  c.space_kind = v.str("space.kind");
  detail::require_one_of("space.kind", c.space_kind, {"finite", "circle", "interval", "countable"});
  c.size = v.count("space.size");
  if (c.size == 0) throw ConfigError("space.size must be >= 1");

  const std::string dflt = c.space_kind == "finite" ? (v.has("measure.weights") ? "explicit" : "uniform")
                           : c.space_kind == "countable" ? "geometric"
                                                         : "quadrature";
  c.measure_kind = v.has("measure.kind") ? v.str("measure.kind") : dflt;
  if (c.space_kind == "finite") detail::require_one_of("measure.kind", c.measure_kind, {"uniform", "explicit"});
  else detail::require_one_of("measure.kind", c.measure_kind, {dflt.c_str()});
  if (c.measure_kind == "explicit") {
    if (!v.has("measure.weights")) throw ConfigError("explicit measure needs measure.weights");
    c.weights = v.reals("measure.weights");
    if (c.weights.size() != c.size) throw ConfigError("measure.weights needs one entry per atom");
  } else if (v.has("measure.weights")) {
    throw ConfigError("measure.weights only applies to explicit measures");
  }
  if (v.has("measure.renormalize")) c.renormalize = v.flag("measure.renormalize");
  if (v.has("measure.q")) {
    if (c.measure_kind != "geometric") throw ConfigError("measure.q only applies to geometric measures");
    c.q = v.real("measure.q");
  }

  if (!v.has("potential.kind")) throw ConfigError("missing potential.kind");
  c.potential_kind = v.str("potential.kind");
  detail::require_one_of("potential.kind", c.potential_kind, {"constant", "table", "xy", "exp_interval", "neg_distance"});
  const std::map<std::string, std::set<std::string>> params{{"constant", {"value", "range"}},
                                                            {"table", {"file"}},
                                                            {"xy", {"alpha", "gamma"}},
                                                            {"exp_interval", {"c"}},
                                                            {"neg_distance", {"range"}}};
  for (const char* k : {"value", "range", "file", "alpha", "gamma", "c"})
    if (v.has(std::string("potential.") + k) && !params.at(c.potential_kind).count(k))
      throw ConfigError(std::string("potential.") + k + " does not apply to " + c.potential_kind);
  if (v.has("potential.value")) c.value = v.real("potential.value");
  if (v.has("potential.range")) c.range = v.count("potential.range");
  if (v.has("potential.alpha")) c.alpha = v.real("potential.alpha");
  if (v.has("potential.gamma")) c.gamma = v.real("potential.gamma");
  if (v.has("potential.c")) c.c = v.real("potential.c");
  if (c.potential_kind == "table") {
    if (!v.has("potential.file")) throw ConfigError("table potential needs potential.file");
    c.file = v.str("potential.file");
  }
  if (c.potential_kind == "xy" && c.space_kind != "circle") throw ConfigError("xy potential needs a circle space");
  if (c.potential_kind == "exp_interval" && c.space_kind != "interval") throw ConfigError("exp_interval potential needs an interval space");
  if (c.potential_kind == "neg_distance" && c.space_kind != "countable") throw ConfigError("neg_distance potential needs a countable space");
  return c;
}

inline JobConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

inline AprioriMeasure build_measure(const JobConfig& c) {
  if (c.space_kind == "circle") return build_apriori(measure_spec::CircleQuadrature{c.size});
  if (c.space_kind == "interval") return build_apriori(measure_spec::IntervalQuadrature{c.size});
  if (c.space_kind == "countable") return build_apriori(measure_spec::Geometric{c.q, c.size});
  if (c.measure_kind == "explicit") return build_apriori(measure_spec::Explicit{c.weights, c.renormalize});
  return build_apriori(measure_spec::Uniform{c.size});
}

inline Potential build_potential(const JobConfig& c) {
  if (c.potential_kind == "constant") return Potential::constant(c.value, c.range);
  if (c.potential_kind == "xy") return Potential::xy(c.alpha, c.gamma);
  if (c.potential_kind == "exp_interval") return Potential::exp_interval(c.c);
  if (c.potential_kind == "neg_distance") return Potential::neg_distance_to_zero(c.range);
  fs::path p(c.file);
  if (p.is_relative()) p = c.base_dir / p;
  return Potential::table(load_table_csv(p.string(), c.size));
}

// ---- reports ----

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct RunManifest {
  std::string config_hash;
  std::string version = RUELLE_VERSION;
  std::string command;
  std::map<std::string, std::string> files;  // name -> SHA-256
  std::vector<std::pair<std::string, double>> timings;
  std::vector<Check> checks;
};

class ReportWriter {
 public:
  explicit ReportWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  const fs::path& dir() const { return dir_; }

  std::string write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw Error("cannot write " + p.string());
    return sha256_hex(content);
  }
  std::string write_json(const std::string& name, const json& j) { return write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }
  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(csv_num(x));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& s) {
    if (s.size() != cols_) throw Error("csv row width mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) text_ += (i ? "," : "") + s[i];
    text_ += "\n";
  }
  const std::string& str() const { return text_; }

 private:
  std::size_t cols_;
  std::string text_;
};

inline std::vector<std::string> tuple_header(const std::string& lead, std::size_t r, const std::string& tail) {
  std::vector<std::string> h{lead};
  for (std::size_t j = 1; j <= r; ++j) h.push_back("x" + std::to_string(j));
  h.push_back(tail);
  return h;
}

inline std::vector<double> tuple_row(std::size_t idx, std::size_t n, std::size_t r) {
  std::vector<double> row{static_cast<double>(idx)};
  for (std::size_t t : ConfigurationGrid(n, r).tuple(idx)) row.push_back(static_cast<double>(t));
  return row;
}

namespace detail {

class Job {
 public:
  Job(const JobConfig& c, ReportWriter& w, RunManifest& m) : cfg_(c), out_(w), man_(m) {}

  void run() {
    const std::string& cmd = cfg_.command;
    if (cmd == "verify-all") return verify_all();
    nu_.emplace(timed("measure", [&] { return build_measure(cfg_); }));
    P_.emplace(build_potential(cfg_));
    table_ = timed("tabulate", [&] { return P_->tabulate(nu_->space()); });
    if (cmd == "solve") solve();
    else if (cmd == "gibbs") gibbs();
    else if (cmd == "entropy") entropy();
    else if (cmd == "pressure-periodic") periodic();
    else if (cmd == "zerotemp") zerotemp();
    else if (cmd == "involution") involution();
  }

 private:
  template <class F>
  auto timed(const std::string& name, F&& f) -> decltype(f()) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    man_.timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return r;
  }

  void emit(const std::string& name, const std::string& content) { man_.files[name] = out_.write(name, content); }
  void emit_json(const std::string& name, const json& j) { man_.files[name] = out_.write_json(name, j); }
  void check(const std::string& name, double value, double limit) {
    man_.checks.push_back({name, value, limit, value <= limit});
  }

  json base_summary() const {
    json j;
    j["command"] = cfg_.command;
    j["space"] = {{"kind", to_string(nu_->space().kind())}, {"size", nu_->size()}};
    j["potential"] = {{"kind", P_->name()}, {"range", table_.range}};
    return j;
  }

  GibbsOptions gibbs_options() const {
    GibbsOptions o;
    o.method = cfg_.method == "log_domain" ? EigenMethod::log_domain : EigenMethod::power;
    o.solver = {cfg_.tol, cfg_.max_iter};
    return o;
  }

  void solve() {
    const auto& A = table_;
    const std::size_t n = A.atoms, r = block_rank(A.range);
    std::vector<double> log_psi;
    double log_lambda = 0.0, residual = 0.0;
    if (cfg_.method == "power") {
      auto p = timed("eigenpair", [&] { return eigenpair_power(A, *nu_, {cfg_.tol, cfg_.max_iter}); });
      log_lambda = p.pair.log_lambda;
      residual = p.pair.residual;
      for (double v : p.pair.psi.values) log_psi.push_back(std::log(v));
    } else if (cfg_.method == "contraction") {
      auto p = timed("eigenpair", [&] { return eigenpair_contraction(A, *nu_, default_s_schedule(), cfg_.tol, cfg_.max_iter); });
      log_lambda = p.pair.log_lambda;
      residual = p.pair.residual;
      for (double v : p.pair.psi.values) log_psi.push_back(std::log(v));
    } else {
      auto p = timed("eigenpair", [&] { return eigenpair_log_domain(A, *nu_, std::max(cfg_.tol, 1e-14)); });
      log_lambda = p.log_lambda;
      residual = p.residual;
      log_psi = p.log_psi;
    }
    std::vector<std::string> h = tuple_header("index", r, "psi");
    h.push_back("log_psi");
    CsvTable eig(h);
    for (std::size_t x = 0; x < log_psi.size(); ++x) {
      auto row = tuple_row(x, n, r);
      row.push_back(std::exp(log_psi[x]));
      row.push_back(log_psi[x]);
      eig.row(row);
    }
    emit("eigen.csv", eig.str());
    auto m = timed("gibbs", [&] { return gibbs_markov(A, *nu_, gibbs_options()); });
    const double h_val = entropy_gibbs(*m.normalized, m).value;
    const double integral = m.integrate(lift_for_blocks(A));
    json j = base_summary();
    j["method"] = cfg_.method;
    j["lambda"] = std::exp(log_lambda);
    j["log_lambda"] = log_lambda;
    j["pressure"] = log_lambda;
    j["entropy"] = h_val;
    j["integral"] = integral;
    j["residual"] = residual;
    j["blocks"] = log_psi.size();
    emit_json("summary.json", j);
    check("variational_identity", std::abs(log_lambda - h_val - integral), 1e-8);
    check("gibbs_invariants", check_invariants(m).worst(), 1e-10);
  }

  void emit_gibbs(const MarkovGibbs& m) {
    const std::size_t n = m.atoms, r = m.rank;
    std::vector<std::string> hs = tuple_header("block", r, "theta");
    hs.push_back("stationary");
    CsvTable t(hs);
    for (std::size_t b = 0; b < m.blocks; ++b) {
      auto row = tuple_row(b, n, r);
      row.push_back(m.theta[b]);
      row.push_back(m.stationary(b));
      t.row(row);
    }
    emit("theta.csv", t.str());
    CsvTable k({"block", "atom", "K", "transition"});
    for (std::size_t b = 0; b < m.blocks; ++b)
      for (std::size_t a = 0; a < n; ++a)
        k.row({static_cast<double>(b), static_cast<double>(a), m.K(b, a), m.transition(b, a)});
    emit("kernel.csv", k.str());
  }

  void gibbs() {
    auto m = timed("gibbs", [&] { return gibbs_markov(table_, *nu_, gibbs_options()); });
    emit_gibbs(m);
    auto inv = check_invariants(m);
    const double nr = normalization_residual(*m.normalized, *nu_);
    json j = base_summary();
    j["log_lambda"] = m.log_lambda;
    j["invariants"] = {{"kernel_row", inv.kernel_row}, {"stationarity", inv.stationarity}, {"mass", inv.mass}};
    j["normalization_residual"] = nr;
    j["marginal"] = m.marginal();
    emit_json("summary.json", j);
    check("gibbs_invariants", inv.worst(), 1e-10);
    check("normalization_residual", nr, 1e-10);
  }

  void entropy() {
    auto m = timed("gibbs", [&] { return gibbs_markov(table_, *nu_, gibbs_options()); });
    json j = base_summary();
    const double h1 = entropy_gibbs(*m.normalized, m).value;
    const double h2 = entropy_markov(m).value;
    j["log_lambda"] = m.log_lambda;
    j["entropy"] = {{"gibbs_normalized", h1}, {"markov_kernel", h2}};
    check("entropy_methods_gap", std::abs(h1 - h2), 1e-8);
    if (nu_->space().discrete()) {
      std::size_t n = cfg_.cylinder.value_or(0);
      if (!n) {
        n = 1;
        for (std::size_t w = nu_->size(); n < 10 && w * nu_->size() <= kDefaultGridCap; w *= nu_->size()) ++n;
      }
      auto c = timed("cylinder", [&] { return entropy_cylinder(m, n); });
      j["entropy"]["cylinder"] = c.conditional;
      j["cylinder"] = {{"length", n},
                       {"rate", c.report.value},
                       {"conditional", c.conditional},
                       {"classical_rate", c.classical_rate},
                       {"classical_conditional", c.classical_conditional}};
      check("cylinder_gap", std::abs(c.conditional - h1), 5e-3);
    }
    emit_json("summary.json", j);
  }

  void periodic() {
    std::vector<std::size_t> ns = cfg_.periods;
    if (ns.empty())
      for (std::size_t n = 1; n <= 20; ++n) ns.push_back(n);
    const PeriodicMethod pm = cfg_.periodic_method == "trace"        ? PeriodicMethod::trace
                              : cfg_.periodic_method == "exhaustive" ? PeriodicMethod::exhaustive
                                                                     : PeriodicMethod::automatic;
    auto s = timed("periodic", [&] { return pressure_periodic(table_, *nu_, ns, pm); });
    CsvTable csv({"n", "value", "gap"});
    for (const auto& p : s.points) csv.row({static_cast<double>(p.n), p.value, p.value - s.log_lambda});
    emit("periodic.csv", csv.str());
    json j = base_summary();
    j["method"] = to_string(s.method);
    j["log_lambda"] = s.log_lambda;
    const std::size_t hi = *std::max_element(ns.begin(), ns.end());
    j["fitted_constant"] = fit_periodic_constant(s, std::min<std::size_t>(8, hi), hi);
    if (cfg_.anchor) {
      auto rr = timed("recurrence", [&] { return recurrence_ratio(table_, *nu_, *cfg_.anchor, ns); });
      CsvTable rc({"n", "ratio"});
      for (const auto& p : rr.points) rc.row({static_cast<double>(p.n), p.ratio});
      emit("recurrence.csv", rc.str());
      j["recurrence"] = {{"anchor", rr.anchor}, {"lo", rr.lo}, {"hi", rr.hi}, {"bound", rr.bound}, {"bounded", rr.bounded}};
      check("recurrence_bounded", rr.bounded ? 0.0 : 1.0, 0.0);
    }
    emit_json("summary.json", j);
  }

  void zerotemp() {
    auto sweep = timed("sweep", [&] { return beta_sweep(table_, *nu_, cfg_.betas); });
    auto mm = timed("max_mean_cycle", [&] { return max_mean_cycle(sweep.potential); });
    BlockDigraph g(sweep.potential);
    std::vector<ConcentrationPoint> conc;
    if (g.nodes() <= kCriticalNodeCap) {
      auto crit = critical_edges(g, mm.value);
      conc = concentration_report(sweep, crit, cfg_.epsilon);
    }
    CsvTable csv({"beta", "scaled_log_lambda", "tail_gap", "escaping_mass"});
    for (std::size_t i = 0; i < sweep.records.size(); ++i) {
      const auto& r = sweep.records[i];
      csv.row({r.beta, r.scaled_log_lambda, r.tail_gap, conc.empty() ? std::nan("") : conc[i].escaping_mass});
    }
    emit("sweep.csv", csv.str());
    auto sub = subaction_extract(sweep, mm.value);
    const std::size_t n = sweep.potential.atoms, r = sweep.potential.range - 1;
    CsvTable v(tuple_header("block", r, "V"));
    for (std::size_t b = 0; b < sub.V.size(); ++b) {
      auto row = tuple_row(b, n, r);
      row.push_back(sub.V[b]);
      v.row(row);
    }
    emit("subaction.csv", v.str());
    json j = base_summary();
    j["max_mean"] = {{"value", mm.value}, {"cycle", mm.cycle}, {"word", mm.word}, {"method", mm.method}, {"verified", mm.verified}};
    if (mm.exhaustive_value) j["max_mean"]["exhaustive_value"] = *mm.exhaustive_value;
    j["final"] = {{"beta", sweep.last().beta}, {"scaled_log_lambda", sweep.last().scaled_log_lambda}};
    j["subaction"] = {{"calibration_error", sub.calibration_error}, {"max_residual", sub.max_residual}, {"tol", sub.tol},
                      {"tail_gap", sub.tail_gap},                   {"selected", sub.selected},         {"calibrated", sub.calibrated}};
    j["sup_bound_holds"] = sweep.sup_bound_holds();
    if (nu_->space().kind() == SpaceKind::TruncatedCountable) {
      auto o = ordering_condition_check(table_, *nu_, cfg_.betas);
      j["ordering"] = {{"hypothesis_holds", o.hypothesis_holds}, {"hypothesis_margin", o.hypothesis_margin},
                       {"claim_checked", o.claim_checked},       {"claim_holds", o.claim_holds},
                       {"message", o.message}};
      if (o.claim_checked) j["ordering"]["claim_margin"] = o.claim_margin;
    }
    emit_json("summary.json", j);
    check("max_mean_certificate", mm.verified ? 0.0 : 1.0, 0.0);
    check("sup_bound", sweep.sup_bound_holds() ? 0.0 : 1.0, 0.0);
    check("calibration_error", sub.calibration_error, sub.tol);
  }

  void involution() {
    auto S = timed("involution", [&] { return solve_involution(table_, *nu_, cfg_.reference, {cfg_.tol, cfg_.max_iter}); });
    auto m = timed("gibbs", [&] { return gibbs_markov(table_, *nu_, gibbs_options()); });
    auto ne = natural_extension_check(S, *nu_, m);
    const std::size_t N = S.kernel.blocks;
    CsvTable w({"y_block", "x_block", "W"});
    for (std::size_t y = 0; y < N; ++y)
      for (std::size_t x = 0; x < N; ++x) w.row({static_cast<double>(y), static_cast<double>(x), S.kernel(y, x)});
    emit("w_table.csv", w.str());
    const auto& D = S.dual.values;
    CsvTable d(tuple_header("index", D.range, "A_star"));
    for (std::size_t t = 0; t < D.size(); ++t) {
      auto row = tuple_row(t, D.atoms, D.range);
      row.push_back(D[t]);
      d.row(row);
    }
    emit("dual_potential.csv", d.str());
    CsvTable p({"x_block", "psi", "psi_reconstructed"});
    for (std::size_t x = 0; x < N; ++x) p.row({static_cast<double>(x), S.psi[x], S.psi_rec[x]});
    emit("reconstruction.csv", p.str());
    json j = base_summary();
    j["log_lambda"] = S.log_lambda;
    j["log_lambda_star"] = S.log_lambda_star;
    j["lambda_gap"] = S.lambda_gap();
    j["c"] = S.c;
    j["reconstruction_error"] = S.reconstruction_error;
    j["cocycle_residual"] = S.dual.cocycle_residual;
    j["x_dependence"] = S.dual.x_dependence;
    j["natural_extension"] = {{"constant", ne.duality_constant}, {"sample", ne.duality_sample}, {"invariance", ne.invariance},
                              {"projection", ne.projection}};
    if (P_->differentiable() && nu_->space().kind() == SpaceKind::CircleGrid) {
      auto der = eigenfunction_derivative(*P_, *nu_, S, 1);
      std::vector<std::string> h{"x_block", "integral"};
      if (der.closed_form) h.push_back("closed_form");
      CsvTable dc(h);
      for (std::size_t x = 0; x < N; ++x) {
        std::vector<double> row{static_cast<double>(x), der.integral[x]};
        if (der.closed_form) row.push_back((*der.closed_form)[x]);
        dc.row(row);
      }
      emit("derivative.csv", dc.str());
      if (der.closed_form) j["derivative_gap"] = relative_sup_gap(der.integral, *der.closed_form);
    }
    emit_json("dual_summary.json", j);
    check("lambda_gap", S.lambda_gap(), 1e-8);
    check("reconstruction_error", S.reconstruction_error, 1e-6);
    check("cocycle_residual", S.dual.cocycle_residual, 1e-9);
    check("natural_extension", ne.worst(), 1e-9);
  }

  void verify_all() {
    AcceptanceSuite suite;
    auto results = suite.run_all(true);
    json arr = json::array();
    for (const auto& r : results) {
      arr.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"metrics", r.metrics}, {"failures", r.failures}});
      man_.timings.emplace_back("criterion_" + std::to_string(r.id), r.seconds);
      man_.checks.push_back({std::to_string(r.id) + " " + r.name, r.passed ? 0.0 : 1.0, 0.0, r.passed});
    }
    json j;
    j["command"] = "verify-all";
    j["scenarios"] = json::array();
    for (const auto& s : suite.scenarios()) j["scenarios"].push_back(s.name);
    j["criteria"] = arr;
    emit_json("summary.json", j);
  }

  const JobConfig& cfg_;
  ReportWriter& out_;
  RunManifest& man_;
  std::optional<AprioriMeasure> nu_;
  std::optional<Potential> P_;
  PotentialTable table_;
};

}  // namespace detail

inline json manifest_json(const RunManifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["version"] = m.version;
  j["command"] = m.command;
  j["files"] = m.files;
  j["timings_file"] = "timings.json";
  json checks = json::array();
  for (const auto& c : m.checks) checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"passed", c.passed}});
  j["checks"] = checks;
  return j;
}

// Runs the job, writes manifest.json and timings.json; with enforce set, a failed check raises VerificationError.
inline RunManifest run_job(const JobConfig& cfg, const fs::path& out_dir, bool enforce = false) {
  ReportWriter w(out_dir);
  RunManifest m;
  m.config_hash = sha256_hex(cfg.text);
  m.command = cfg.command;
  detail::Job(cfg, w, m).run();
  w.write_json("manifest.json", manifest_json(m));
  json t = json::object();
  for (const auto& [k, v] : m.timings) t[k] = v;
  w.write_json("timings.json", t);
  if (enforce || cfg.command == "verify-all")
    for (const auto& c : m.checks)
      if (!c.passed) throw VerificationError("check failed: " + c.name + " (value " + fmt_value(c.value) + ", limit " + fmt_value(c.limit) + ")");
  return m;
}

struct ErrorInfo {
  int exit_code = 1;
  std::string kind = "error";
  json diagnostics = json::object();
};

inline ErrorInfo classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnsupportedError*>(&e)) return {2, "config", json::object()};
  if (auto c = dynamic_cast<const ConvergenceError*>(&e))
    return {3, "convergence", {{"residual", c->residual()}, {"iterations", c->iterations()}}};
  if (auto c = dynamic_cast<const CapacityError*>(&e)) return {4, "capacity", {{"requested", c->requested()}, {"cap", c->cap()}}};
  if (dynamic_cast<const VerificationError*>(&e)) return {1, "verification", json::object()};
  return {1, "error", json::object()};
}

inline json error_json(const std::exception& e) {
  auto info = classify(e);
  return {{"error", {{"kind", info.kind}, {"message", e.what()}, {"exit_code", info.exit_code}, {"diagnostics", info.diagnostics}}}};
}

}  // namespace ruelle
