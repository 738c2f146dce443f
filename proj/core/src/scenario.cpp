#include "visco/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace visco {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

class KeyValues {
public:
  KeyValues(const std::string& text, const std::string& origin) : origin_(origin) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ScenarioError(origin_ + ":" + std::to_string(lineno) +
                                ": expected `key = value`, got `" + line + "`",
                            "", lineno);
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ScenarioError(origin_ + ":" + std::to_string(lineno) + ": empty key", "", lineno);
      if (entries_.count(key))
        throw ScenarioError(origin_ + ":" + std::to_string(lineno) + ": duplicate key `" + key +
                                "` (first at line " + std::to_string(entries_[key].line) + ")",
                            key, lineno);
      entries_[key] = {value, lineno, false};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
  }

  std::string str_required(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ScenarioError(origin_ + ": missing required key `" + key + "`", key, 0);
    it->second.used = true;
    return it->second.value;
  }

  double num(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_double(key, str_required(key));
  }

  double num_required(const std::string& key) const {
    return parse_double(key, str_required(key));
  }

  long integer(const std::string& key, long fallback) const {
    const double v = num(key, static_cast<double>(fallback));
    const long n = std::lround(v);
    if (std::abs(v - static_cast<double>(n)) > 1e-9) fail(key, "expected an integer");
    return n;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str_required(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    fail(key, "expected true/false");
    return fallback;
  }

  std::vector<double> num_list(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    std::istringstream is(str_required(key));
    std::string tok;
    while (is >> tok) out.push_back(parse_double(key, tok));
    return out;
  }

  std::vector<std::string> str_list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    std::istringstream is(str_required(key));
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    throw ScenarioError(origin_ + ":" + std::to_string(line) + ": key `" + key + "`: " + what,
                        key, line);
  }

  void check_all_used() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used)
        throw ScenarioError(origin_ + ":" + std::to_string(entry.line) + ": unknown key `" +
                                key + "`",
                            key, entry.line);
    }
  }

private:
  double parse_double(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) fail(key, "trailing characters in number `" + text + "`");
      return v;
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception&) {
      fail(key, "cannot parse `" + text + "` as a number");
    }
  }

  std::string origin_;
  std::map<std::string, RawEntry> entries_;
};

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

ScenarioError::ScenarioError(std::string message, std::string key, int line)
    : std::runtime_error(std::move(message)), key_(std::move(key)), line_(line) {}

BasisPtr ScenarioConfig::make_basis() const {
  const double top = std::max(specs.source.p, specs.damping.m);
  const int qf = std::max(2, static_cast<int>(std::ceil((top + 1.0) / 2.0)));
  if (rectangle) return SpectralBasis::rectangle(lx, ly, modes, qf);
  return SpectralBasis::interval(length, modes, qf);
}

PastHistory ScenarioConfig::make_past(const BasisPtr& basis) const {
  return PastHistory(basis, past_terms);
}

StepperConfig ScenarioConfig::make_stepper() const {
  StepperConfig cfg;
  cfg.dt = dt;
  cfg.source = source_mode;
  cfg.damping_enabled = damping_enabled;
  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path, bool allow_invalid) {
  std::ifstream is(path);
  if (!is) throw ScenarioError("cannot open config file `" + path + "`");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_scenario_text(buf.str(), allow_invalid, path);
}

ScenarioConfig parse_scenario_text(const std::string& text, bool allow_invalid,
                                   const std::string& origin) {
  const KeyValues kv(text, origin);
  ScenarioConfig cfg;

  const std::string domain_kind = kv.str("domain.kind", "interval");
  if (domain_kind == "interval") {
    cfg.rectangle = false;
    cfg.length = kv.num("domain.length", 1.0);
    if (cfg.length <= 0.0) kv.fail("domain.length", "must be positive");
  } else if (domain_kind == "rectangle") {
    cfg.rectangle = true;
    cfg.lx = kv.num("domain.lx", 1.0);
    cfg.ly = kv.num("domain.ly", 1.0);
    if (cfg.lx <= 0.0 || cfg.ly <= 0.0) kv.fail("domain.kind", "rectangle extents must be positive");
  } else {
    kv.fail("domain.kind", "expected interval|rectangle");
  }

  cfg.modes = static_cast<int>(kv.integer("basis.modes", 16));
  if (cfg.modes < 1) kv.fail("basis.modes", "must be >= 1");

  const std::string family = kv.str("kernel.family", "prony");
  try {
    if (family == "prony") {
      const auto amps = kv.num_list("kernel.amplitudes");
      const auto rates = kv.num_list("kernel.rates");
      cfg.specs.kernel = MemoryKernel::prony(to_eigen(amps), to_eigen(rates),
                                             kv.num("kernel.tail_tol", 1e-10),
                                             kv.num("kernel.s_max", 0.0));
    } else if (family == "power") {
      cfg.specs.kernel =
          MemoryKernel::power(kv.num("kernel.coeff", 1.0), kv.num_required("kernel.exponent"),
                              kv.num("kernel.tail_tol", 1e-10), kv.num("kernel.s_max", 0.0));
    } else if (family == "none") {
      cfg.specs.kernel = MemoryKernel::none();
    } else {
      kv.fail("kernel.family", "expected prony|power|none");
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    kv.fail("kernel.family", e.what());
  }

  try {
    cfg.specs.damping = DampingSpec::power(kv.num("damping.m", 1.0), kv.num("damping.a", 1.0),
                                           kv.num("damping.b", 1.0));
  } catch (const std::exception& e) {
    kv.fail("damping.m", e.what());
  }
  cfg.damping_enabled = kv.flag("damping.enabled", true);

  const std::string shape = kv.str("source.shape", "power");
  try {
    if (shape == "power")
      cfg.specs.source = SourceSpec::power(kv.num("source.p", 1.0), kv.num("source.C", 0.0));
    else if (shape == "dissipative")
      cfg.specs.source =
          SourceSpec::dissipative(kv.num("source.p", 1.0), kv.num("source.C", 0.0));
    else if (shape == "zero")
      cfg.specs.source = SourceSpec::zero();
    else
      kv.fail("source.shape", "expected power|dissipative|zero");
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    kv.fail("source.p", e.what());
  }

  const std::string mode = kv.str("source.mode", "full");
  if (mode == "off") {
    cfg.source_mode = SourceMode::off();
  } else if (mode == "full") {
    cfg.source_mode = SourceMode::full();
  } else if (mode == "truncated") {
    const double K = kv.num("source.K", 0.0);
    if (K <= 0.0) kv.fail("source.K", "truncated mode needs K > 0");
    cfg.source_mode = SourceMode::truncated(K);
  } else if (mode == "cutoff") {
    const double n = kv.num("source.n", 0.0);
    if (n <= 0.0) kv.fail("source.n", "cutoff mode needs n > 0");
    cfg.source_mode = SourceMode::cutoff(n);
  } else {
    kv.fail("source.mode", "expected off|full|truncated|cutoff");
  }

  const long n_terms = kv.integer("past.terms", 0);
  for (long k = 1; k <= n_terms; ++k) {
    const std::string prefix = "past.term" + std::to_string(k) + ".";
    PastHistory::Term term;
    const std::string kind = kv.str_required(prefix + "kind");
    term.mode = static_cast<int>(kv.integer(prefix + "mode", 1));
    term.amp = kv.num(prefix + "amp", 1.0);
    if (kind == "trig") {
      term.kind = PastHistory::Kind::Trig;
      term.omega = kv.num(prefix + "omega", 1.0);
      term.phase = kv.num(prefix + "phase", 0.0);
    } else if (kind == "exp") {
      term.kind = PastHistory::Kind::Exp;
      term.rate = kv.num(prefix + "rate", 0.0);
    } else if (kind == "poly") {
      term.kind = PastHistory::Kind::Poly;
      term.poly = kv.num_list(prefix + "coeffs");
      if (term.poly.empty()) kv.fail(prefix + "coeffs", "polynomial term needs coefficients");
    } else {
      kv.fail(prefix + "kind", "expected trig|poly|exp");
    }
    if (term.mode < 1 || term.mode > cfg.modes)
      kv.fail(prefix + "mode", "mode index outside the basis");
    cfg.past_terms.push_back(std::move(term));
  }

  cfg.dt = kv.num("time.dt", 1e-2);
  if (cfg.dt <= 0.0) kv.fail("time.dt", "must be positive");
  cfg.horizon = kv.num("time.horizon", 1.0);
  if (cfg.horizon <= 0.0) kv.fail("time.horizon", "must be positive");

  cfg.experiment = kv.str("experiment", "");

  cfg.depend_deltas = kv.num_list("depend.deltas");
  cfg.sweep_m = kv.num_list("sweep.m");
  cfg.sweep_p = kv.num_list("sweep.p");
  cfg.sweep_amplitudes = kv.num_list("sweep.amplitudes");
  cfg.sweep_shapes = kv.str_list("sweep.shapes");
  if (cfg.sweep_shapes.empty()) cfg.sweep_shapes = {"power"};
  for (const auto& s : cfg.sweep_shapes)
    if (s != "power" && s != "dissipative") kv.fail("sweep.shapes", "expected power|dissipative");
  cfg.sweep_horizon = kv.num("sweep.horizon", 10.0);
  cfg.converge_levels = static_cast<int>(kv.integer("converge.levels", 5));
  if (cfg.converge_levels < 2) kv.fail("converge.levels", "need at least 2 levels");

  kv.check_all_used();

  cfg.allow_invalid = allow_invalid;
  cfg.assumption_report =
      validate_assumptions(cfg.specs.kernel, cfg.specs.damping, cfg.specs.source);
  if (!cfg.assumption_report.pass() && !allow_invalid) {
    std::string failing;
    for (const auto& c : cfg.assumption_report.checks)
      if (!c.pass) failing += (failing.empty() ? "" : ", ") + c.id + " (" + c.detail + ")";
    throw ScenarioError(origin + ": assumption validation failed: " + failing +
                        "; pass --allow-invalid to run anyway");
  }
  return cfg;
}

}  // namespace visco
