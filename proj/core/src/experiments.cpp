#include "visco/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace visco {

namespace {

void ensure_stream(const std::ofstream& os, const std::string& path) {
  if (!os) throw std::runtime_error("cannot open output file `" + path + "`");
}

// Least-squares slope of log2(values) against the level index; levels are
// successive halvings of dt, so the slope is the observed order.
double fitted_order(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    const double y = -std::log2(std::max(values[static_cast<std::size_t>(i)], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ModelSpecs cell_specs(const ScenarioConfig& cfg, const std::string& shape, double m, double p) {
  ModelSpecs specs = cfg.specs;
  specs.damping = DampingSpec::power(m, cfg.specs.damping.a, cfg.specs.damping.b);
  specs.source = shape == "dissipative" ? SourceSpec::dissipative(p) : SourceSpec::power(p);
  return specs;
}

}  // namespace

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_summary(const Summary& summary, const std::string& path) {
  std::ofstream os(path);
  ensure_stream(os, path);
  for (const auto& [key, value] : summary) os << key << ": " << value << "\n";
}

void write_ledger_csv(const std::vector<LedgerRow>& rows, const std::string& path) {
  std::ofstream os(path);
  ensure_stream(os, path);
  os << "t,E,modE,D_g,D_mu,W_f,residual\n";
  for (const auto& r : rows) {
    os << format_g17(r.t) << ',' << format_g17(r.E) << ',' << format_g17(r.modE) << ','
       << format_g17(r.D_g) << ',' << format_g17(r.D_mu) << ',' << format_g17(r.W_f) << ','
       << format_g17(r.residual) << '\n';
  }
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir,
                            std::uint64_t seed) {
  ScenarioResult result;
  const BasisPtr basis = cfg.make_basis();
  const PastHistory past = cfg.make_past(basis);
  const StepperConfig stepper = cfg.make_stepper();

  SimState state = make_initial_state(past, cfg.specs, stepper);
  const double e0 = quadratic_energy(state);
  result.local_time = estimate_local_time(e0, cfg.specs, basis, 10000, seed + 1);

  LedgerRun lr = run_with_ledger(state, cfg.specs, stepper, cfg.horizon);
  result.summary = lr.summary;
  result.ledger = std::move(lr.rows);
  result.max_abs_residual = lr.max_abs_residual;
  result.exit_status = lr.summary.status == StepStatus::BlowUp ? 3 : 0;

  write_ledger_csv(result.ledger, out_dir + "/ledger.csv");

  const LedgerRow& last = result.ledger.back();
  Summary summary;
  summary.emplace_back("status", result.exit_status == 0 ? "ok" : "blowup");
  summary.emplace_back("final_t", format_g17(last.t));
  summary.emplace_back("final_E", format_g17(last.E));
  summary.emplace_back("final_modE", format_g17(last.modE));
  summary.emplace_back("max_abs_residual", format_g17(result.max_abs_residual));
  summary.emplace_back("blowup", result.exit_status == 0 ? "false" : "true");
  if (result.exit_status != 0) {
    summary.emplace_back("blowup_t", format_g17(result.summary.blowup_t));
    summary.emplace_back("blowup_modE", format_g17(result.summary.blowup_mod_energy));
  }
  summary.emplace_back("E0", format_g17(e0));
  summary.emplace_back("K", format_g17(result.local_time.K));
  summary.emplace_back("T_local", format_g17(result.local_time.T));
  summary.emplace_back("L_K", format_g17(result.local_time.L_K));
  summary.emplace_back("C0", format_g17(result.local_time.C0));
  summary.emplace_back("C_LK", format_g17(result.local_time.C_LK));
  write_summary(summary, out_dir + "/summary.txt");
  return result;
}

DependenceResult dependence_experiment(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (cfg.depend_deltas.empty())
    throw ScenarioError("dependence experiment needs depend.deltas");

  const BasisPtr basis = cfg.make_basis();
  const PastHistory base_past = cfg.make_past(basis);
  const StepperConfig stepper = cfg.make_stepper();
  const long n_steps = std::lround(cfg.horizon / cfg.dt);

  DependenceResult result;
  for (const double delta : cfg.depend_deltas) {
    DependenceRow row;
    row.delta = delta;
    if (delta == 0.0) {
      result.rows.push_back(row);
      continue;
    }
    const PastHistory perturbed = base_past.scaled(delta);
    SimState a = make_initial_state(base_past, cfg.specs, stepper);
    SimState b = make_initial_state(perturbed, cfg.specs, stepper);
    row.E0_diff = difference_energy(a, b);
    row.sup_E_diff = row.E0_diff;
    for (long k = 0; k < n_steps; ++k) {
      const StepOutcome oa = step(a, stepper, cfg.specs);
      const StepOutcome ob = step(b, stepper, cfg.specs);
      if (oa.status == StepStatus::BlowUp || ob.status == StepStatus::BlowUp)
        throw ScenarioError("dependence experiment aborted: run blew up at t = " +
                            format_g17(oa.status == StepStatus::BlowUp ? oa.t : ob.t) +
                            " for delta = " + format_g17(delta));
      row.sup_E_diff = std::max(row.sup_E_diff, difference_energy(a, b));
    }
    row.ratio = row.E0_diff > 0.0 ? row.sup_E_diff / row.E0_diff : 0.0;
    result.rows.push_back(row);
  }

  // Stability of the last four nonzero ratios.
  std::vector<double> tail;
  for (auto it = result.rows.rbegin(); it != result.rows.rend() && tail.size() < 4; ++it)
    if (it->ratio > 0.0) tail.push_back(it->ratio);
  if (tail.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
    result.ratio_spread = *hi / *lo;
    result.ratios_stable = tail.size() == 4 && result.ratio_spread <= 2.0;
  }

  std::ofstream os(out_dir + "/depend.csv");
  ensure_stream(os, out_dir + "/depend.csv");
  os << "delta,E_diff0,sup_E_diff,ratio\n";
  for (const auto& r : result.rows) {
    os << format_g17(r.delta) << ',' << format_g17(r.E0_diff) << ','
       << format_g17(r.sup_E_diff) << ',' << format_g17(r.ratio) << '\n';
  }

  Summary summary;
  summary.emplace_back("ratio_spread_last4", format_g17(result.ratio_spread));
  summary.emplace_back("ratios_stable", result.ratios_stable ? "true" : "false");
  // For p > 3 the continuous-dependence statement also assumes
  // u0(0) in L^{3(p-1)/2}; on a fixed basis every field has the norm, so it
  // is recorded rather than gated on.
  const double p = cfg.specs.source.p;
  if (p > 3.0) {
    const Field u0(basis, base_past.eval(0.0));
    summary.emplace_back("u0_L_3(p-1)/2_norm", format_g17(u0.lp_norm(1.5 * (p - 1.0))));
  }
  write_summary(summary, out_dir + "/depend_summary.txt");
  return result;
}

SweepResult sweep_experiment(const ScenarioConfig& cfg, const std::string& out_dir,
                             int n_threads) {
  if (cfg.sweep_m.empty() || cfg.sweep_p.empty() || cfg.sweep_amplitudes.empty())
    throw ScenarioError("sweep experiment needs sweep.m, sweep.p, sweep.amplitudes");

  const BasisPtr basis = cfg.make_basis();

  struct CellSpec {
    std::string shape;
    double m, p, amp;
  };
  std::vector<CellSpec> todo;
  for (const auto& shape : cfg.sweep_shapes)
    for (double m : cfg.sweep_m)
      for (double p : cfg.sweep_p)
        for (double amp : cfg.sweep_amplitudes) todo.push_back({shape, m, p, amp});

  // Cells outside the standing assumptions (blow-up regimes with m < p)
  // need the explicit override.
  if (!cfg.allow_invalid) {
    for (const auto& c : todo) {
      const ModelSpecs specs = cell_specs(cfg, c.shape, c.m, c.p);
      if (!validate_assumptions(specs.kernel, specs.damping, specs.source).pass())
        throw ScenarioError("sweep cell (shape=" + c.shape + ", m=" + format_g17(c.m) +
                            ", p=" + format_g17(c.p) +
                            ") fails assumption validation; pass --allow-invalid to sweep it");
    }
  }

  SweepResult result;
  result.cells.resize(todo.size());

  auto run_cell = [&](std::size_t idx) {
    const CellSpec& c = todo[idx];
    SweepCell cell;
    cell.shape = c.shape;
    cell.m = c.m;
    cell.p = c.p;
    cell.amplitude = c.amp;

    const ModelSpecs specs = cell_specs(cfg, c.shape, c.m, c.p);
    cell.assumption_ok =
        validate_assumptions(specs.kernel, specs.damping, specs.source).pass();

    std::vector<PastHistory::Term> terms = cfg.past_terms;
    for (auto& t : terms) t.amp *= c.amp;
    const PastHistory past(basis, terms);

    StepperConfig stepper = cfg.make_stepper();
    SimState state = make_initial_state(past, specs, stepper);
    const double mod_e0 = modified_energy(state, specs.source.p);
    const GlobalBound gb = assemble_global_bound(specs, basis->measure());

    double max_mod_e = mod_e0;
    bool below = true;
    const long n_steps = std::lround(cfg.sweep_horizon / stepper.dt);
    StepStatus status = StepStatus::Ok;
    for (long k = 0; k < n_steps; ++k) {
      const StepOutcome out = step(state, stepper, specs);
      if (out.status == StepStatus::BlowUp) {
        status = StepStatus::BlowUp;
        max_mod_e = std::max(max_mod_e, out.modified_energy);
        break;
      }
      max_mod_e = std::max(max_mod_e, out.modified_energy);
      if (gb.valid && std::log(std::max(out.modified_energy, 1e-300)) >
                          gb.log_ceiling(mod_e0, cfg.sweep_horizon, state.t))
        below = false;
    }
    cell.classification = status == StepStatus::BlowUp ? "blow-up-indicator" : "bounded";
    cell.max_mod_energy = max_mod_e;
    cell.end_t = state.t;
    cell.log_ceiling =
        gb.valid ? gb.log_ceiling(mod_e0, cfg.sweep_horizon, cfg.sweep_horizon) : 0.0;
    cell.below_ceiling = gb.valid && status == StepStatus::Ok && below;
    result.cells[idx] = std::move(cell);
  };

  unsigned workers = n_threads > 0 ? static_cast<unsigned>(n_threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(todo.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < todo.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1))
          run_cell(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  result.all_dominated_bounded = true;
  result.dissipative_bounded = true;
  for (const auto& cell : result.cells) {
    const bool bounded = cell.classification == "bounded";
    if (cell.shape == "power" && cell.m >= cell.p && !bounded)
      result.all_dominated_bounded = false;
    if (cell.shape == "dissipative" && !bounded) result.dissipative_bounded = false;
    if (!bounded) result.any_blowup_indicator = true;
  }

  std::ofstream os(out_dir + "/sweep.csv");
  ensure_stream(os, out_dir + "/sweep.csv");
  os << "shape,m,p,amplitude,assumption_ok,classification,max_modE,end_t,log_ceiling,below_"
        "ceiling\n";
  for (const auto& c : result.cells) {
    os << c.shape << ',' << format_g17(c.m) << ',' << format_g17(c.p) << ','
       << format_g17(c.amplitude) << ',' << (c.assumption_ok ? "true" : "false") << ','
       << c.classification << ',' << format_g17(c.max_mod_energy) << ','
       << format_g17(c.end_t) << ',' << format_g17(c.log_ceiling) << ','
       << (c.below_ceiling ? "true" : "false") << '\n';
  }
  return result;
}

ConvergenceResult convergence_study(const ScenarioConfig& cfg, const std::string& out_dir) {
  const BasisPtr basis = cfg.make_basis();
  const PastHistory past = cfg.make_past(basis);

  ConvergenceResult result;
  for (int level = 0; level < cfg.converge_levels; ++level) {
    StepperConfig stepper = cfg.make_stepper();
    stepper.dt = cfg.dt / std::pow(2.0, level);

    // Band-limited separable test function for the weak-form audit.
    Eigen::VectorXd phi_coeffs = Eigen::VectorXd::Zero(basis->modes());
    for (int j = 0; j < std::min(3, basis->modes()); ++j) phi_coeffs[j] = std::pow(0.5, j);
    TestFunction phi{Field(basis, phi_coeffs), [](double t) { return std::cos(2.0 * t); },
                     [](double t) { return -2.0 * std::sin(2.0 * t); }};

    SimState state = make_initial_state(past, cfg.specs, stepper);
    LedgerBuilder ledger(cfg.specs, stepper);
    WeakFormAuditor weak(phi, cfg.specs, stepper);
    Trajectory traj(&past, stepper.dt);
    double max_weak = 0.0;
    StepCallback cb = [&](const SimState& s) {
      ledger.push(s);
      weak.push(s);
      traj.push(s.u.coeffs);
      max_weak = std::max(max_weak, std::abs(weak.residual()));
    };
    const RunSummary rs = run(state, cfg.specs, stepper, cfg.horizon, cb);
    if (rs.status == StepStatus::BlowUp)
      throw ScenarioError("convergence study aborted: run blew up at level " +
                          std::to_string(level));

    ConvergenceRow row;
    row.dt = stepper.dt;
    row.max_identity_residual = ledger.max_abs_residual();
    row.max_weak_residual = max_weak;
    if (state.w) {
      const ConvolutionValue direct = direct_convolution_oracle(
          traj, cfg.specs.kernel, basis, state.t, stepper.dt);
      const Field grid_l = state.w->memory_operator();
      const Field diff(basis, grid_l.coeffs - direct.l_operator.coeffs);
      row.oracle_discrepancy = diff.norm(Norm::Hneg1);
    }
    result.rows.push_back(row);
  }

  std::vector<double> vr, vw, vo;
  for (const auto& r : result.rows) {
    vr.push_back(r.max_identity_residual);
    vw.push_back(r.max_weak_residual);
    vo.push_back(r.oracle_discrepancy);
  }
  auto at_floor = [](const std::vector<double>& v) {
    for (double x : v)
      if (x >= 1e-12) return false;
    return true;
  };
  auto column = [&](const std::vector<double>& v, bool& floor, double& order) {
    floor = at_floor(v);
    if (!floor) {
      order = fitted_order(v);
      for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1]) result.monotone_decay = false;
    }
  };
  column(vr, result.floor_identity, result.order_identity);
  column(vw, result.floor_weak, result.order_weak);
  column(vo, result.floor_oracle, result.order_oracle);

  std::ofstream os(out_dir + "/converge.csv");
  ensure_stream(os, out_dir + "/converge.csv");
  os << "dt,max_identity_residual,max_weak_residual,oracle_discrepancy\n";
  for (const auto& r : result.rows) {
    os << format_g17(r.dt) << ',' << format_g17(r.max_identity_residual) << ','
       << format_g17(r.max_weak_residual) << ',' << format_g17(r.oracle_discrepancy) << '\n';
  }

  Summary summary;
  auto report = [&](const char* key, bool floor, double order) {
    summary.emplace_back(key, floor ? "round-off floor" : format_g17(order));
  };
  report("order_identity", result.floor_identity, result.order_identity);
  report("order_weak", result.floor_weak, result.order_weak);
  report("order_oracle", result.floor_oracle, result.order_oracle);
  summary.emplace_back("monotone_decay", result.monotone_decay ? "true" : "false");
  write_summary(summary, out_dir + "/converge_summary.txt");
  return result;
}

}  // namespace visco
