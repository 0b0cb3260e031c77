#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "modpot/acceptance.hpp"
#include "modpot/capacity.hpp"
#include "modpot/config.hpp"
#include "modpot/equilibrium.hpp"
#include "modpot/evans.hpp"
#include "modpot/green.hpp"
#include "modpot/io.hpp"

// Command pipelines behind the CLI: load a config, run the module chain,
// persist a run record plus plot-ready CSV tables, return a process exit
// status. Every artifact embeds the seed and resolution it was produced with.

namespace modpot::runner {

struct Context {
  ExperimentConfig cfg;
  std::string out_dir;
  unsigned long long seed = 0;

  std::string provenance(const std::string& extra = "") const {
    std::string p = "seed=" + std::to_string(seed);
    if (!extra.empty()) p += " " + extra;
    return p;
  }
};

namespace detail {

inline void summary_common(KvRecord& kv, const Context& ctx, const std::string& command) {
  kv.push_back({"command", command});
  kv.push_back({"config", std::filesystem::path(ctx.cfg.name()).filename().string()});
  kv.push_back({"seed", std::to_string(ctx.seed)});
  for (const auto& [k, v] : ctx.cfg.entries()) kv.push_back({"config." + k, v.first});
}

inline void field_csv(const std::string& path, const Field& f, const std::string& prov) {
  CsvWriter csv(path, {"r", "theta", "value"}, prov);
  const auto& lay = *f.layout;
  for (int i = 0; i < lay.node_count(); ++i)
    csv.row({lay.node_r[i], lay.node_theta[i], f.v[i]});
}

}  // namespace detail

inline int run_classify(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  const double r_k = ctx.cfg.get_double("classify.r_k", 1.0);
  const std::vector<double> radii = ctx.cfg.get_radii("classify.radii");
  const double cpo = ctx.cfg.get_double(
      "grid.cells_per_octave", ctx.cfg.resolution() / std::log2(radii.back() / r_k));

  ClassifyResult res = classify(m, r_k, radii, cpo);

  {
    CsvWriter csv(ctx.out_dir + "/classify_levels.csv",
                  {"R", "cap_energy", "cap_flux", "fit_x"},
                  ctx.provenance("cpo=" + format_double(cpo)));
    for (size_t i = 0; i < res.exhaustion.levels.size(); ++i)
      csv.row({res.exhaustion.radii[i], res.exhaustion.levels[i].cap_energy,
               res.exhaustion.levels[i].cap_flux, res.exhaustion.fit_x[i]});
  }
  KvRecord kv;
  detail::summary_common(kv, ctx, "classify");
  kv.push_back({"verdict", to_string(res.verdict)});
  kv.push_back({"cap_limit", format_double(res.cap_limit)});
  kv.push_back({"cap_first", format_double(res.cap_first)});
  kv.push_back({"numeric_parabolic", res.numeric_parabolic ? "1" : "0"});
  kv.push_back({"quadrature_divergent", res.quadrature_divergent ? "1" : "0"});
  kv.push_back({"numeric_threshold", "1e-3 * cap_first"});
  kv.push_back({"pass", res.verdict != ManifoldType::Inconclusive ? "1" : "0"});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return res.verdict != ManifoldType::Inconclusive ? 0 : 1;
}

inline int run_capacity(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  Condenser c(ctx.cfg.get_double("condenser.r_inner"), ctx.cfg.get_double("condenser.r_outer"));
  const int cells = ctx.cfg.resolution();
  CapacityReport rep = condenser_capacity(m, c, cells);

  if (rep.valid)
    detail::field_csv(ctx.out_dir + "/capacity_potential.csv", rep.potential,
                      ctx.provenance("cells=" + std::to_string(cells)));
  KvRecord kv;
  detail::summary_common(kv, ctx, "capacity");
  kv.push_back({"cap_energy", format_double(rep.cap_energy)});
  kv.push_back({"cap_flux", format_double(rep.cap_flux)});
  kv.push_back({"agreement", format_double(rep.agreement)});
  kv.push_back({"agreement_tol", "1e-4"});
  kv.push_back({"h", format_double(rep.h)});
  kv.push_back({"valid", rep.valid ? "1" : "0"});
  if (!rep.note.empty()) kv.push_back({"note", rep.note});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return rep.valid ? 0 : 1;
}

inline int run_green(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  const std::vector<double> radii = ctx.cfg.get_radii("green.radii");
  const double probe = ctx.cfg.get_double("green.probe_r", 1.0);
  const double guard = ctx.cfg.get_double("green.guard", 1e6);
  const double cpo = ctx.cfg.get_double("grid.cells_per_octave", 16);
  const double r_first = ctx.cfg.get_double("green.r_first", probe / 50);

  RadialGrid master = RadialGrid::disk(r_first, radii.back(), cpo);
  GreenExhaustion ex = green_exhaustion(m, master, radii, probe, guard);

  {
    CsvWriter csv(ctx.out_dir + "/green_levels.csv", {"R", "probe_value", "sup_change"},
                  ctx.provenance("cpo=" + format_double(cpo)));
    for (size_t i = 0; i < ex.radii.size(); ++i)
      csv.row({ex.radii[i], ex.probe_values[i],
               i == 0 ? 0.0 : ex.sup_changes[i - 1]});
  }
  detail::field_csv(ctx.out_dir + "/green_kernel.csv", ex.last.values,
                    ctx.provenance("cpo=" + format_double(cpo)));

  KvRecord kv;
  detail::summary_common(kv, ctx, "green");
  kv.push_back({"verdict", to_string(ex.verdict)});
  kv.push_back({"probe_r", format_double(probe)});
  kv.push_back({"probe_last", format_double(ex.probe_values.back())});
  kv.push_back({"guard", format_double(guard)});
  kv.push_back({"flux_scale", format_double(ex.last.flux_scale)});
  bool pass = ex.verdict != ExhaustionVerdict::Undecided;
  if (ctx.cfg.has("green.expect"))
    pass = to_string(ex.verdict) == ctx.cfg.get_string("green.expect");
  kv.push_back({"pass", pass ? "1" : "0"});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return pass ? 0 : 1;
}

inline int run_equilibrium(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  const double plate_r = ctx.cfg.get_double("equilibrium.plate_r", 1.0);
  const double domain_r = ctx.cfg.get_double("equilibrium.domain_r");
  const double cpo = ctx.cfg.get_double("grid.cells_per_octave", 16);

  Operator op;
  std::vector<int> nodes;
  if (m.dim() == 2) {
    const int nt = static_cast<int>(ctx.cfg.get_int("grid.n_theta", 12));
    op = assemble(m, PolarGrid(RadialGrid::disk(plate_r / 4, domain_r, cpo), nt));
    const auto& lay = *op.layout;
    const int i0 = lay.nearest_cell(plate_r, lay.node_theta[0]) / lay.n_theta;
    for (int j = 0; j < nt; ++j) nodes.push_back(i0 * nt + j);
  } else {
    op = assemble(m, RadialGrid::disk(plate_r / 50, domain_r, cpo));
    nodes.push_back(op.layout->nearest_cell(plate_r));
  }

  KernelMatrix km;
  const unsigned long long key = kernel_cache_key(m, *op.layout, nodes);
  const std::string cache_path = ctx.out_dir + "/kernel_matrix.bin";
  const bool cache = ctx.cfg.get_int("cache", 0) != 0;
  // the potential check needs kernel fields, so the cache only short-circuits
  // the matrix itself
  km = kernel_matrix(op, nodes, true);
  if (cache) save_kernel_matrix(cache_path, km, key);

  EquilibriumResult eq = equilibrium_measure(km);

  std::vector<int> plate;
  for (int i = 0; i < op.layout->n_cells; ++i)
    if (op.layout->node_r[i] <= op.layout->node_r[nodes[0]] + 1e-12) plate.push_back(i);
  CapacityReport crep = condenser_capacity(op, plate);
  std::vector<int> probes;
  for (double f : {2.0, 4.0, 8.0})
    probes.push_back(op.layout->nearest_cell(plate_r * f, 0.7));
  PotentialCheckReport pot =
      equilibrium_potential_check(eq.nu, km, crep.potential, op, eq.eps, probes);

  {
    CsvWriter csv(ctx.out_dir + "/equilibrium_measure.csv", {"node", "r", "theta", "weight"},
                  ctx.provenance("cpo=" + format_double(cpo)));
    for (size_t k = 0; k < eq.nu.support.size(); ++k)
      csv.row({static_cast<double>(eq.nu.support[k]), op.layout->node_r[eq.nu.support[k]],
               op.layout->node_theta[eq.nu.support[k]], eq.nu.w[k]});
  }
  KvRecord kv;
  detail::summary_common(kv, ctx, "equilibrium");
  kv.push_back({"eps", format_double(eq.eps)});
  kv.push_back({"converged", eq.converged ? "1" : "0"});
  kv.push_back({"iterations", std::to_string(eq.iterations)});
  kv.push_back({"cap_condenser", format_double(crep.cap_energy)});
  kv.push_back({"eps_times_cap", format_double(eq.eps * crep.cap_energy)});
  kv.push_back({"potential_check_ok", pot.ok() ? "1" : "0"});
  kv.push_back({"potential_match_err", format_double(pot.max_match_error)});
  kv.push_back({"psd_on_simplex", km.psd_on_simplex ? "1" : "0"});
  for (size_t i = 0; i < pot.failures.size(); ++i)
    kv.push_back({"failure_" + std::to_string(i), pot.failures[i]});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return (eq.converged && pot.ok()) ? 0 : 1;
}

inline int run_transfinite(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  if (m.dim() != 2) throw ConfigError("transfinite: ring plates need manifold.dim = 2", 0);
  const double ring_r = ctx.cfg.get_double("transfinite.ring_r", 1.0);
  const double domain_r = ctx.cfg.get_double("transfinite.domain_r");
  const int n_max = static_cast<int>(ctx.cfg.get_int("transfinite.n_max", 6));
  const int nt = static_cast<int>(ctx.cfg.get_int("grid.n_theta", 14));
  const double cpo = ctx.cfg.get_double("grid.cells_per_octave", 8);

  Operator op = assemble(m, PolarGrid(RadialGrid::disk(ring_r / 4, domain_r, cpo), nt));
  const auto& lay = *op.layout;
  const int i0 = lay.nearest_cell(ring_r, lay.node_theta[0]) / lay.n_theta;
  std::vector<int> ring;
  for (int j = 0; j < nt; ++j) ring.push_back(i0 * nt + j);

  KernelMatrix km;
  const unsigned long long key = kernel_cache_key(m, lay, ring);
  const std::string cache_path = ctx.out_dir + "/kernel_matrix.bin";
  if (!(ctx.cfg.get_int("cache", 0) != 0 && load_kernel_matrix(cache_path, key, km))) {
    km = kernel_matrix(op, ring, false);
    if (ctx.cfg.get_int("cache", 0) != 0) save_kernel_matrix(cache_path, km, key);
  }

  bool pass = true;
  double prev_rho = 0;
  CsvWriter csv(ctx.out_dir + "/transfinite.csv",
                {"n", "rho_brute", "rho_exchange", "tau_brute", "tau_greedy"},
                ctx.provenance("n_theta=" + std::to_string(nt)));
  std::vector<double> ntau(n_max + 1, 0.0);
  for (int n = 2; n <= n_max; ++n) {
    ConfigurationValue rho_b = transfinite_diameter(km, n, SearchMode::Brute);
    ConfigurationValue rho_x = transfinite_diameter(km, n, SearchMode::Exchange);
    ConfigurationValue tau_b = chebyshev_constant(km, n, SearchMode::Brute);
    ConfigurationValue tau_g = chebyshev_constant(km, n, SearchMode::Greedy);
    csv.row({static_cast<double>(n), rho_b.value, rho_x.value, tau_b.value, tau_g.value});
    pass = pass && rho_b.value >= prev_rho - 1e-12;
    pass = pass && std::abs(rho_b.value - rho_x.value) <= 1e-9 * std::max(1.0, rho_b.value);
    prev_rho = rho_b.value;
    ntau[n] = n * tau_b.value;
  }
  ntau[1] = chebyshev_constant(km, 1, SearchMode::Brute).value;
  for (int n = 1; n < n_max; ++n)
    for (int mm = 1; n + mm <= n_max; ++mm)
      pass = pass && ntau[n + mm] >= ntau[n] + ntau[mm] - 1e-10;

  EquilibriumResult eq = equilibrium_measure(km);
  pass = pass && ntau[n_max] / n_max >= prev_rho * 0.95 && prev_rho >= eq.eps * 0.95;

  KvRecord kv;
  detail::summary_common(kv, ctx, "transfinite");
  kv.push_back({"eps", format_double(eq.eps)});
  kv.push_back({"rho_max_n", format_double(prev_rho)});
  kv.push_back({"tau_max_n", format_double(ntau[n_max] / n_max)});
  kv.push_back({"chain_slack", "0.05"});
  kv.push_back({"pass", pass ? "1" : "0"});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return pass ? 0 : 1;
}

inline int run_evans(const Context& ctx) {
  Manifold m = ctx.cfg.manifold();
  const double r_k = ctx.cfg.get_double("evans.r_k", 1.0);
  bool pass = true;
  KvRecord kv;
  detail::summary_common(kv, ctx, "evans");

  RadialGrid grid = [&] {
    const std::string kind = ctx.cfg.get_string("evans.grid", "log");
    if (kind == "log") {
      const double step = ctx.cfg.get_double("evans.log_step", pi / 64);
      const int count = static_cast<int>(ctx.cfg.get_int("evans.log_cells", 256));
      std::vector<double> faces(count + 1);
      for (int k = 0; k <= count; ++k) faces[k] = r_k * std::exp(k * step);
      return RadialGrid::from_faces(std::move(faces));
    }
    const double r_out = ctx.cfg.get_double("evans.r_out");
    return RadialGrid::uniform(r_k, r_out, ctx.cfg.resolution());
  }();

  EvansPotential E = evans_radial(m, r_k, grid);
  {
    CsvWriter csv(ctx.out_dir + "/evans_profile.csv", {"r", "E"}, ctx.provenance());
    for (int i = 0; i < E.op.layout->n_cells; ++i)
      csv.row({E.op.layout->node_r[i], E.field.v[i]});
  }
  if (ctx.cfg.has("evans.c_levels")) {
    TruncatedEnergyReport ter = truncated_energy_check(E, ctx.cfg.get_list("evans.c_levels"));
    CsvWriter csv(ctx.out_dir + "/evans_energy.csv", {"c", "D_truncated"}, ctx.provenance());
    for (size_t i = 0; i < ter.levels.size(); ++i) csv.row({ter.levels[i], ter.energies[i]});
    pass = pass && ter.all_bounded && ter.all_saturated;
    kv.push_back({"energy_bounded", ter.all_bounded ? "1" : "0"});
    kv.push_back({"energy_saturated", ter.all_saturated ? "1" : "0"});
    kv.push_back({"energy_tol", "0.02"});
  }

  if (ctx.cfg.has("evans.ring_radii")) {
    CombinationOptions copt;
    copt.ring_radii = ctx.cfg.get_radii("evans.ring_radii");
    copt.truncations = ctx.cfg.get_radii("evans.truncations");
    copt.poles_per_ring = static_cast<int>(ctx.cfg.get_int("evans.poles_per_ring", 8));
    copt.n_theta = static_cast<int>(ctx.cfg.get_int("grid.n_theta", 8));
    copt.cells_per_octave = ctx.cfg.get_double("grid.cells_per_octave", 6);
    CombinationResult comb = evans_green_combination(m, r_k, copt);
    const auto& lay = *comb.E.op.layout;
    CsvWriter csv(ctx.out_dir + "/evans_combination.csv", {"r", "theta", "E"},
                  ctx.provenance());
    for (int i = 0; i < lay.n_cells; ++i)
      csv.row({lay.node_r[i], lay.node_theta[i], comb.E.field.v[i]});
    pass = pass && comb.truncation_stable;
    kv.push_back({"combination_stable", comb.truncation_stable ? "1" : "0"});
    kv.push_back({"combination_change", format_double(comb.last_change)});
    kv.push_back({"combination_guard", format_double(copt.guard_change)});
    std::string poles, weights;
    for (size_t k = 0; k < comb.E.pole_r.size(); ++k) {
      poles += (k ? " " : "") + format_double(comb.E.pole_r[k]);
      weights += (k ? " " : "") + format_double(comb.E.weights[k]);
    }
    kv.push_back({"combination_pole_r", poles});
    kv.push_back({"combination_weights", weights});
  }

  kv.push_back({"E_max", format_double(*std::max_element(E.field.v.begin(), E.field.v.end()))});
  kv.push_back({"pass", pass ? "1" : "0"});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return pass ? 0 : 1;
}

inline int run_suite(const Context& ctx) {
  acceptance::Options opt;
  opt.seed = ctx.seed;
  opt.scratch_dir = ctx.out_dir + "/determinism";
  std::vector<acceptance::CriterionResult> results = acceptance::run_all(opt);

  CsvWriter csv(ctx.out_dir + "/manifest.csv", {"criterion", "name", "pass", "detail"},
                ctx.provenance());
  auto sanitize = [](std::string s) {
    for (char& c : s)
      if (c == ',' || c == '\n') c = ';';
    return s;
  };
  int failed = 0;
  for (const auto& r : results) {
    csv.row_text({std::to_string(r.id), sanitize(r.name), r.pass ? "1" : "0",
                  sanitize(r.detail)});
    if (!r.pass) ++failed;
  }
  KvRecord kv;
  detail::summary_common(kv, ctx, "suite");
  kv.push_back({"criteria", std::to_string(results.size())});
  kv.push_back({"failed", std::to_string(failed)});
  kv.push_back({"pass", failed == 0 ? "1" : "0"});
  write_record(ctx.out_dir + "/summary.txt", kv);
  return failed == 0 ? 0 : 1;
}

inline int run_command(const std::string& command, const Context& ctx) {
  std::filesystem::create_directories(ctx.out_dir);
  if (command == "classify") return run_classify(ctx);
  if (command == "capacity") return run_capacity(ctx);
  if (command == "green") return run_green(ctx);
  if (command == "equilibrium") return run_equilibrium(ctx);
  if (command == "transfinite") return run_transfinite(ctx);
  if (command == "evans") return run_evans(ctx);
  if (command == "suite") return run_suite(ctx);
  throw ConfigError("unknown command `" + command + "`", 0);
}

}  // namespace modpot::runner
