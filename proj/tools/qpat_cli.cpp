// qpat: command-line front end to the reconstruction library.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
// message carries the failing stage), 4 acceptance failure in `report`.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qpat/config.hpp"
#include "qpat/field_io.hpp"
#include "qpat/harness.hpp"

namespace fs = std::filesystem;
using namespace qpat;

namespace {

std::string hex(std::uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

struct Globals {
  std::string config;
  std::string out = "qpat_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  std::optional<double> kmag;
  std::optional<std::string> mask;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config.empty() ? parse_config("") : load_config(g.config);
  if (g.seed) cfg.experiment.seed = *g.seed;
  if (g.resolution) cfg.phantom.resolution = *g.resolution;
  if (g.kmag) cfg.experiment.kmag = *g.kmag;
  if (g.mask) cfg.phantom.mask = MaskSpec::parse(*g.mask);
  finalize(cfg);
  return cfg;
}

fs::path ensure_out(const Globals& g) {
  const fs::path p(g.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  require(!ec, ErrorKind::io, "cannot create output directory " + p.string());
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + p.string());
  os << s;
}

io::Manifest setup_manifest(const RunConfig& cfg, double kmag) {
  return {{"resolution", std::to_string(cfg.phantom.resolution)},
          {"mask", cfg.phantom.mask.label()},
          {"route", to_string(cfg.route)},
          {"kmag", io::format_double(kmag)},
          {"seed", std::to_string(cfg.experiment.seed)},
          {"config_hash", hex(cfg.experiment.config_hash)}};
}

BoundaryValues<cplx> as_complex(const BoundaryValues<double>& v) {
  BoundaryValues<cplx> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

void save_report(const fs::path& dir, const ExperimentReport& rep) {
  std::ofstream csv(dir / (rep.name + ".csv"), std::ios::binary);
  require(static_cast<bool>(csv), ErrorKind::io, "cannot write " + (dir / (rep.name + ".csv")).string());
  rep.write_csv(csv);
  std::ofstream sum(dir / (rep.name + "_summary.txt"), std::ios::binary);
  rep.write_summary(sum);
  rep.write_summary(std::cout);
}

int cmd_phantom(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  const Phantom ph = make_phantom(cfg.phantom);
  const Liouville lv = liouville_forward(ph.D, ph.sigma_a);
  io::write_pfg(out / "D.pfg", ph.D);
  io::write_pfg(out / "sigma_a.pfg", ph.sigma_a);
  io::write_pfg(out / "mu.pfg", lv.mu);
  io::write_pfg(out / "q.pfg", lv.q);
  io::Manifest m = setup_manifest(cfg, 0.0);
  m.erase("kmag");
  const char* names[3] = {"value", "diff1", "diff2"};
  for (int i = 0; i < 3; ++i) {
    m[std::string("sqrtD_sup.") + names[i]] = io::format_double(ph.sqrtD_sup[static_cast<std::size_t>(i)]);
    m[std::string("sigma_sup.") + names[i]] = io::format_double(ph.sigma_sup[static_cast<std::size_t>(i)]);
  }
  io::write_manifest(out / "manifest.txt", m);
  std::cout << "phantom " << cfg.phantom.resolution << "x" << cfg.phantom.resolution << " written to " << out << "\n";
  return 0;
}

int cmd_cgo(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  const Phantom ph = make_phantom(cfg.phantom);
  const Liouville lv = liouville_forward(ph.D, ph.sigma_a);
  const DomainMask mask = cfg.phantom.mask.build(ph.grid);
  const double kmag = cfg.experiment.kmag > 0 ? cfg.experiment.kmag : default_kmag(mask);
  std::vector<CGOParams> params;
  if (cfg.route == Route::two_data) {
    params.push_back(CGOParams::from_kappa((kmag / norm(cfg.experiment.kdir)) * cfg.experiment.kdir));
  } else {
    const auto set = multi_rho_set(kmag);
    params = {set.rho1, set.rho2};
  }
  io::Manifest m = setup_manifest(cfg, kmag);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const CGOSolution sol = make_cgo(lv.q, mask, params[k], cfg.experiment.pipeline.linear);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string tag = std::to_string(k);
    io::write_pfg(out / ("u" + tag + ".pfg"), sol.u);
    io::write_pfg(out / ("psi" + tag + ".pfg"), sol.psi);
    io::write_pfgb(out / ("trace" + tag + ".pfgb"), mask, sol.trace);
    m["cgo" + tag + ".residual"] = io::format_double(sol.residual_norm);
    m["cgo" + tag + ".runtime_s"] = io::format_double(secs);
    std::cout << "cgo " << k << ": residual " << sol.residual_norm << " in " << secs << " s\n";
  }
  io::write_manifest(out / "manifest.txt", m);
  return 0;
}

// forward: illuminations and diffusion solutions, no internal data yet
int cmd_forward(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  const Phantom ph = make_phantom(cfg.phantom);
  const DomainMask mask = cfg.phantom.mask.build(ph.grid);
  const double kmag = cfg.experiment.kmag > 0 ? cfg.experiment.kmag : default_kmag(mask);
  const Simulation sim = simulate(ph, cfg.phantom.mask, cfg.route, kmag, cfg.experiment.kdir,
                                  cfg.experiment.pipeline.linear);
  io::Manifest m = setup_manifest(cfg, kmag);
  for (std::size_t k = 0; k < sim.data.size(); ++k) {
    const std::string tag = std::to_string(k);
    ComplexField u(ph.grid);
    for (std::size_t n = 0; n < u.size(); ++n)
      if (mask.inside(n)) u[n] = sim.data[k].d[n] / sim.liouville.mu[n];
    io::write_pfg(out / ("u" + tag + ".pfg"), u);
    io::write_pfgb(out / ("illum" + tag + ".pfgb"), mask, sim.data[k].g);
  }
  m["count"] = std::to_string(sim.data.size());
  m["cgo_residual"] = io::format_double(sim.cgo_residual);
  io::write_manifest(out / "manifest.txt", m);
  std::cout << "forward: " << sim.data.size() << " solution(s), CGO residual " << sim.cgo_residual << "\n";
  return 0;
}

int cmd_synthesize(const Globals& g, double noise, double corr_cells) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  const Phantom ph = make_phantom(cfg.phantom);
  const DomainMask mask = cfg.phantom.mask.build(ph.grid);
  const double kmag = cfg.experiment.kmag > 0 ? cfg.experiment.kmag : default_kmag(mask);
  Simulation sim = simulate(ph, cfg.phantom.mask, cfg.route, kmag, cfg.experiment.kdir,
                            cfg.experiment.pipeline.linear);
  require(noise >= 0.0, ErrorKind::configuration, "--noise must be >= 0");
  if (noise > 0.0)
    for (std::size_t k = 0; k < sim.data.size(); ++k)
      sim.data[k] = add_noise(sim.data[k], noise, corr_cells * ph.grid.dx, cfg.experiment.seed * 4 + k);
  save_internal_data(out, sim.data, mask);
  io::write_pfgb(out / "sqrtD_boundary.pfgb", mask, as_complex(sim.sqrtD_boundary));
  fs::create_directories(out / "truth");
  io::write_pfg(out / "truth" / "D.pfg", ph.D);
  io::write_pfg(out / "truth" / "sigma_a.pfg", ph.sigma_a);
  io::write_pfg(out / "truth" / "mu.pfg", sim.liouville.mu);
  io::write_pfg(out / "truth" / "q.pfg", sim.liouville.q);
  io::write_manifest(out / "setup.txt", setup_manifest(cfg, kmag));
  std::cout << "synthesized " << sim.data.size() << " data set(s) into " << out << "\n";
  return 0;
}

int cmd_recon(const Globals& g, Route route, const std::string& data_dir) {
  RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  const fs::path in(data_dir);
  std::vector<InternalData> data;
  BoundaryValues<double> sqrtD_b;
  std::optional<DomainMask> mask;
  std::optional<Simulation> sim;
  std::optional<Phantom> ph;
  if (!data_dir.empty()) {
    const auto setup = io::read_manifest(in / "setup.txt");
    cfg.phantom.resolution = std::stoi(io::manifest_get(setup, "resolution"));
    cfg.phantom.mask = MaskSpec::parse(io::manifest_get(setup, "mask"));
    const GridSpec grid = GridSpec::unit_square(cfg.phantom.resolution);
    mask.emplace(cfg.phantom.mask.build(grid));
    data = load_internal_data(in, *mask);
    for (const cplx& v : io::read_pfgb_for(in / "sqrtD_boundary.pfgb", *mask)) sqrtD_b.push_back(v.real());
  } else {
    cfg.route = route;
    ph.emplace(make_phantom(cfg.phantom));
    const DomainMask m = cfg.phantom.mask.build(ph->grid);
    const double kmag = cfg.experiment.kmag > 0 ? cfg.experiment.kmag : default_kmag(m);
    sim.emplace(simulate(*ph, cfg.phantom.mask, route, kmag, cfg.experiment.kdir, cfg.experiment.pipeline.linear));
    data = sim->data;
    sqrtD_b = sim->sqrtD_boundary;
    mask.emplace(sim->mask);
  }
  const auto t0 = std::chrono::steady_clock::now();
  ReconResult r = route == Route::two_data ? run_two_data(data.at(0), sqrtD_b, *mask, cfg.experiment.pipeline)
                                           : run_multi_data(data, sqrtD_b, *mask, cfg.experiment.pipeline);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_recon(out, r);
  std::cout << to_string(route) << " reconstruction in " << secs << " s\n";
  for (const auto& w : r.diag.warnings) std::cout << "warning: " << w << "\n";

  // errors against the truth when it is available
  std::optional<ScalarField> D, sigma, mu, q;
  if (sim) {
    D = ph->D;
    sigma = ph->sigma_a;
    mu = sim->liouville.mu;
    q = sim->liouville.q;
  } else if (fs::exists(in / "truth" / "D.pfg")) {
    D = io::read_pfg_scalar(in / "truth" / "D.pfg");
    sigma = io::read_pfg_scalar(in / "truth" / "sigma_a.pfg");
    mu = io::read_pfg_scalar(in / "truth" / "mu.pfg");
    q = io::read_pfg_scalar(in / "truth" / "q.pfg");
  }
  if (D) {
    const auto& f = mask->interior_flags();
    std::ofstream os(out / "errors.csv", std::ios::binary);
    io::CsvWriter w(os);
    w.row({"quantity", "norm", "value", "config_hash", "seed"});
    const std::string h = hex(cfg.experiment.config_hash), s = std::to_string(cfg.experiment.seed);
    auto put = [&](const char* name, const ScalarField& a, const ScalarField& b) {
      const double e = rel_sup_error(a, b, f);
      w.row({name, "sup", io::format_double(e), h, s});
      std::cout << "  " << name << " relative sup error " << e << "\n";
    };
    put("mu", r.mu, *mu);
    put("q", r.q, *q);
    put("D", r.D, *D);
    put("sigma_a", r.sigma_a, *sigma);
  }
  return 0;
}

int cmd_sweep_stability(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  save_report(out, stability_sweep(cfg.phantom, cfg.route, cfg.noise_levels, cfg.noise_seeds, cfg.experiment));
  return 0;
}

int cmd_sweep_flatness(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  save_report(out, flatness_experiment(cfg.phantom, cfg.flatness_kmags, cfg.experiment));
  return 0;
}

int cmd_sweep_psi(const Globals& g) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  save_report(out, psi_decay_experiment(cfg.psi, cfg.psi_kmags, cfg.experiment));
  return 0;
}

// report: runs the round trip at the configured resolutions (unless
// --summaries-only) and collects every *_summary.txt in the output directory
int cmd_report(const Globals& g, bool summaries_only) {
  const RunConfig cfg = resolve(g);
  const fs::path out = ensure_out(g);
  if (!summaries_only) save_report(out, roundtrip_experiment(cfg.phantom, cfg.route, cfg.resolutions, cfg.experiment));
  std::size_t files = 0, failed = 0;
  std::ofstream os(out / "report.csv", std::ios::binary);
  io::CsvWriter w(os);
  w.row({"summary", "config_hash", "seed", "r0", "check", "result"});
  std::vector<fs::path> summaries;
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name.size() >= 12 && name.substr(name.size() - 12) == "_summary.txt") summaries.push_back(e.path());
  }
  std::sort(summaries.begin(), summaries.end());
  for (const auto& path : summaries) {
    const std::string name = path.filename().string();
    ++files;
    auto m = io::read_manifest(path);
    for (const auto& [k, v] : m) {
      if (k.rfind("check.", 0) != 0) continue;
      w.row({name, m["config_hash"], m["seed"], m["r0"], k.substr(6), v});
      if (v != "PASS") {
        ++failed;
        std::cout << "FAIL " << name << " " << k.substr(6) << "\n";
      }
    }
  }
  require(files > 0, ErrorKind::configuration, "report: no *_summary.txt files in " + out.string());
  std::cout << files << " summaries, " << failed << " failed check(s)\n";
  return failed ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qpat: reconstruction of diffusion and absorption from internal data"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key=value configuration file with [section] headers")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--resolution", g.resolution, "nodes per side");
  app.add_option("--kmag", g.kmag, "frequency magnitude |kappa| (default 8/diam)");
  app.add_option("--mask", g.mask, "rect or disk:<radius>");

  auto* phantom = app.add_subcommand("phantom", "write D, sigma_a, mu and q of the phantom");
  auto* forward = app.add_subcommand("forward", "CGO illuminations and diffusion solutions");
  auto* cgo = app.add_subcommand("cgo", "CGO solutions for the phantom's potential");
  double noise = 0.0, corr_cells = 4.0;
  auto* synth = app.add_subcommand("synthesize", "internal data set with optional noise");
  synth->add_option("--noise", noise, "C1 norm of the added noise");
  synth->add_option("--corr-cells", corr_cells, "noise correlation width in cells");
  std::string data_dir;
  auto* rtwo = app.add_subcommand("recon-two", "reconstruct from one conjugate-pair datum");
  rtwo->add_option("--data", data_dir, "directory written by synthesize (simulate in-process when absent)");
  auto* rmulti = app.add_subcommand("recon-multi", "reconstruct from the four-measurement route");
  rmulti->add_option("--data", data_dir, "directory written by synthesize (simulate in-process when absent)");
  auto* sstab = app.add_subcommand("sweep-stability", "noise sweep");
  auto* sflat = app.add_subcommand("sweep-flatness", "flatness gap versus |kappa|");
  auto* spsi = app.add_subcommand("sweep-psi", "CGO remainder decay versus |kappa|");
  bool summaries_only = false;
  auto* report = app.add_subcommand("report", "round trip plus a pass/fail table of every summary");
  report->add_flag("--summaries-only", summaries_only, "only collect existing summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*phantom) return cmd_phantom(g);
    if (*forward) return cmd_forward(g);
    if (*cgo) return cmd_cgo(g);
    if (*synth) return cmd_synthesize(g, noise, corr_cells);
    if (*rtwo) return cmd_recon(g, Route::two_data, data_dir);
    if (*rmulti) return cmd_recon(g, Route::multi_data, data_dir);
    if (*sstab) return cmd_sweep_stability(g);
    if (*sflat) return cmd_sweep_flatness(g);
    if (*spsi) return cmd_sweep_psi(g);
    if (*report) return cmd_report(g, summaries_only);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.is_configuration() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
