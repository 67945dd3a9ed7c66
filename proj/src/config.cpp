#include "qpat/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qpat/field_io.hpp"

namespace qpat {

namespace pt = boost::property_tree;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

const char* method_name(LinearSolveConfig::Method m) {
  switch (m) {
    case LinearSolveConfig::Method::automatic: return "auto";
    case LinearSolveConfig::Method::direct_banded: return "direct";
    case LinearSolveConfig::Method::krylov_iterative: return "krylov";
  }
  return "auto";
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, int>)
      out += std::to_string(v[i]);
    else
      out += io::format_double(v[i]);
  }
  return out;
}

std::string bumps_text(const std::vector<Bump>& bs) {
  std::string out;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (i) out += ";";
    out += io::format_double(bs[i].center.x) + " " + io::format_double(bs[i].center.y) + " " +
           io::format_double(bs[i].width) + " " + io::format_double(bs[i].amplitude);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::configuration, key + ": not a number: '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::configuration, key + ": not an integer: '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::configuration, key + ": not a boolean: '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& p : split(v, ',')) out.push_back(to_double(key, p));
  return out;
}

std::vector<Bump> to_bumps(const std::string& key, const std::string& v) {
  std::vector<Bump> out;
  for (const auto& item : split(v, ';')) {
    std::istringstream is(item);
    std::vector<std::string> parts;
    std::string w;
    while (is >> w) parts.push_back(w);
    require(parts.size() == 4, ErrorKind::configuration, key + ": a bump is 'x y width amplitude', got '" + item + "'");
    out.push_back({{to_double(key, parts[0]), to_double(key, parts[1])}, to_double(key, parts[2]),
                   to_double(key, parts[3])});
  }
  return out;
}

using Setter = void (*)(RunConfig&, const std::string& key, const std::string& value);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"grid.resolution", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.phantom.resolution = static_cast<int>(to_int(k, v));
       }},
      {"grid.mask", [](RunConfig& c, const std::string&, const std::string& v) { c.phantom.mask = MaskSpec::parse(v); }},
      {"phantom.D_bg", [](RunConfig& c, const std::string& k, const std::string& v) { c.phantom.D_bg = to_double(k, v); }},
      {"phantom.sigma_bg", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.phantom.sigma_bg = to_double(k, v);
       }},
      {"phantom.D_bumps", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.phantom.D_bumps = to_bumps(k, v);
       }},
      {"phantom.sigma_bumps", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.phantom.sigma_bumps = to_bumps(k, v);
       }},
      {"phantom.d_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.phantom.d_min = to_double(k, v); }},
      {"phantom.d_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.phantom.d_max = to_double(k, v); }},
      {"phantom.s_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.phantom.s_min = to_double(k, v); }},
      {"phantom.s_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.phantom.s_max = to_double(k, v); }},
      {"cgo.kmag", [](RunConfig& c, const std::string& k, const std::string& v) { c.experiment.kmag = to_double(k, v); }},
      {"cgo.kdir_x", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.kdir.x = to_double(k, v);
       }},
      {"cgo.kdir_y", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.kdir.y = to_double(k, v);
       }},
      {"linear.method", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto& m = c.experiment.pipeline.linear.method;
         if (v == "auto")
           m = LinearSolveConfig::Method::automatic;
         else if (v == "direct")
           m = LinearSolveConfig::Method::direct_banded;
         else if (v == "krylov")
           m = LinearSolveConfig::Method::krylov_iterative;
         else
           fail(ErrorKind::configuration, k + ": expected auto, direct or krylov, got '" + v + "'");
       }},
      {"linear.rel_tol", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.linear.rel_tol = to_double(k, v);
       }},
      {"linear.max_iter", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.linear.max_iter = static_cast<int>(to_int(k, v));
       }},
      {"linear.direct_limit", [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long n = to_int(k, v);
         require(n >= 0, ErrorKind::configuration, k + " must be >= 0");
         c.experiment.pipeline.linear.direct_limit = static_cast<std::size_t>(n);
       }},
      {"transport.h_ode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "auto") c.experiment.pipeline.transport.h_ode = to_double(k, v);
       }},
      {"transport.t_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "auto") c.experiment.pipeline.transport.t_max = to_double(k, v);
       }},
      {"transport.beta_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "auto") c.experiment.pipeline.transport.beta_min = to_double(k, v);
       }},
      {"transport.trace_boundary", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.transport.trace_boundary = to_bool(k, v);
       }},
      {"pipeline.route", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "two")
           c.route = Route::two_data;
         else if (v == "multi")
           c.route = Route::multi_data;
         else
           fail(ErrorKind::configuration, k + ": expected two or multi, got '" + v + "'");
       }},
      {"pipeline.mu_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "poisson")
           c.experiment.pipeline.mu_mode = MuMode::poisson;
         else if (v == "path")
           c.experiment.pipeline.mu_mode = MuMode::path;
         else
           fail(ErrorKind::configuration, k + ": expected poisson or path, got '" + v + "'");
       }},
      {"pipeline.u_min_rel", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.u_min_rel = to_double(k, v);
       }},
      {"pipeline.cond_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.cond_max = to_double(k, v);
       }},
      {"pipeline.curl_warn", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.pipeline.curl_warn = to_double(k, v);
       }},
      {"experiment.seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         require(s >= 0, ErrorKind::configuration, k + " must be >= 0");
         c.experiment.seed = static_cast<std::uint64_t>(s);
       }},
      {"experiment.resolutions", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.resolutions.clear();
         for (double d : to_doubles(k, v)) {
           require(d == std::floor(d), ErrorKind::configuration, k + ": resolutions are integers");
           c.resolutions.push_back(static_cast<int>(d));
         }
       }},
      {"experiment.noise_levels", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.noise_levels = to_doubles(k, v);
       }},
      {"experiment.noise_seeds", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.noise_seeds = static_cast<int>(to_int(k, v));
       }},
      {"experiment.corr_width_cells", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.experiment.corr_width_cells = to_double(k, v);
       }},
      {"experiment.flatness_kmags", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.flatness_kmags = to_doubles(k, v);
       }},
      {"experiment.psi_kmags", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.psi_kmags = to_doubles(k, v);
       }},
      {"psi.amplitude", [](RunConfig& c, const std::string& k, const std::string& v) { c.psi.amplitude = to_double(k, v); }},
      {"psi.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.psi.width = to_double(k, v); }},
      {"psi.center_x", [](RunConfig& c, const std::string& k, const std::string& v) { c.psi.center.x = to_double(k, v); }},
      {"psi.center_y", [](RunConfig& c, const std::string& k, const std::string& v) { c.psi.center.y = to_double(k, v); }},
  };
  return m;
}

void validate(const RunConfig& c) {
  c.phantom.validate();
  c.experiment.pipeline.linear.validate();
  require(c.experiment.kmag >= 0.0, ErrorKind::configuration, "cgo.kmag must be >= 0 (0 selects 8/diam)");
  require(norm(c.experiment.kdir) > 0.0, ErrorKind::configuration, "cgo.kdir must be nonzero");
  require(!c.resolutions.empty(), ErrorKind::configuration, "experiment.resolutions is empty");
  for (int n : c.resolutions) require(n >= 9 && n <= 1025, ErrorKind::configuration, "resolutions must be in [9, 1025]");
  for (double l : c.noise_levels) require(l >= 0.0, ErrorKind::configuration, "noise levels must be >= 0");
  require(c.noise_seeds >= 1, ErrorKind::configuration, "experiment.noise_seeds must be >= 1");
  require(c.experiment.corr_width_cells > 0.0, ErrorKind::configuration, "corr_width_cells must be > 0");
  for (double k : c.flatness_kmags) require(k > 0.0, ErrorKind::configuration, "flatness kmags must be > 0");
  for (double k : c.psi_kmags) require(k > 0.0, ErrorKind::configuration, "psi kmags must be > 0");
  require(c.psi.width > 0.0, ErrorKind::configuration, "psi.width must be > 0");
  require(c.experiment.pipeline.u_min_rel >= 0.0 && c.experiment.pipeline.cond_max > 1.0, ErrorKind::configuration,
          "pipeline.u_min_rel must be >= 0 and cond_max > 1");
}

}  // namespace

std::string RunConfig::canonical() const {
  const auto& p = experiment.pipeline;
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("auto"); };
  std::ostringstream os;
  os << "[grid]\nresolution=" << phantom.resolution << "\nmask=" << phantom.mask.label() << "\n";
  os << "[phantom]\nD_bg=" << io::format_double(phantom.D_bg) << "\nsigma_bg=" << io::format_double(phantom.sigma_bg)
     << "\nD_bumps=" << bumps_text(phantom.D_bumps) << "\nsigma_bumps=" << bumps_text(phantom.sigma_bumps)
     << "\nd_min=" << io::format_double(phantom.d_min) << "\nd_max=" << io::format_double(phantom.d_max)
     << "\ns_min=" << io::format_double(phantom.s_min) << "\ns_max=" << io::format_double(phantom.s_max) << "\n";
  os << "[cgo]\nkmag=" << io::format_double(experiment.kmag) << "\nkdir_x=" << io::format_double(experiment.kdir.x)
     << "\nkdir_y=" << io::format_double(experiment.kdir.y) << "\n";
  os << "[linear]\nmethod=" << method_name(p.linear.method) << "\nrel_tol=" << io::format_double(p.linear.rel_tol)
     << "\nmax_iter=" << p.linear.max_iter << "\ndirect_limit=" << p.linear.direct_limit << "\n";
  os << "[transport]\nh_ode=" << opt(p.transport.h_ode) << "\nt_max=" << opt(p.transport.t_max)
     << "\nbeta_min=" << opt(p.transport.beta_min) << "\ntrace_boundary=" << (p.transport.trace_boundary ? "true" : "false")
     << "\n";
  os << "[pipeline]\nroute=" << (route == Route::two_data ? "two" : "multi") << "\nmu_mode=" << to_string(p.mu_mode)
     << "\nu_min_rel=" << io::format_double(p.u_min_rel) << "\ncond_max=" << io::format_double(p.cond_max)
     << "\ncurl_warn=" << io::format_double(p.curl_warn) << "\n";
  os << "[experiment]\nseed=" << experiment.seed << "\nresolutions=" << join(resolutions)
     << "\nnoise_levels=" << join(noise_levels) << "\nnoise_seeds=" << noise_seeds
     << "\ncorr_width_cells=" << io::format_double(experiment.corr_width_cells)
     << "\nflatness_kmags=" << join(flatness_kmags) << "\npsi_kmags=" << join(psi_kmags) << "\n";
  os << "[psi]\namplitude=" << io::format_double(psi.amplitude) << "\nwidth=" << io::format_double(psi.width)
     << "\ncenter_x=" << io::format_double(psi.center.x) << "\ncenter_y=" << io::format_double(psi.center.y) << "\n";
  return os.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

void finalize(RunConfig& cfg) {
  validate(cfg);
  cfg.psi.resolution = cfg.phantom.resolution;
  cfg.psi.mask = cfg.phantom.mask;
  cfg.experiment.config_hash = cfg.hash();
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::configuration, std::string("config: ") + e.what());
  }
  RunConfig cfg;
  const auto& set = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      fail(ErrorKind::configuration, "config: key '" + section + "' outside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = set.find(full);
      if (it == set.end()) fail(ErrorKind::configuration, "config: unknown key '" + full + "'");
      it->second(cfg, full, trim(value.data()));
    }
  }
  finalize(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qpat
