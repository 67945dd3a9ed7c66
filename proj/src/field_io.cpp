#include "qpat/field_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qpat::io {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

namespace {

void header(std::ostream& os, char kind, const GridSpec& g) {
  os << "pfg 1 " << kind << ' ' << g.nx << ' ' << g.ny << ' ' << format_double(g.x0) << ' '
     << format_double(g.y0) << ' ' << format_double(g.dx) << ' ' << format_double(g.dy) << '\n';
}

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p);
  require(bool(os), ErrorKind::io, "cannot write " + p.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p);
  require(bool(is), ErrorKind::io, "cannot read " + p.string());
  return is;
}

double read_number(std::istream& is, const char* what) {
  std::string tok;
  require(bool(is >> tok), ErrorKind::io, std::string("truncated file while reading ") + what);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  require(ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(v), ErrorKind::io,
          std::string("bad number '") + tok + "' in " + what);
  return v;
}

struct PfgHeader {
  char kind = 'r';
  GridSpec grid;
};

PfgHeader read_header(std::istream& is) {
  std::string magic;
  int version = 0;
  PfgHeader h;
  require(bool(is >> magic >> version >> h.kind >> h.grid.nx >> h.grid.ny), ErrorKind::io,
          "malformed pfg header");
  require(magic == "pfg" && version == 1, ErrorKind::io, "not a pfg v1 file");
  require(h.kind == 'r' || h.kind == 'c', ErrorKind::io, "pfg kind must be r or c");
  h.grid.x0 = read_number(is, "pfg header");
  h.grid.y0 = read_number(is, "pfg header");
  h.grid.dx = read_number(is, "pfg header");
  h.grid.dy = read_number(is, "pfg header");
  require(h.grid.nx > 0 && h.grid.ny > 0 && h.grid.dx > 0 && h.grid.dy > 0, ErrorKind::io,
          "pfg header describes an empty grid");
  return h;
}

}  // namespace

void write_pfg(std::ostream& os, const ScalarField& f) {
  header(os, 'r', f.grid);
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) os << (i ? " " : "") << format_double(f(i, j));
    os << '\n';
  }
}

void write_pfg(std::ostream& os, const ComplexField& f) {
  header(os, 'c', f.grid);
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i)
      os << (i ? "  " : "") << format_double(f(i, j).real()) << ' ' << format_double(f(i, j).imag());
    os << '\n';
  }
}

void write_pfg(const std::filesystem::path& p, const ScalarField& f) {
  auto os = open_out(p);
  write_pfg(os, f);
}
void write_pfg(const std::filesystem::path& p, const ComplexField& f) {
  auto os = open_out(p);
  write_pfg(os, f);
}

ScalarField read_pfg_scalar(std::istream& is) {
  const PfgHeader h = read_header(is);
  require(h.kind == 'r', ErrorKind::io, "expected a real pfg field");
  ScalarField f(h.grid);
  for (auto& v : f.values) v = read_number(is, "pfg values");
  return f;
}

ComplexField read_pfg_complex(std::istream& is) {
  const PfgHeader h = read_header(is);
  ComplexField f(h.grid);
  for (auto& v : f.values) {
    const double re = read_number(is, "pfg values");
    const double im = h.kind == 'c' ? read_number(is, "pfg values") : 0.0;
    v = {re, im};
  }
  return f;
}

ScalarField read_pfg_scalar(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_pfg_scalar(is);
}
ComplexField read_pfg_complex(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_pfg_complex(is);
}

void write_pfgb(std::ostream& os, const DomainMask& mask, const BoundaryValues<cplx>& values) {
  require(values.size() == mask.boundary_nodes().size(), ErrorKind::dimension,
          "trace length does not match the mask boundary");
  os << "pfgb 1 " << values.size() << '\n';
  const auto s = mask.boundary_arclength();
  for (std::size_t b = 0; b < values.size(); ++b)
    os << format_double(s[b]) << ' ' << format_double(values[b].real()) << ' '
       << format_double(values[b].imag()) << '\n';
}

void write_pfgb(const std::filesystem::path& p, const DomainMask& mask,
                const BoundaryValues<cplx>& values) {
  auto os = open_out(p);
  write_pfgb(os, mask, values);
}

std::vector<BoundarySample> read_pfgb(std::istream& is) {
  std::string magic;
  int version = 0;
  long long count = -1;
  require(bool(is >> magic >> version >> count), ErrorKind::io, "malformed pfgb header");
  require(magic == "pfgb" && version == 1 && count >= 0, ErrorKind::io, "not a pfgb v1 file");
  std::vector<BoundarySample> out(static_cast<std::size_t>(count));
  for (auto& b : out) {
    b.s = read_number(is, "pfgb");
    const double re = read_number(is, "pfgb");
    b.value = {re, read_number(is, "pfgb")};
  }
  return out;
}

std::vector<BoundarySample> read_pfgb(const std::filesystem::path& p) {
  auto is = open_in(p);
  return read_pfgb(is);
}

BoundaryValues<cplx> read_pfgb_for(const std::filesystem::path& p, const DomainMask& mask) {
  const auto samples = read_pfgb(p);
  const auto s = mask.boundary_arclength();
  require(samples.size() == s.size(), ErrorKind::dimension,
          p.string() + ": trace has " + std::to_string(samples.size()) + " nodes, mask has " +
              std::to_string(s.size()));
  BoundaryValues<cplx> out;
  out.reserve(samples.size());
  for (std::size_t b = 0; b < samples.size(); ++b) {
    require(std::abs(samples[b].s - s[b]) <= 1e-9 * (1.0 + mask.perimeter()), ErrorKind::dimension,
            p.string() + ": arclength parameters do not match the mask");
    out.push_back(samples[b].value);
  }
  return out;
}

void write_manifest(const std::filesystem::path& p, const Manifest& m) {
  auto os = open_out(p);
  for (const auto& [k, v] : m) os << k << " = " << v << '\n';
}

Manifest read_manifest(const std::filesystem::path& p) {
  auto is = open_in(p);
  Manifest m;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::io, p.string() + ": expected key = value, got '" + line + "'");
    m[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return m;
}

const std::string& manifest_get(const Manifest& m, const std::string& key) {
  const auto it = m.find(key);
  require(it != m.end(), ErrorKind::io, "manifest lacks key '" + key + "'");
  return it->second;
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c) os_ << ',';
    const std::string& s = cells[c];
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
      os_ << s;
    } else {
      os_ << '"';
      for (char ch : s) {
        if (ch == '"') os_ << '"';
        os_ << ch;
      }
      os_ << '"';
    }
  }
  os_ << "\r\n";
  return *this;
}

}  // namespace qpat::io
