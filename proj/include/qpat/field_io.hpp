#pragma once

// Text formats exchanged between CLI stages:
//   PFG v1   `pfg 1 <r|c> nx ny x0 y0 dx dy` then nx*ny values, row-major,
//            complex values as "re im" pairs.
//   pfgb v1  `pfgb 1 <count>` then one `s re im` line per boundary node,
//            s being the arclength parameter of the node.
//   manifest `key = value` lines, '#' comments.
//   CSV      RFC-4180 quoting.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qpat/grid.hpp"

namespace qpat::io {

void write_pfg(std::ostream& os, const ScalarField& f);
void write_pfg(std::ostream& os, const ComplexField& f);
void write_pfg(const std::filesystem::path& p, const ScalarField& f);
void write_pfg(const std::filesystem::path& p, const ComplexField& f);

/// Reads either kind; a real file read as complex gets zero imaginary parts,
/// a complex file read as real is an io error.
ScalarField read_pfg_scalar(std::istream& is);
ComplexField read_pfg_complex(std::istream& is);
ScalarField read_pfg_scalar(const std::filesystem::path& p);
ComplexField read_pfg_complex(const std::filesystem::path& p);

struct BoundarySample {
  double s = 0.0;
  cplx value;
};

void write_pfgb(std::ostream& os, const DomainMask& mask, const BoundaryValues<cplx>& values);
void write_pfgb(const std::filesystem::path& p, const DomainMask& mask,
                const BoundaryValues<cplx>& values);
std::vector<BoundarySample> read_pfgb(std::istream& is);
std::vector<BoundarySample> read_pfgb(const std::filesystem::path& p);
/// Reads a trace and checks it lines up with the mask's boundary nodes.
BoundaryValues<cplx> read_pfgb_for(const std::filesystem::path& p, const DomainMask& mask);

using Manifest = std::map<std::string, std::string>;
void write_manifest(const std::filesystem::path& p, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& p);
const std::string& manifest_get(const Manifest& m, const std::string& key);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  CsvWriter& row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

std::string format_double(double v);

}  // namespace qpat::io
