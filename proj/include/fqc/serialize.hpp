// JSON documents for the library's value types and CSV point sets. Parse
// failures raise ParseError naming the offending field path.
#pragma once

#include "fqc/coherence.hpp"
#include "fqc/decompose.hpp"
#include "fqc/detail/json_io.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/fourier_pair.hpp"
#include "fqc/lattice.hpp"
#include "fqc/measure.hpp"
#include "fqc/types.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fqc {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Field access
// ---------------------------------------------------------------------------

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

/// Numbers, plus null read as +infinity.
inline double number(const Json& j, const std::string& path) {
  if (j.is_null()) return kInf;
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline double number_field(const Json& j, const char* key, const std::string& path) {
  return number(field(j, key, path), path + "." + key);
}

inline int int_field(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number_integer()) throw ParseError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

inline Vec vec_value(const Json& j, int dim, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array");
  if (static_cast<int>(j.size()) != dim) {
    throw ParseError(path + ": expected " + std::to_string(dim) + " entries, found " +
                     std::to_string(j.size()));
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    v[i] = number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    if (!std::isfinite(v[i])) throw ParseError(path + "[" + std::to_string(i) + "]: not finite");
  }
  return v;
}

inline int dim_field(const Json& j, const std::string& path) {
  const int d = int_field(j, "dim", path);
  if (d < 1 || d > kMaxDim) throw ParseError(path + ".dim: outside [1, " + std::to_string(kMaxDim) + "]");
  return d;
}

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Runs `f` and rethrows library precondition failures as parse errors at `path`.
template <class F>
auto rethrow_as_parse(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ExpSum
// ---------------------------------------------------------------------------

inline Json to_json(const ExpSum& f) {
  Json terms = Json::array();
  for (const Term& t : f.terms()) {
    terms.push_back({{"re", t.coef.real()}, {"im", t.coef.imag()}, {"freq", detail::vec_json(t.freq)}});
  }
  return {{"dim", f.dim()}, {"merge_tol", f.merge_tol()}, {"tail_bound", f.tail_bound()}, {"terms", terms}};
}

inline ExpSum expsum_from_json(const Json& j, const std::string& path = "$") {
  const int d = detail::dim_field(j, path);
  const double merge_tol = j.contains("merge_tol") ? detail::number_field(j, "merge_tol", path)
                                                   : kDefaultMergeTol;
  const double tail = j.contains("tail_bound") ? detail::number_field(j, "tail_bound", path) : 0.0;
  const Json& terms = detail::field(j, "terms", path);
  if (!terms.is_array()) throw ParseError(path + ".terms: expected an array");
  std::vector<Term> out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string p = path + ".terms[" + std::to_string(i) + "]";
    const Complex c(detail::number_field(terms[i], "re", p), detail::number_field(terms[i], "im", p));
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw ParseError(p + ": coefficient not finite");
    out.push_back({c, detail::vec_value(detail::field(terms[i], "freq", p), d, p + ".freq")});
  }
  if (!(merge_tol >= 0.0) || !std::isfinite(merge_tol)) throw ParseError(path + ".merge_tol: invalid");
  if (!(tail >= 0.0) || !std::isfinite(tail)) throw ParseError(path + ".tail_bound: invalid");
  return detail::rethrow_as_parse(path, [&] { return ExpSum::from_terms(d, std::move(out), merge_tol, 0.0, tail); });
}

// ---------------------------------------------------------------------------
// AtomicMeasure
// ---------------------------------------------------------------------------

inline Json to_json(const AtomicMeasure& nu) {
  Json atoms = Json::array();
  for (const Atom& a : nu.atoms()) {
    atoms.push_back({{"point", detail::vec_json(a.point)}, {"re", a.mass.real()}, {"im", a.mass.imag()}});
  }
  Json j = {{"dim", nu.dim()}, {"window_radius", nu.window_radius()}, {"atoms", atoms}};
  if (nu.sep_radius()) j["sep_radius"] = *nu.sep_radius();
  return j;
}

inline AtomicMeasure measure_from_json(const Json& j, const std::string& path = "$") {
  const int d = detail::dim_field(j, path);
  const double window = detail::number_field(j, "window_radius", path);
  std::optional<double> sep;
  if (j.contains("sep_radius") && !j["sep_radius"].is_null()) sep = detail::number_field(j, "sep_radius", path);
  const Json& atoms = detail::field(j, "atoms", path);
  if (!atoms.is_array()) throw ParseError(path + ".atoms: expected an array");
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string p = path + ".atoms[" + std::to_string(i) + "]";
    const Complex c(detail::number_field(atoms[i], "re", p), detail::number_field(atoms[i], "im", p));
    out.push_back({detail::vec_value(detail::field(atoms[i], "point", p), d, p + ".point"), c});
  }
  return detail::rethrow_as_parse(path, [&] { return AtomicMeasure(d, std::move(out), window, sep); });
}

// ---------------------------------------------------------------------------
// Lattice and Coset
// ---------------------------------------------------------------------------

inline Json to_json(const Lattice& l) {
  Json basis = Json::array();
  for (int r = 0; r < l.dim(); ++r) {
    for (int c = 0; c < l.dim(); ++c) basis.push_back(l.basis()(r, c));
  }
  return {{"dim", l.dim()}, {"basis", basis}};
}

inline Lattice lattice_from_json(const Json& j, const std::string& path = "$") {
  const int d = detail::dim_field(j, path);
  const Json& b = detail::field(j, "basis", path);
  if (!b.is_array() || static_cast<int>(b.size()) != d * d) {
    throw ParseError(path + ".basis: expected " + std::to_string(d * d) + " entries (row-major)");
  }
  Mat a(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const std::size_t k = static_cast<std::size_t>(r * d + c);
      a(r, c) = detail::number(b[k], path + ".basis[" + std::to_string(k) + "]");
    }
  }
  return detail::rethrow_as_parse(path + ".basis", [&] { return Lattice(a); });
}

inline Json to_json(const Coset& c) {
  Json j = to_json(c.lattice());
  j["shift"] = detail::vec_json(c.shift());
  return j;
}

inline Coset coset_from_json(const Json& j, const std::string& path = "$") {
  const Lattice l = lattice_from_json(j, path);
  const Vec shift = j.contains("shift") ? detail::vec_value(j["shift"], l.dim(), path + ".shift") : zeros(l.dim());
  return Coset(l, shift);
}

// ---------------------------------------------------------------------------
// FourierPair
// ---------------------------------------------------------------------------

inline Json to_json(const FourierPair& p) {
  Json time;
  if (p.time_is_measure()) {
    time = to_json(p.time_measure());
    time["kind"] = "measure";
  } else {
    time = to_json(p.time_density());
    time["kind"] = "density";
  }
  Json prov = Json::array();
  for (const ProvenanceStep& s : p.provenance()) {
    Json params = Json::object();
    for (const auto& [k, v] : s.params) params[k] = v;
    prov.push_back({{"op", s.op}, {"params", params}, {"tail_charge", s.tail_charge}});
  }
  return {{"time_side", time}, {"freq_side", to_json(p.freq_side())}, {"provenance", prov}};
}

inline FourierPair pair_from_json(const Json& j, const std::string& path = "$") {
  const Json& time = detail::field(j, "time_side", path);
  const Json& kind = detail::field(time, "kind", path + ".time_side");
  if (!kind.is_string()) throw ParseError(path + ".time_side.kind: expected a string");
  FourierPair::TimeSide side;
  if (kind == "measure") {
    side = measure_from_json(time, path + ".time_side");
  } else if (kind == "density") {
    side = expsum_from_json(time, path + ".time_side");
  } else {
    throw ParseError(path + ".time_side.kind: expected \"measure\" or \"density\"");
  }
  AtomicMeasure freq = measure_from_json(detail::field(j, "freq_side", path), path + ".freq_side");
  std::vector<ProvenanceStep> prov;
  if (j.contains("provenance")) {
    const Json& pr = j["provenance"];
    if (!pr.is_array()) throw ParseError(path + ".provenance: expected an array");
    for (std::size_t i = 0; i < pr.size(); ++i) {
      const std::string p = path + ".provenance[" + std::to_string(i) + "]";
      const Json& op = detail::field(pr[i], "op", p);
      if (!op.is_string()) throw ParseError(p + ".op: expected a string");
      ProvenanceStep s{op.get<std::string>(), {}, detail::number_field(pr[i], "tail_charge", p)};
      if (pr[i].contains("params")) {
        const Json& params = pr[i]["params"];
        if (!params.is_object()) throw ParseError(p + ".params: expected an object");
        for (auto it = params.begin(); it != params.end(); ++it) {
          s.params[it.key()] = detail::number(it.value(), p + ".params." + it.key());
        }
      }
      prov.push_back(std::move(s));
    }
  }
  return detail::rethrow_as_parse(path, [&] { return FourierPair(std::move(side), std::move(freq), std::move(prov)); });
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline Json to_json(const Decomposition& dec) {
  Json cosets = Json::array();
  for (const Coset& c : dec.cosets) cosets.push_back(to_json(c));
  Json factors = Json::array();
  Json counts = Json::array();
  for (const ExpSum& f : dec.factors) {
    factors.push_back(to_json(f));
    counts.push_back(f.size());
  }
  Json parts = Json::array();
  for (const AtomicMeasure& nu : dec.spectral_parts) parts.push_back(to_json(nu));
  Json periods = Json::array();
  for (const Lattice& l : dec.period_lattices) periods.push_back(to_json(l));
  return {{"cosets", cosets},
          {"coset_sizes", dec.coset_sizes},
          {"factors", factors},
          {"factor_term_counts", counts},
          {"eta", dec.eta},
          {"residual", dec.residual},
          {"bump_tail", dec.bump_tail},
          {"spectral_parts", parts},
          {"period_lattices", periods},
          {"periodicity_residual", dec.periodicity_residual},
          {"reconstruction_applicable", dec.reconstruction_applicable},
          {"reconstruction_residual", dec.reconstruction_residual},
          {"spectral_window", dec.spectral_window}};
}

inline Json to_json(const CoherenceSample& s) {
  return {{"t", detail::vec_json(s.t)},
          {"total_mass", s.total_mass},
          {"tail_mass", s.tail_mass},
          {"interpolation_residual", s.interpolation_residual},
          {"truncation_charge", s.truncation_charge},
          {"C", s.C},
          {"r", s.r},
          {"ok", s.ok}};
}

/// Summary of a certificate: U, the parameters, the constants and the
/// per-translation checks. The sums g and h are reported by size.
inline Json to_json(const CoherenceCertificate& c) {
  Json u = Json::array();
  for (const Vec& x : c.U) u.push_back(detail::vec_json(x));
  Json samples = Json::array();
  for (const CoherenceSample& s : c.samples) samples.push_back(to_json(s));
  return {{"U", u},
          {"eps", c.eps},
          {"eta", c.eta},
          {"tol", c.tol},
          {"C", c.C},
          {"r", c.r},
          {"translation_bound", c.mass_report.translation_bound},
          {"weight_constant", c.mass_report.weight_constant},
          {"shift_charge", c.shift_charge},
          {"g_terms", c.g.size()},
          {"g_tail_bound", c.g.tail_bound()},
          {"h_terms", c.h.size()},
          {"h_w_norm", w_norm(c.h)},
          {"grid_n", c.grid_n},
          {"compose_residual", c.compose_residual},
          {"h_spectrum_window", c.h_spectrum.window_radius()},
          {"samples", samples},
          {"valid", c.valid()}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

/// One point per row, coordinates separated by commas. Blank lines and lines
/// starting with '#' are skipped; every row must have the same column count.
inline std::vector<Vec> read_points_csv(std::istream& in, const std::string& name = "csv") {
  std::vector<Vec> pts;
  std::string line;
  int cols = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      const std::string where = name + ":" + std::to_string(lineno) + ": column " + std::to_string(col);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError(where + ": not a number");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw ParseError(where + ": trailing characters");
      if (!std::isfinite(v)) throw ParseError(where + ": not finite");
      row.push_back(v);
    }
    const int n = static_cast<int>(row.size());
    if (n < 1 || n > kMaxDim) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected 1 to " + std::to_string(kMaxDim) +
                       " columns");
    }
    if (cols >= 0 && n != cols) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(n));
    }
    cols = n;
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = row[static_cast<std::size_t>(i)];
    pts.push_back(v);
  }
  return pts;
}

inline std::vector<Vec> read_points_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_points_csv(in, path);
}

inline std::string points_csv(const std::vector<Vec>& pts) {
  std::string out;
  char buf[40];
  for (const Vec& p : pts) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p[i]);
      if (i > 0) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace fqc
