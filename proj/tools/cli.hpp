// The fqc command line: option parsing, the subcommands and their output
// documents. run() is callable in-process so tests can drive it.
#pragma once

#include "fqc/fqc.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fqc::cli {

/// Every option of every subcommand; unused fields keep their defaults and
/// only the fields of the active subcommand are echoed.
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output = "-";
  std::uint64_t seed = 0;

  std::string lattice = "Z";
  std::string shift;
  std::string center;
  double sigma = 1.0;
  double radius = 8.0;
  double dual_radius = 0.0;
  double time_radius = 20.0;
  double freq_radius = 0.0;

  double eps = 0.5;
  double eta = 0.0;
  std::size_t grid_n = 0;
  double tol = 0.0;

  std::size_t max_cosets = 8;
  double window = 0.0;

  std::string preset;
  std::size_t trials = 100;
  std::size_t t_samples = 10;
  std::string trials_csv;

  std::string format = "svg";
  double plot_radius = 0.0;
};

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitError = 3;

namespace detail {

inline std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw ParseError(what + ": '" + cell + "' is not a number");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) {
      throw ParseError(what + ": '" + cell + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

inline Vec parse_vec(const std::string& s, int dim, const std::string& what) {
  if (s.empty()) return zeros(dim);
  const auto v = parse_numbers(s, what);
  if (static_cast<int>(v.size()) != dim) {
    throw ParseError(what + ": expected " + std::to_string(dim) + " comma-separated values");
  }
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

/// "Z", "Z2", "Z3" or a row-major list of d*d basis entries.
inline Lattice parse_lattice(const std::string& s) {
  if (s == "Z" || s == "Z1") return Lattice::integer(1);
  if (s == "Z2") return Lattice::integer(2);
  if (s == "Z3") return Lattice::integer(3);
  const auto v = parse_numbers(s, "--lattice");
  int d = 0;
  for (int k = 1; k <= kMaxDim; ++k) {
    if (static_cast<int>(v.size()) == k * k) d = k;
  }
  if (d == 0) throw ParseError("--lattice: expected Z, Z2, Z3 or 1, 4 or 9 row-major basis entries");
  Mat a(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) a(r, c) = v[static_cast<std::size_t>(r * d + c)];
  }
  try {
    return Lattice(a);
  } catch (const Error& e) {
    throw ParseError(std::string("--lattice: ") + e.what());
  }
}

inline Json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline Json config_json(const RunConfig& c) {
  Json j = {{"subcommand", c.subcommand}, {"seed", c.seed}, {"output", c.output}};
  if (c.subcommand == "poisson") {
    j.update({{"lattice", c.lattice}, {"sigma", c.sigma}, {"center", c.center}, {"radius", c.radius},
              {"dual_radius", c.dual_radius}, {"tol", c.tol}});
  } else if (c.subcommand == "comb") {
    j.update({{"lattice", c.lattice}, {"shift", c.shift}, {"time_radius", c.time_radius},
              {"freq_radius", c.freq_radius}});
  } else if (c.subcommand == "invert") {
    j.update({{"input", c.input}, {"eps", c.eps}, {"grid_n", c.grid_n}, {"tol", c.tol}});
  } else if (c.subcommand == "decompose") {
    j.update({{"input", c.input}, {"max_cosets", c.max_cosets}, {"tol", c.tol}, {"window", c.window},
              {"eta", c.eta}, {"freq_radius", c.freq_radius}});
  } else if (c.subcommand == "cohere") {
    j.update({{"input", c.input}, {"preset", c.preset}, {"eps", c.eps}, {"eta", c.eta}, {"tol", c.tol},
              {"time_radius", c.time_radius}, {"freq_radius", c.freq_radius}, {"trials", c.trials},
              {"t_samples", c.t_samples}, {"trials_csv", c.trials_csv}});
  } else if (c.subcommand == "plot") {
    j.update({{"input", c.input}, {"format", c.format}, {"radius", c.plot_radius}});
  }
  return j;
}

inline void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.output == "-") {
    out << text;
  } else {
    write_text_file(c.output, text);
  }
}

inline void emit_document(const RunConfig& c, const Json& result, std::ostream& out) {
  const Json doc = {{"config", config_json(c)}, {"result", result}};
  emit(c, fqc::detail::dump17(doc) + "\n", out);
}

inline bool looks_like_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  char ch = 0;
  while (in.get(ch)) {
    if (!std::isspace(static_cast<unsigned char>(ch))) return ch == '{';
  }
  return false;
}

/// A pair document, either bare or as the "pair" of a `comb` output.
inline FourierPair load_pair(const std::string& path) {
  const Json j = read_json_file(path);
  if (j.is_object() && j.contains("result") && j["result"].is_object() && j["result"].contains("pair")) {
    return pair_from_json(j["result"]["pair"], path + ": $.result.pair");
  }
  return pair_from_json(j, path + ": $");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_poisson(const RunConfig& c, std::ostream& out) {
  const Lattice l = parse_lattice(c.lattice);
  const Vec center = parse_vec(c.center, l.dim(), "--center");
  const double tol = c.tol > 0.0 ? c.tol : 1e-10;
  const TestFunction phi = TestFunction::gaussian(c.sigma, center);
  const PoissonResult r = poisson_check(phi, l, c.radius,
                                        c.dual_radius > 0.0 ? std::optional<double>(c.dual_radius) : std::nullopt);
  const bool ok = r.residual <= tol;
  emit_document(c,
                {{"lattice", to_json(l)},
                 {"lattice_sum", complex_json(r.lattice_sum)},
                 {"dual_sum", complex_json(r.dual_sum)},
                 {"residual", r.residual},
                 {"ok", ok}},
                out);
  return ok ? kExitOk : kExitCheckFailed;
}

inline int cmd_comb(const RunConfig& c, std::ostream& out) {
  const Lattice l = parse_lattice(c.lattice);
  const Coset coset(l, parse_vec(c.shift, l.dim(), "--shift"));
  const double rf = c.freq_radius > 0.0 ? c.freq_radius : c.time_radius;
  const FourierPair p = pair_from_comb(coset, c.time_radius, rf);
  emit_document(c, {{"coset", to_json(coset)}, {"pair", to_json(p)}}, out);
  return kExitOk;
}

inline int cmd_invert(const RunConfig& c, std::ostream& out) {
  const ExpSum f = expsum_from_json(read_json_file(c.input), c.input + ": $");
  ComposeOptions opt;
  opt.grid_n = c.grid_n;
  if (c.tol > 0.0) opt.tol = c.tol;
  const Composition r = eps_inverse(f, c.eps, opt);
  const double worst = std::max(r.residual, std::max(r.product_residual, r.zero_residual));
  const bool ok = worst <= opt.tol;
  emit_document(c,
                {{"g", to_json(r.g)},
                 {"residual", r.residual},
                 {"product_residual", r.product_residual},
                 {"zero_residual", r.zero_residual},
                 {"grid_n", r.grid_n},
                 {"tapered", r.tapered},
                 {"w_norm", w_norm(r.g)},
                 {"ok", ok}},
                out);
  return ok ? kExitOk : kExitCheckFailed;
}

inline int cmd_decompose(const RunConfig& c, std::ostream& out) {
  const double tol = c.tol > 0.0 ? c.tol : 1e-6;
  DetectOptions dopt;
  dopt.max_cosets = c.max_cosets;
  dopt.tol = tol;
  dopt.window_radius = c.window;
  FactorOptions fopt;
  fopt.eta = c.eta;
  fopt.membership_tol = tol;
  std::vector<Vec> points;
  std::optional<FourierPair> pair;
  if (looks_like_json(c.input)) {
    pair = load_pair(c.input);
    if (!pair->time_is_measure()) throw ParseError(c.input + ": $.time_side: decompose needs a measure");
    for (const Atom& a : pair->time_measure().atoms()) points.push_back(a.point);
    if (c.window <= 0.0) dopt.window_radius = pair->time_measure().window_radius();
  } else {
    points = read_points_csv_file(c.input);
  }
  const LatticeUnion found = detect_lattice_union(points, dopt);
  Json result = {{"points", points.size()}, {"found", found.found}};
  if (!found.found) {
    result["failure"] = found.failure;
    emit_document(c, result, out);
    return kExitCheckFailed;
  }
  Decomposition dec;
  if (pair) {
    dec = spectral_parts(*pair, factor_measure(*pair, found.cosets, fopt));
  } else {
    dec = decompose_points(points, found, c.freq_radius, fopt);
  }
  const bool ok = dec.residual <= tol && dec.periodicity_residual <= 1e-8 &&
                  (!dec.reconstruction_applicable || dec.reconstruction_residual <= tol);
  result["decomposition"] = to_json(dec);
  result["ok"] = ok;
  emit_document(c, result, out);
  return ok ? kExitOk : kExitCheckFailed;
}

/// Built-in measures for `cohere`: the comb of Z, and comb(Z) + 0.6 comb(Z + 1/2).
inline FourierPair cohere_preset(const std::string& name, double rt, double rf) {
  const Coset z(Lattice::integer(1));
  if (name == "comb") return pair_from_comb(z, rt, rf);
  if (name == "two-coset") {
    const FourierPair a = pair_from_comb(z, rt, rf);
    const FourierPair b = pair_from_comb(Coset(Lattice::integer(1), vec1(0.5)), rt, rf);
    std::vector<Atom> atoms = a.time_measure().atoms();
    for (const Atom& x : b.time_measure().atoms()) atoms.push_back({x.point, 0.6 * x.mass});
    return FourierPair(AtomicMeasure(1, std::move(atoms), rt),
                       add_measures(a.freq_side(), scale_masses(b.freq_side(), 0.6)),
                       {{"two_coset_preset", {{"time_radius", rt}, {"freq_radius", rf}}, 0.0}});
  }
  throw ParseError("--preset: expected comb or two-coset");
}

inline int cmd_cohere(const RunConfig& c, std::ostream& out) {
  if (c.input.empty() == c.preset.empty()) throw ParseError("cohere: give exactly one of --input or --preset");
  const double rt = c.time_radius;
  const double rf = c.freq_radius > 0.0 ? c.freq_radius : 2800.0;
  const FourierPair p = c.preset.empty() ? load_pair(c.input) : cohere_preset(c.preset, rt, rf);
  if (!p.time_is_measure()) throw ParseError(c.input + ": $.time_side: cohere needs a measure");
  const int d = p.dim();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec> ts{zeros(d)};
  for (std::size_t k = 1; k < c.t_samples; ++k) {
    Vec t(d);
    for (int i = 0; i < d; ++i) t[i] = 5.0 * unit(rng);
    ts.push_back(t);
  }
  CoherenceOptions opt;
  opt.eta = c.eta;
  if (c.tol > 0.0) opt.tol = c.tol;
  const CoherenceCertificate cert = build_certificate(p, c.eps, ts, opt);
  std::string csv = "trial,lhs,rhs,ok\n";
  std::size_t passed = 0;
  char line[128];
  for (std::size_t k = 0; k < c.trials; ++k) {
    std::vector<std::pair<Vec, Complex>> coeffs;
    for (const Vec& x : cert.U) {
      const double re = unit(rng);
      const double im = unit(rng);
      coeffs.push_back({x, Complex(re, im)});
    }
    const InequalityResult r = verify_inequality(cert, coeffs);
    passed += r.ok ? 1 : 0;
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%d\n", k, r.lhs, r.rhs, r.ok ? 1 : 0);
    csv += line;
  }
  if (!c.trials_csv.empty()) write_text_file(c.trials_csv, csv);
  const bool ok = cert.valid() && passed == c.trials;
  emit_document(c, {{"certificate", to_json(cert)}, {"trials", c.trials}, {"trials_passed", passed}, {"ok", ok}},
                out);
  return ok ? kExitOk : kExitCheckFailed;
}

/// Spot diagram of the frequency side: CSV rows (coordinates, re, im, |mass|)
/// or an SVG with one disc per atom, area proportional to |mass|.
inline int cmd_plot(const RunConfig& c, std::ostream& out) {
  const FourierPair p = load_pair(c.input);
  const AtomicMeasure nu = c.plot_radius > 0.0 ? restrict_to_ball(p.freq_side(), c.plot_radius) : p.freq_side();
  char buf[160];
  if (c.format == "csv") {
    std::string text;
    for (int i = 0; i < nu.dim(); ++i) text += "x" + std::to_string(i) + ",";
    text += "re,im,abs\n";
    for (const Atom& a : nu.atoms()) {
      for (int i = 0; i < nu.dim(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,", a.point[i]);
        text += buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", a.mass.real(), a.mass.imag(), std::abs(a.mass));
      text += buf;
    }
    emit(c, text, out);
    return kExitOk;
  }
  if (c.format != "svg") throw ParseError("--format: expected svg or csv");
  double extent = 1e-9;
  for (const Atom& a : nu.atoms()) {
    extent = std::max(extent, std::abs(a.point[0]));
    if (nu.dim() > 1) extent = std::max(extent, std::abs(a.point[1]));
  }
  const double size = 600.0;
  const double half = size / 2.0;
  const double scale = (half - 20.0) / extent;
  const double top = nu.max_mass() > 0.0 ? nu.max_mass() : 1.0;
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                size, size, size, size);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const Atom& a : nu.atoms()) {
    const double x = half + scale * a.point[0];
    const double y = nu.dim() > 1 ? half - scale * a.point[1] : half;
    const double r = 1.0 + 6.0 * std::sqrt(std::abs(a.mass) / top);
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"black\"/>\n", x, y, r);
    svg += buf;
  }
  svg += "</svg>\n";
  emit(c, svg, out);
  return kExitOk;
}

}  // namespace detail

inline int dispatch(const RunConfig& c, std::ostream& out) {
  if (c.subcommand == "poisson") return detail::cmd_poisson(c, out);
  if (c.subcommand == "comb") return detail::cmd_comb(c, out);
  if (c.subcommand == "invert") return detail::cmd_invert(c, out);
  if (c.subcommand == "decompose") return detail::cmd_decompose(c, out);
  if (c.subcommand == "cohere") return detail::cmd_cohere(c, out);
  if (c.subcommand == "plot") return detail::cmd_plot(c, out);
  throw ParseError("unknown subcommand '" + c.subcommand + "'");
}

/// Parses argv and runs the chosen subcommand. Exit status: 0 when every
/// requested check passes, 1 when a check fails, 2 for usage or input
/// errors, 3 for other library errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"Wiener algebra, lattice combs, eps-inverse, coset decomposition and coherence checks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", c.seed, "Seed of the random generator")->capture_default_str();
  app.add_option("-o,--output", c.output, "Output file, - for stdout")->capture_default_str();

  auto* poisson = app.add_subcommand("poisson", "Poisson summation check with a Gaussian");
  poisson->add_option("--lattice", c.lattice, "Z, Z2, Z3 or row-major basis entries")->capture_default_str();
  poisson->add_option("--sigma", c.sigma, "Gaussian width")->capture_default_str();
  poisson->add_option("--center", c.center, "Gaussian centre, comma separated");
  poisson->add_option("--radius", c.radius, "Truncation radius of the lattice sum")->capture_default_str();
  poisson->add_option("--dual-radius", c.dual_radius, "Truncation radius of the dual sum (default: --radius)");
  poisson->add_option("--tol", c.tol, "Residual tolerance (default 1e-10)");

  auto* comb = app.add_subcommand("comb", "Emit the Fourier pair of a lattice comb");
  comb->add_option("--lattice", c.lattice, "Z, Z2, Z3 or row-major basis entries")->capture_default_str();
  comb->add_option("--shift", c.shift, "Coset shift, comma separated");
  comb->add_option("--time-radius", c.time_radius, "Window of the comb")->capture_default_str();
  comb->add_option("--freq-radius", c.freq_radius, "Window of the transform (default: --time-radius)");

  auto* invert = app.add_subcommand("invert", "Eps-inverse of a serialized exponential sum");
  invert->add_option("--input", c.input, "ExpSum JSON file")->required();
  invert->add_option("--eps", c.eps, "Threshold eps")->capture_default_str();
  invert->add_option("--grid-n", c.grid_n, "Torus grid size per axis (0: automatic)");
  invert->add_option("--tol", c.tol, "Grid residual tolerance (default 1e-10)");

  auto* decompose = app.add_subcommand("decompose", "Lattice-union detection, factors and spectral parts");
  decompose->add_option("--input", c.input, "CSV point set or pair JSON file")->required();
  decompose->add_option("--max-cosets", c.max_cosets, "Largest number of cosets")->capture_default_str();
  decompose->add_option("--tol", c.tol, "Membership and factor tolerance (default 1e-6)");
  decompose->add_option("--window", c.window, "Window radius of the sample (0: automatic)");
  decompose->add_option("--eta", c.eta, "Bump radius (0: 0.4 times the separation)");
  decompose->add_option("--freq-radius", c.freq_radius, "Spectrum window for CSV input (0: automatic)");

  auto* cohere = app.add_subcommand("cohere", "Coherence certificate and inequality trials");
  cohere->add_option("--input", c.input, "Pair JSON file");
  cohere->add_option("--preset", c.preset, "comb or two-coset");
  cohere->add_option("--eps", c.eps, "Threshold eps")->capture_default_str();
  cohere->add_option("--eta", c.eta, "Bump radius (0: automatic)");
  cohere->add_option("--tol", c.tol, "Interpolation tolerance (default 1e-6)");
  cohere->add_option("--time-radius", c.time_radius, "Preset time window")->capture_default_str();
  cohere->add_option("--freq-radius", c.freq_radius, "Preset frequency window (default 2800)");
  cohere->add_option("--trials", c.trials, "Random coefficient vectors")->capture_default_str();
  cohere->add_option("--t-samples", c.t_samples, "Sampled translations")->capture_default_str();
  cohere->add_option("--trials-csv", c.trials_csv, "Write trial,lhs,rhs,ok rows here");

  auto* plot = app.add_subcommand("plot", "Spot diagram of the frequency side of a pair");
  plot->add_option("--input", c.input, "Pair JSON file")->required();
  plot->add_option("--format", c.format, "svg or csv")->capture_default_str();
  plot->add_option("--radius", c.plot_radius, "Only atoms within this radius (0: all)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  for (CLI::App* sub : app.get_subcommands()) c.subcommand = sub->get_name();
  if (c.subcommand == "cohere" && c.input.empty() && c.preset.empty()) c.preset = "comb";
  try {
    return dispatch(c, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace fqc::cli
