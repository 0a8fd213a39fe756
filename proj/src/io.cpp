// SPDX-License-Identifier: Apache-2.0
#include "l2rom/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include <json.hpp>

namespace l2rom::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw FormatError("expected a number");
  return j.get<double>();
}

int integer(const json& j) {
  if (!j.is_number_integer()) throw FormatError("expected an integer");
  return j.get<int>();
}

// Non-finite values have no JSON literal; they are written as null.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_json(cplx z) { return json::array({number_json(z.real()), number_json(z.imag())}); }

cplx complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw FormatError("complex numbers are [re, im] pairs");
  return {number(j[0]), number(j[1])};
}

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if constexpr (std::is_same_v<typename Derived::Scalar, cplx>)
        row.push_back(complex_json(m(i, k)));
      else
        row.push_back(number_json(m(i, k)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrix_json(const SpMat& m) { return matrix_json(MatR(m)); }

// Row-major nested arrays; an empty outer array is a 0 x 0 matrix unless the
// shape is supplied through `cols_hint`.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from(const json& j,
                                                                  Eigen::Index cols_hint = 0) {
  if (!j.is_array()) throw FormatError("matrices are nested row arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? cols_hint : static_cast<Eigen::Index>(j[0].size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw FormatError("ragged matrix rows");
    for (Eigen::Index k = 0; k < cols; ++k) {
      if constexpr (std::is_same_v<Scalar, cplx>)
        m(i, k) = complex_from(row[static_cast<std::size_t>(k)]);
      else
        m(i, k) = number(row[static_cast<std::size_t>(k)]);
    }
  }
  return m;
}

MatR real_matrix(const json& j) { return matrix_from<double>(j); }
MatC complex_matrix(const json& j) { return matrix_from<cplx>(j); }
SpMat sparse_matrix(const json& j) { return real_matrix(j).sparseView(0.0, 0.0); }

json vector_json(const VecC& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

VecC complex_vector(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of complex numbers");
  VecC v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from(j[i]);
  return v;
}

json header(Kind k) { return json{{"kind", kind_name(k)}, {"version", kFormatVersion}}; }

void check_header(const json& j, Kind expected) {
  const Kind k = [&] {
    const json& kind = field(j, "kind");
    if (!kind.is_string()) throw FormatError("'kind' must be a string");
    const std::string s = kind.get<std::string>();
    for (Kind c : {Kind::model, Kind::samples, Kind::rom, Kind::certificate, Kind::trace})
      if (s == kind_name(c)) return c;
    throw FormatError("unknown kind '" + s + "'");
  }();
  const json& version = field(j, "version");
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
    throw FormatError("unsupported format version");
  if (k != expected)
    throw FormatError("expected a " + std::string(kind_name(expected)) + " file, found " +
                      std::string(kind_name(k)));
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json read_checked(const fs::path& path, Kind kind) {
  json j = read_json(path);
  check_header(j, kind);
  return j;
}

// Any json type error inside a reader is a malformed file.
template <typename F>
auto guarded(const fs::path& path, F body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump() + "\n"); }

json family_json(const ScalarFamily& f) {
  json terms = json::array();
  for (const auto& m : f.terms())
    terms.push_back({{"coeff", m.coeff}, {"exponents", {m.exponents[0], m.exponents[1]}}});
  return {{"arity", f.arity()}, {"terms", terms}};
}

ScalarFamily family_from(const json& j) {
  std::vector<Monomial> terms;
  for (const json& t : field(j, "terms")) {
    Monomial m;
    m.coeff = number(field(t, "coeff"));
    const json& e = field(t, "exponents");
    if (!e.is_array() || e.size() != 2) throw FormatError("monomial exponents are pairs");
    m.exponents = {integer(e[0]), integer(e[1])};
    terms.push_back(m);
  }
  return ScalarFamily(integer(field(j, "arity")), std::move(terms));
}

json terms_json(const std::vector<AffineTerm<MatR>>& terms) {
  json out = json::array();
  for (const auto& t : terms)
    out.push_back({{"family", family_json(t.family)}, {"matrix", matrix_json(t.matrix)}});
  return out;
}

std::vector<AffineTerm<MatR>> terms_from(const json& j, Eigen::Index cols) {
  if (!j.is_array()) throw FormatError("affine terms must be an array");
  std::vector<AffineTerm<MatR>> out;
  for (const json& t : j)
    out.push_back({family_from(field(t, "family")), matrix_from<double>(field(t, "matrix"), cols)});
  return out;
}

json rom_json(const StructuredRom& rom) {
  json j = header(Kind::rom);
  j["structure"] = structure_name(rom.structure);
  j["n_params"] = rom.n_params;
  j["order"] = rom.order;
  j["n_inputs"] = rom.n_inputs;
  j["n_outputs"] = rom.n_outputs;
  j["a_terms"] = terms_json(rom.a_terms);
  j["b_terms"] = terms_json(rom.b_terms);
  j["c_terms"] = terms_json(rom.c_terms);
  if (rom.kron) {
    j["kron"] = {{"E", matrix_json(rom.kron->E)},
                 {"A", matrix_json(rom.kron->A)},
                 {"Exi", matrix_json(rom.kron->Exi)},
                 {"Axi", matrix_json(rom.kron->Axi)}};
  }
  return j;
}

StructuredRom rom_from(const json& j) {
  StructuredRom rom;
  rom.structure = parse_structure(field(j, "structure").get<std::string>());
  rom.n_params = integer(field(j, "n_params"));
  rom.order = integer(field(j, "order"));
  rom.n_inputs = integer(field(j, "n_inputs"));
  rom.n_outputs = integer(field(j, "n_outputs"));
  rom.a_terms = terms_from(field(j, "a_terms"), rom.order);
  rom.b_terms = terms_from(field(j, "b_terms"), rom.n_inputs);
  rom.c_terms = terms_from(field(j, "c_terms"), rom.order);
  if (j.contains("kron")) {
    const json& k = j.at("kron");
    rom.kron = KronFactors{real_matrix(field(k, "E")), real_matrix(field(k, "A")),
                           real_matrix(field(k, "Exi")), real_matrix(field(k, "Axi"))};
  }
  try {
    rom.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("inconsistent rom: ") + e.what());
  }
  return rom;
}

json rows_json(const std::vector<CertificateRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"k", r.k},
                   {"l", r.l},
                   {"point", complex_json(r.point)},
                   {"point2", complex_json(r.point2)},
                   {"right", number_json(r.right)},
                   {"left", number_json(r.left)},
                   {"hermite", number_json(r.hermite)}});
  return out;
}

}  // namespace

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::model: return "model";
    case Kind::samples: return "samples";
    case Kind::rom: return "rom";
    case Kind::certificate: return "certificate";
    case Kind::trace: return "trace";
  }
  return "unknown";
}

std::string_view structure_name(RomStructure s) {
  switch (s) {
    case RomStructure::generic: return "generic";
    case RomStructure::lti: return "lti";
    case RomStructure::lti_dt: return "lti-dt";
    case RomStructure::kron: return "kron";
    case RomStructure::stationary: return "stationary";
  }
  return "unknown";
}

RomStructure parse_structure(std::string_view name) {
  for (RomStructure s : {RomStructure::generic, RomStructure::lti, RomStructure::lti_dt,
                         RomStructure::kron, RomStructure::stationary})
    if (name == structure_name(s)) return s;
  throw InvalidArgument("unknown rom structure '" + std::string(name) + "'");
}

void write_text_atomic(const fs::path& path, std::string_view contents) {
  const fs::path target = path.has_parent_path() ? path : fs::path(".") / path;
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename into " + target.string() + ": " + ec.message());
  }
}

Kind read_kind(const fs::path& path) {
  const json j = read_json(path);
  for (Kind k : {Kind::model, Kind::samples, Kind::rom, Kind::certificate, Kind::trace}) {
    if (j.is_object() && j.contains("kind") && j["kind"] == kind_name(k)) {
      check_header(j, k);
      return k;
    }
  }
  throw FormatError(path.string() + ": missing or unknown 'kind'");
}

void write_model(const fs::path& path, const Model& model) {
  json j = header(Kind::model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AffineLtiFom>) {
          j["model"] = "lti";
          j["time"] = m.time == TimeDomain::continuous ? "continuous" : "discrete";
          j["E"] = matrix_json(m.E);
          j["A"] = matrix_json(m.A);
          j["B"] = matrix_json(m.B);
          j["C"] = matrix_json(m.C);
        } else if constexpr (std::is_same_v<T, AffineStationaryFom>) {
          j["model"] = "stationary";
          j["interval"] = {m.a, m.b};
          j["A1"] = matrix_json(m.A1);
          j["A2"] = matrix_json(m.A2);
          j["B"] = matrix_json(m.B);
          j["C"] = matrix_json(m.C);
        } else {
          j["model"] = "kron-parametric";
          j["s_poles"] = vector_json(m.terms.s_poles);
          j["xi_poles"] = vector_json(m.terms.xi_poles);
          j["left"] = matrix_json(m.terms.left);
          j["right"] = matrix_json(m.terms.right);
        }
      },
      model);
  write_json(path, j);
}

Model read_model(const fs::path& path) {
  const json j = read_checked(path, Kind::model);
  return guarded(path, [&]() -> Model {
    const std::string name = field(j, "model").get<std::string>();
    if (name == "lti") {
      AffineLtiFom m;
      const std::string time = field(j, "time").get<std::string>();
      if (time != "continuous" && time != "discrete") throw FormatError("unknown time domain");
      m.time = time == "continuous" ? TimeDomain::continuous : TimeDomain::discrete;
      m.E = sparse_matrix(field(j, "E"));
      m.A = sparse_matrix(field(j, "A"));
      m.B = real_matrix(field(j, "B"));
      m.C = real_matrix(field(j, "C"));
      if (m.E.rows() != m.A.rows() || m.E.cols() != m.A.cols() || m.A.rows() != m.A.cols() ||
          m.B.rows() != m.A.rows() || m.C.cols() != m.A.cols())
        throw FormatError("inconsistent lti model shapes");
      return m;
    }
    if (name == "stationary") {
      AffineStationaryFom m;
      const json& iv = field(j, "interval");
      if (!iv.is_array() || iv.size() != 2) throw FormatError("interval must be [a, b]");
      m.a = number(iv[0]);
      m.b = number(iv[1]);
      m.A1 = sparse_matrix(field(j, "A1"));
      m.A2 = sparse_matrix(field(j, "A2"));
      m.B = real_matrix(field(j, "B"));
      m.C = real_matrix(field(j, "C"));
      if (m.A1.rows() != m.A1.cols() || m.A2.rows() != m.A1.rows() ||
          m.A2.cols() != m.A1.cols() || m.B.rows() != m.A1.rows() || m.C.cols() != m.A1.cols() ||
          !(m.a < m.b))
        throw FormatError("inconsistent stationary model");
      return m;
    }
    if (name == "kron-parametric") {
      KronParametricFom m;
      m.terms.s_poles = complex_vector(field(j, "s_poles"));
      m.terms.xi_poles = complex_vector(field(j, "xi_poles"));
      m.terms.left = complex_matrix(field(j, "left"));
      m.terms.right = complex_matrix(field(j, "right"));
      const Eigen::Index pairs = m.terms.s_poles.size() * m.terms.xi_poles.size();
      if (m.terms.left.cols() != pairs || m.terms.right.cols() != pairs)
        throw FormatError("residue factors do not match the pole counts");
      return m;
    }
    throw FormatError("unknown model '" + name + "'");
  });
}

void write_samples(const fs::path& path, const SampleSet& samples) {
  samples.validate();
  json j = header(Kind::samples);
  j["n_params"] = samples.n_params;
  json points = json::array(), values = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    json p = json::array();
    for (int d = 0; d < samples.points[i].dim(); ++d) p.push_back(complex_json(samples.points[i][d]));
    points.push_back(std::move(p));
    values.push_back(matrix_json(samples.values[i]));
  }
  j["points"] = std::move(points);
  j["values"] = std::move(values);
  j["weights"] = samples.weights;
  write_json(path, j);
}

SampleSet read_samples(const fs::path& path) {
  const json j = read_checked(path, Kind::samples);
  return guarded(path, [&] {
    SampleSet s;
    s.n_params = integer(field(j, "n_params"));
    for (const json& p : field(j, "points")) {
      if (!p.is_array()) throw FormatError("sample points are arrays of coordinates");
      if (p.size() == 1)
        s.points.emplace_back(complex_from(p[0]));
      else if (p.size() == 2)
        s.points.emplace_back(complex_from(p[0]), complex_from(p[1]));
      else
        throw FormatError("sample points have one or two coordinates");
    }
    for (const json& v : field(j, "values")) s.values.push_back(complex_matrix(v));
    for (const json& w : field(j, "weights")) s.weights.push_back(number(w));
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("inconsistent samples: ") + e.what());
    }
    return s;
  });
}

void write_rom(const fs::path& path, const StructuredRom& rom) {
  rom.validate();
  write_json(path, rom_json(rom));
}

StructuredRom read_rom(const fs::path& path) {
  const json j = read_checked(path, Kind::rom);
  return guarded(path, [&] { return rom_from(j); });
}

void write_certificate(const fs::path& path, const CertificateFile& file) {
  const Certificate& c = file.certificate;
  json j = header(Kind::certificate);
  j["family"] = family_name(c.family);
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["max_residual"] = number_json(c.max_residual());
  j["consistency"] = number_json(c.consistency);
  j["rows"] = rows_json(c.rows);
  j["inputs"] = {{"data", file.data_path}, {"rom", file.rom_path}};
  write_json(path, j);
}

CertificateFile read_certificate(const fs::path& path) {
  const json j = read_checked(path, Kind::certificate);
  return guarded(path, [&] {
    CertificateFile f;
    Certificate& c = f.certificate;
    c.family = parse_family(field(j, "family").get<std::string>());
    c.tolerance = number(field(j, "tolerance"));
    c.pass = field(j, "pass").get<bool>();
    c.consistency = number(field(j, "consistency"));
    for (const json& r : field(j, "rows")) {
      CertificateRow row;
      row.k = integer(field(r, "k"));
      row.l = integer(field(r, "l"));
      row.point = complex_from(field(r, "point"));
      row.point2 = complex_from(field(r, "point2"));
      row.right = number(field(r, "right"));
      row.left = number(field(r, "left"));
      row.hermite = number(field(r, "hermite"));
      c.rows.push_back(row);
    }
    if (j.contains("inputs")) {
      f.data_path = field(j["inputs"], "data").get<std::string>();
      f.rom_path = field(j["inputs"], "rom").get<std::string>();
    }
    return f;
  });
}

void write_trace(const fs::path& path, const FitTrace& trace) {
  json j = header(Kind::trace);
  j["converged"] = trace.converged;
  j["message"] = trace.message;
  json its = json::array();
  for (const auto& it : trace.iterations)
    its.push_back({{"objective", number_json(it.objective)},
                   {"grad_norm", number_json(it.grad_norm)},
                   {"step", number_json(it.step)}});
  j["iterations"] = std::move(its);
  j["rom"] = rom_json(trace.rom);
  write_json(path, j);
}

FitTrace read_trace(const fs::path& path) {
  const json j = read_checked(path, Kind::trace);
  return guarded(path, [&] {
    FitTrace t;
    t.converged = field(j, "converged").get<bool>();
    t.message = field(j, "message").get<std::string>();
    for (const json& it : field(j, "iterations"))
      t.iterations.push_back({number(field(it, "objective")), number(field(it, "grad_norm")),
                              number(field(it, "step"))});
    if (t.iterations.empty()) throw FormatError("a trace has at least the initial iterate");
    t.rom = rom_from(field(j, "rom"));
    return t;
  });
}

}  // namespace l2rom::io
