#pragma once

// JSON file formats for states, canonical forms, certificates and fixture
// specs. Complex entries are [re, im] pairs; matrices are row-major arrays of
// rows. Non-finite reals are written as null (NaN) or "inf"/"-inf".

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pptcanon/canonical.hpp"
#include "pptcanon/errors.hpp"
#include "pptcanon/multilinear.hpp"
#include "pptcanon/numerics.hpp"
#include "pptcanon/oracle.hpp"
#include "pptcanon/separability.hpp"

namespace pptcanon::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline json real_to_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double real_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("expected a number, got string '" + s + "'");
  }
  if (!j.is_number()) throw FormatError("expected a number");
  return j.get<double>();
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError("complex entry must be a [re, im] pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json vector_to_json(const ComplexVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline ComplexVector vector_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("vector must be an array of [re, im] pairs");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError("matrix row " + std::to_string(r) + " has inconsistent length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline std::vector<std::size_t> dims_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("dims must be an array of positive integers");
  std::vector<std::size_t> dims;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<long long>() < 1) throw FormatError("dims must be an array of positive integers");
    dims.push_back(d.get<std::size_t>());
  }
  return dims;
}

inline void check_version(const json& j) {
  if (!j.is_object()) throw FormatError("top level must be a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw FormatError("missing format_version");
  }
  if (j["format_version"].get<int>() != kFormatVersion) {
    throw FormatError("unsupported format_version " + std::to_string(j["format_version"].get<int>()));
  }
}

inline const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j[key];
}

// ---- text files ----------------------------------------------------------

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temp file and rename over the target.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

inline json parse(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin + ": parse error: " + e.what());
  }
}

// ---- state files ---------------------------------------------------------

struct StateFile {
  std::vector<std::size_t> dims;  // front dims then tail dim
  ComplexMatrix matrix;
  json metadata = json::object();
};

inline json state_to_json(const StateFile& s) {
  return json{{"format_version", kFormatVersion},
              {"dims", s.dims},
              {"matrix", matrix_to_json(s.matrix)},
              {"metadata", s.metadata}};
}

inline StateFile state_from_json(const json& j) {
  check_version(j);
  StateFile s;
  s.dims = dims_from_json(field(j, "dims"));
  s.matrix = matrix_from_json(field(j, "matrix"));
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw FormatError("metadata must be an object");
    s.metadata = j["metadata"];
  }
  return s;
}

inline StateFile read_state_file(const std::filesystem::path& path) {
  return state_from_json(parse(read_text(path), path.string()));
}

inline void write_state_file(const std::filesystem::path& path, const StateFile& s) {
  write_text_atomic(path, dump(state_to_json(s)));
}

inline StateFile to_state_file(const DensityMatrix& rho, json metadata = json::object()) {
  return {rho.shape.all_dims(), rho.matrix, std::move(metadata)};
}

// Checks a raw matrix against the density-matrix invariants; throws
// FormatError naming the first violation.
inline DensityMatrix validate_density(const std::vector<std::size_t>& dims, const ComplexMatrix& m,
                                      const Tolerances& tol = {}) {
  std::optional<SystemShape> shape;
  try {
    shape = SystemShape::from_dims(dims);
  } catch (const DimensionError& e) {
    throw FormatError(std::string("invalid dims: ") + e.what());
  }
  const auto side = static_cast<Eigen::Index>(shape->total_size());
  if (m.rows() != side || m.cols() != side) {
    throw FormatError("dimension mismatch: dims " + shape->to_string() + " need a " + std::to_string(side) + "x" +
                      std::to_string(side) + " matrix, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  }
  if (!all_finite(m)) throw FormatError("matrix has non-finite entries");

  double worst = 0.0;
  Eigen::Index wr = 0, wc = 0;
  for (Eigen::Index r = 0; r < side; ++r) {
    for (Eigen::Index c = r; c < side; ++c) {
      const double asym = std::abs(m(r, c) - std::conj(m(c, r)));
      if (asym > worst) {
        worst = asym;
        wr = r;
        wc = c;
      }
    }
  }
  const double scale = std::max(m.norm(), 1e-300);
  if (worst > tol.psd_tol * scale) {
    throw FormatError("Hermiticity violation: |rho(" + std::to_string(wr) + "," + std::to_string(wc) + ") - conj(rho(" +
                      std::to_string(wc) + "," + std::to_string(wr) + "))| = " + std::to_string(worst));
  }
  const auto psd = is_psd(m, tol.psd_tol);
  if (!psd.psd) {
    throw FormatError("PSD violation: minimum eigenvalue " + std::to_string(psd.min_eigenvalue));
  }
  return DensityMatrix(*shape, m);
}

inline DensityMatrix load_state(const std::filesystem::path& path, const Tolerances& tol = {}) {
  const auto s = read_state_file(path);
  return validate_density(s.dims, s.matrix, tol);
}

inline void save_state(const std::filesystem::path& path, const DensityMatrix& rho, json metadata = json::object()) {
  write_state_file(path, to_state_file(rho, std::move(metadata)));
}

// ---- canonical forms -----------------------------------------------------

inline json canonical_to_json(const CanonicalForm& cf) {
  json d = json::array();
  for (const auto& row : cf.d) {
    json levels = json::array();
    for (const auto& m : row) levels.push_back(matrix_to_json(m));
    d.push_back(std::move(levels));
  }
  return json{{"format_version", kFormatVersion}, {"dims", cf.shape.all_dims()}, {"D", d}, {"F", matrix_to_json(cf.f)}};
}

inline CanonicalForm canonical_from_json(const json& j) {
  check_version(j);
  const auto shape = SystemShape::from_dims(dims_from_json(field(j, "dims")));
  const auto& d = field(j, "D");
  if (!d.is_array()) throw FormatError("D must be an array per subsystem");
  std::vector<std::vector<ComplexMatrix>> levels;
  for (const auto& row : d) {
    if (!row.is_array()) throw FormatError("D entry must be an array of matrices");
    std::vector<ComplexMatrix> ms;
    for (const auto& m : row) ms.push_back(matrix_from_json(m));
    levels.push_back(std::move(ms));
  }
  try {
    return CanonicalForm(shape, std::move(levels), matrix_from_json(field(j, "F")));
  } catch (const DimensionError& e) {
    throw FormatError(e.what());
  }
}

inline void save_canonical(const std::filesystem::path& path, const CanonicalForm& cf) {
  write_text_atomic(path, dump(canonical_to_json(cf)));
}

inline CanonicalForm load_canonical(const std::filesystem::path& path) {
  return canonical_from_json(parse(read_text(path), path.string()));
}

// ---- tolerances, reports, certificates ------------------------------------

inline json tolerances_to_json(const Tolerances& t) {
  return json{{"psd_tol", t.psd_tol},         {"rank_rel_tol", t.rank_rel_tol}, {"residual_tol", t.residual_tol},
              {"cond_max", t.cond_max},       {"simdiag_tol", t.simdiag_tol},   {"simdiag_retries", t.simdiag_retries}};
}

inline Tolerances tolerances_from_json(const json& j) {
  Tolerances t;
  t.psd_tol = real_from_json(field(j, "psd_tol"));
  t.rank_rel_tol = real_from_json(field(j, "rank_rel_tol"));
  t.residual_tol = real_from_json(field(j, "residual_tol"));
  t.cond_max = real_from_json(field(j, "cond_max"));
  t.simdiag_tol = real_from_json(field(j, "simdiag_tol"));
  t.simdiag_retries = field(j, "simdiag_retries").get<int>();
  return t;
}

inline json validation_to_json(const ValidationReport& r) {
  return json{{"block_residual", real_to_json(r.block_residual)},
              {"worst_row", r.worst_row},
              {"worst_col", r.worst_col},
              {"commutation_residual", real_to_json(r.commutation_residual)},
              {"min_joint_gap", real_to_json(r.min_joint_gap)}};
}

inline ValidationReport validation_from_json(const json& j) {
  ValidationReport r;
  r.block_residual = real_from_json(field(j, "block_residual"));
  r.worst_row = field(j, "worst_row").get<FrontMultiIndex>();
  r.worst_col = field(j, "worst_col").get<FrontMultiIndex>();
  r.commutation_residual = real_from_json(field(j, "commutation_residual"));
  r.min_joint_gap = real_from_json(field(j, "min_joint_gap"));
  return r;
}

inline json ensemble_to_json(const ProductEnsemble& e) {
  json terms = json::array();
  for (const auto& t : e.terms) {
    json locals = json::array();
    for (const auto& v : t.locals) locals.push_back(vector_to_json(v));
    terms.push_back(json{{"weight", real_to_json(t.weight)}, {"locals", locals}, {"tail", vector_to_json(t.tail)}});
  }
  return terms;
}

inline ProductEnsemble ensemble_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("ensemble must be an array of terms");
  ProductEnsemble e;
  for (const auto& t : j) {
    ProductTerm term;
    term.weight = real_from_json(field(t, "weight"));
    const auto& locals = field(t, "locals");
    if (!locals.is_array()) throw FormatError("locals must be an array of vectors");
    for (const auto& v : locals) term.locals.push_back(vector_from_json(v));
    term.tail = vector_from_json(field(t, "tail"));
    e.terms.push_back(std::move(term));
  }
  return e;
}

struct CertificateFile {
  std::vector<std::size_t> dims;
  AnalysisVerdict verdict;
};

inline json certificate_to_json(const CertificateFile& file) {
  json j{{"format_version", kFormatVersion}, {"dims", file.dims}, {"verdict", verdict_tag(file.verdict)}};
  if (const auto* s = std::get_if<Separable>(&file.verdict)) {
    const auto& c = s->certificate;
    json basis = json::array();
    for (const auto& v : c.basis_used) basis.push_back(vector_to_json(v));
    j["ensemble"] = ensemble_to_json(c.ensemble);
    j["reconstruction_residual"] = real_to_json(c.reconstruction_residual);
    j["weight_sum"] = real_to_json(c.weight_sum);
    j["trace"] = real_to_json(c.trace);
    j["basis_used"] = basis;
    j["basis_computational"] = c.basis_computational;
    j["basis_candidates_tried"] = c.basis_candidates_tried;
    j["tail_compressed"] = c.tail_compressed;
    j["diagnostics"] = validation_to_json(c.diagnostics);
    j["tolerances"] = tolerances_to_json(c.tolerances);
  } else if (const auto* p = std::get_if<NotPpt>(&file.verdict)) {
    j["subsystems"] = p->subsystems;
    j["witness_eigenvalue"] = real_to_json(p->witness_eigenvalue);
    j["witness_vector"] = vector_to_json(p->witness_vector);
  } else if (const auto* r = std::get_if<RankConditionUnmet>(&file.verdict)) {
    j["rank"] = r->rank;
    j["tail_dim"] = r->tail_dim;
    j["attempts"] = r->attempts;
    j["reason"] = r->reason;
  } else if (const auto* q = std::get_if<Inconclusive>(&file.verdict)) {
    j["reason"] = q->reason;
    j["attempts"] = q->attempts;
    j["best_residual"] = real_to_json(q->best_residual);
    j["diagnostics"] = q->diagnostics ? validation_to_json(*q->diagnostics) : json(nullptr);
  }
  return j;
}

inline CertificateFile certificate_from_json(const json& j) {
  check_version(j);
  CertificateFile file{dims_from_json(field(j, "dims")), Inconclusive{}};
  const auto tag = field(j, "verdict").get<std::string>();
  try {
    if (tag == "SEPARABLE") {
      SeparabilityCertificate c;
      c.ensemble = ensemble_from_json(field(j, "ensemble"));
      c.reconstruction_residual = real_from_json(field(j, "reconstruction_residual"));
      c.weight_sum = real_from_json(field(j, "weight_sum"));
      c.trace = real_from_json(field(j, "trace"));
      for (const auto& v : field(j, "basis_used")) c.basis_used.push_back(vector_from_json(v));
      c.basis_computational = field(j, "basis_computational").get<bool>();
      c.basis_candidates_tried = field(j, "basis_candidates_tried").get<std::size_t>();
      c.tail_compressed = field(j, "tail_compressed").get<bool>();
      c.diagnostics = validation_from_json(field(j, "diagnostics"));
      c.tolerances = tolerances_from_json(field(j, "tolerances"));
      file.verdict = Separable{std::move(c)};
    } else if (tag == "NOT_PPT") {
      NotPpt p;
      p.subsystems = field(j, "subsystems").get<std::vector<std::size_t>>();
      p.witness_eigenvalue = real_from_json(field(j, "witness_eigenvalue"));
      p.witness_vector = vector_from_json(field(j, "witness_vector"));
      file.verdict = std::move(p);
    } else if (tag == "RANK_CONDITION_UNMET") {
      file.verdict = RankConditionUnmet{field(j, "rank").get<std::size_t>(), field(j, "tail_dim").get<std::size_t>(),
                                        field(j, "attempts").get<std::size_t>(), field(j, "reason").get<std::string>()};
    } else if (tag == "INCONCLUSIVE") {
      Inconclusive q;
      q.reason = field(j, "reason").get<std::string>();
      q.attempts = field(j, "attempts").get<std::size_t>();
      q.best_residual = real_from_json(field(j, "best_residual"));
      if (!field(j, "diagnostics").is_null()) q.diagnostics = validation_from_json(j["diagnostics"]);
      file.verdict = std::move(q);
    } else {
      throw FormatError("unknown verdict '" + tag + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed certificate: ") + e.what());
  }
  return file;
}

inline void save_certificate(const std::filesystem::path& path, const CertificateFile& file) {
  write_text_atomic(path, dump(certificate_to_json(file)));
}

inline CertificateFile load_certificate(const std::filesystem::path& path) {
  return certificate_from_json(parse(read_text(path), path.string()));
}

// ---- fixture specs -------------------------------------------------------

inline oracle::FixtureKind fixture_kind_from_string(const std::string& s) {
  if (s == "random_separable") return oracle::FixtureKind::random_separable;
  if (s == "random_density") return oracle::FixtureKind::random_density;
  if (s == "bell_mixture") return oracle::FixtureKind::bell_mixture;
  if (s == "canonical_sample") return oracle::FixtureKind::canonical_sample;
  throw FormatError("unknown fixture kind '" + s + "'");
}

inline oracle::FixtureSpec fixture_from_json(const json& j) {
  oracle::FixtureSpec spec;
  try {
    spec.shape = SystemShape::from_dims(dims_from_json(field(j, "dims")));
    spec.kind = fixture_kind_from_string(field(j, "kind").get<std::string>());
    spec.num_terms = j.value("num_terms", spec.num_terms);
    spec.rank = j.value("rank", spec.rank);
    spec.mixing = j.value("mixing", spec.mixing);
    spec.seed = j.value("seed", spec.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed fixture spec: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("malformed fixture spec: ") + e.what());
  }
  return spec;
}

}  // namespace pptcanon::io
