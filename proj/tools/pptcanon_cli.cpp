// pptcanon: generate, check, decompose, verify and inspect multipartite states
// of shape K_1 x ... x K_m x N.
//
// Exit codes
//   generate, inspect   0 ok, 1 error
//   check               0 PPT, 2 not PPT, 1 error
//   decompose           0 SEPARABLE, 3 NOT_PPT, 4 RANK_CONDITION_UNMET, 5 INCONCLUSIVE, 1 error
//   verify              0 pass, 2 fail, 1 error

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pptcanon/pptcanon.hpp"

namespace {

using namespace pptcanon;

constexpr int kError = 1;

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw FormatError("--dims: '" + item + "' is not a positive integer");
    }
  }
  return dims;
}

void add_tolerance_flags(CLI::App* cmd, Tolerances& tol) {
  cmd->add_option("--tol-psd", tol.psd_tol, "relative PSD tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--tol-rank", tol.rank_rel_tol, "relative singular-value cut for ranks")->check(CLI::PositiveNumber);
  cmd->add_option("--tol-residual", tol.residual_tol, "relative Frobenius reconstruction tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol-simdiag", tol.simdiag_tol, "joint diagonalization tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--cond-max", tol.cond_max, "condition-number limit")->check(CLI::PositiveNumber);
  cmd->add_option("--simdiag-retries", tol.simdiag_retries, "joint diagonalization attempts")
      ->check(CLI::PositiveNumber);
}

std::string join(const std::vector<std::size_t>& xs, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + std::to_string(xs[i]);
  return out;
}

int run_generate(const std::string& dims_text, std::uint64_t seed, double cond, const std::string& out,
                 const std::string& canonical_out) {
  const auto shape = SystemShape::from_dims(parse_dims(dims_text));
  Rng rng(seed);
  SampleOptions options;
  options.f_condition = cond;
  auto cf = sample_canonical(shape, rng, options);
  auto [rho, scale] = assemble_rho_normalized(cf);
  io::json meta{{"generator", "pptcanon generate"},
                {"seed", std::to_string(seed)},
                {"f_condition", io::json(cond).dump()},
                {"trace_scale", io::json(scale).dump()}};
  io::save_state(out, rho, meta);
  if (!canonical_out.empty()) {
    // scaling F scales the assembled state by the same factor
    cf.f *= scale;
    io::save_canonical(canonical_out, cf);
  }
  std::cout << "wrote " << out << " shape " << shape.to_string() << " rank " << shape.tail_dim() << "\n";
  return 0;
}

int run_check(const std::string& path, bool all_bipartitions, const Tolerances& tol) {
  const auto rho = io::load_state(path, tol);
  const auto report =
      check_ppt(rho, all_bipartitions ? PptMode::all_bipartitions : PptMode::single_subsystems, tol);
  std::cout << std::setprecision(12);
  for (const auto& c : report.checks) {
    std::cout << "T{" << join(c.subsystems) << "}  min eigenvalue " << c.report.min_eigenvalue << "  "
              << (c.report.psd ? "PSD" : "NOT PSD") << "\n";
  }
  std::cout << (report.pass ? "PPT" : "NOT PPT") << "\n";
  return report.pass ? 0 : 2;
}

int exit_code(const AnalysisVerdict& v) {
  switch (v.index()) {
    case 0: return 0;
    case 1: return 3;
    case 2: return 4;
    default: return 5;
  }
}

int run_decompose(const std::string& path, const std::string& out, const AnalysisConfig& config) {
  const auto rho = io::load_state(path, config.tol);
  const auto verdict = analyze(rho, config);
  io::save_certificate(out, io::CertificateFile{rho.shape.all_dims(), verdict});
  std::cout << std::setprecision(12) << verdict_tag(verdict);
  if (const auto* s = std::get_if<Separable>(&verdict)) {
    std::cout << "  terms " << s->certificate.ensemble.terms.size() << "  residual "
              << s->certificate.reconstruction_residual;
  } else if (const auto* p = std::get_if<NotPpt>(&verdict)) {
    std::cout << "  T{" << join(p->subsystems) << "} witness " << p->witness_eigenvalue;
  } else if (const auto* r = std::get_if<RankConditionUnmet>(&verdict)) {
    std::cout << "  rank " << r->rank << " N " << r->tail_dim << ": " << r->reason;
  } else if (const auto* q = std::get_if<Inconclusive>(&verdict)) {
    std::cout << "  " << q->reason;
  }
  std::cout << "\n";
  return exit_code(verdict);
}

int run_verify(const std::string& state_path, const std::string& cert_path, const Tolerances& tol) {
  const auto rho = io::load_state(state_path, tol);
  const auto file = io::load_certificate(cert_path);
  if (file.dims != rho.shape.all_dims()) throw FormatError("certificate dims do not match the state");
  const auto* s = std::get_if<Separable>(&file.verdict);
  if (!s) {
    std::cout << "FAIL  certificate verdict is " << verdict_tag(file.verdict) << ", not SEPARABLE\n";
    return 2;
  }
  const auto result = verify_certificate(rho, s->certificate, tol);
  std::cout << std::setprecision(12) << (result.pass ? "PASS" : "FAIL") << "  residual " << result.residual
            << "  weight sum " << result.weight_sum << "  trace " << result.trace;
  if (!result.pass) std::cout << "  (" << result.failure << ")";
  std::cout << "\n";
  return result.pass ? 0 : 2;
}

int run_inspect(const std::string& path, const Tolerances& tol) {
  const auto rho = io::load_state(path, tol);
  const auto& shape = rho.shape;
  const auto eig = hermitian_eig(rho.matrix);
  const std::size_t r = rank(rho.matrix, tol.rank_rel_tol);
  std::cout << std::setprecision(12);
  std::cout << "shape       " << shape.to_string() << "  (total dimension " << shape.total_size() << ")\n";
  std::cout << "trace       " << rho.trace() << (rho.normalized ? "  (normalized)" : "") << "\n";
  std::cout << "rank        " << r << "  (N = " << shape.tail_dim() << ")\n";
  std::cout << "kernel dim  " << shape.total_size() - r << "\n";
  std::cout << "spectrum    min " << eig.eigenvalues(0) << "  max " << eig.eigenvalues(eig.eigenvalues.size() - 1)
            << "\n";
  std::cout << "nonzero eigenvalues:";
  for (Eigen::Index i = eig.eigenvalues.size(); i-- > 0;) {
    if (static_cast<std::size_t>(eig.eigenvalues.size() - 1 - i) >= r) break;
    std::cout << " " << eig.eigenvalues(i);
  }
  std::cout << "\n";
  std::cout << "diagonal block ranks:\n";
  for (std::size_t s = shape.front_size(); s-- > 0;) {
    const auto b = shape.front_unflat(s);
    std::cout << "  E(" << join(b) << ")  rank " << rank(block(rho, b, b), tol.rank_rel_tol) << "\n";
  }
  std::cout << "reduced tail rank " << rank(reduced_tail(rho), tol.rank_rel_tol) << "\n";
  for (std::size_t l = 1; l <= shape.num_front() + 1; ++l) {
    std::cout << "kernel/partial-transpose residual T{" << l << "} " << kernel_transpose_residual(rho, l, tol)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical forms and separability certificates for K_1 x ... x K_m x N states"};
  app.require_subcommand(1);

  std::string dims_text;
  std::uint64_t gen_seed = 0;
  double cond = 10.0;
  std::string gen_out;
  std::string canonical_out;
  auto* gen = app.add_subcommand("generate", "write a trace-normalized state assembled from a random canonical form");
  gen->add_option("--dims", dims_text, "K1,K2,...,N (tail last)")->required();
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--cond", cond, "condition-number target for F")->check(CLI::Range(1.0, 1e12));
  gen->add_option("-o,--output", gen_out, "state file to write")->required();
  gen->add_option("--emit-canonical", canonical_out, "also write the canonical form");

  std::string check_path;
  bool check_all = false;
  Tolerances check_tol;
  auto* chk = app.add_subcommand("check", "report the PPT test");
  chk->add_option("state", check_path)->required();
  chk->add_flag("--all-bipartitions", check_all, "also transpose subsystem subsets");
  add_tolerance_flags(chk, check_tol);

  std::string dec_path;
  std::string dec_out;
  bool dec_all = false;
  AnalysisConfig config;
  auto* dec = app.add_subcommand("decompose", "run the separability analysis and write a certificate");
  dec->add_option("state", dec_path)->required();
  dec->add_option("-o,--output", dec_out, "certificate file to write")->required();
  dec->add_option("--attempts", config.attempts, "random product-basis attempts");
  dec->add_option("--seed", config.seed, "RNG seed");
  dec->add_flag("--tail-compress", config.tail_compression, "restrict the tail to the support of its marginal");
  dec->add_flag("--all-bipartitions", dec_all, "PPT test over subsystem subsets");
  add_tolerance_flags(dec, config.tol);

  std::string ver_state;
  std::string ver_cert;
  Tolerances ver_tol;
  auto* ver = app.add_subcommand("verify", "independently re-check a certificate against a state");
  ver->add_option("state", ver_state)->required();
  ver->add_option("certificate", ver_cert)->required();
  add_tolerance_flags(ver, ver_tol);

  std::string insp_path;
  Tolerances insp_tol;
  auto* insp = app.add_subcommand("inspect", "print shape, rank, spectrum and block ranks");
  insp->add_option("state", insp_path)->required();
  add_tolerance_flags(insp, insp_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*gen) return run_generate(dims_text, gen_seed, cond, gen_out, canonical_out);
    if (*chk) return run_check(check_path, check_all, check_tol);
    if (*dec) {
      config.ppt_mode = dec_all ? PptMode::all_bipartitions : PptMode::single_subsystems;
      return run_decompose(dec_path, dec_out, config);
    }
    if (*ver) return run_verify(ver_state, ver_cert, ver_tol);
    if (*insp) return run_inspect(insp_path, insp_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
