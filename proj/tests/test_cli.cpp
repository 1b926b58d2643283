#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "pptcanon/io.hpp"
#include "pptcanon/oracle.hpp"

#ifndef PPTCANON_CLI
#error "PPTCANON_CLI must name the command-line binary"
#endif

using namespace pptcanon;
namespace fs = std::filesystem;

namespace {

fs::path dir() {
  const auto d = fs::temp_directory_path() / "pptcanon_test_cli";
  fs::create_directories(d);
  return d;
}

std::string p(const std::string& name) { return "'" + (dir() / name).string() + "'"; }

int run(const std::string& args) {
  const std::string cmd = std::string("'") + PPTCANON_CLI + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, GenerateDecomposeVerify) {
  ASSERT_EQ(run("generate --dims 2,2,3 --seed 7 -o " + p("gen.json") + " --emit-canonical " + p("gen_cf.json")), 0);
  EXPECT_EQ(run("check " + p("gen.json")), 0);
  EXPECT_EQ(run("check --all-bipartitions " + p("gen.json")), 0);
  ASSERT_EQ(run("decompose " + p("gen.json") + " -o " + p("gen_cert.json")), 0);
  EXPECT_EQ(run("verify " + p("gen.json") + " " + p("gen_cert.json")), 0);
  EXPECT_EQ(run("inspect " + p("gen.json")), 0);

  const auto cert = io::load_certificate(dir() / "gen_cert.json");
  EXPECT_EQ(verdict_tag(cert.verdict), "SEPARABLE");
  const auto cf = io::load_canonical(dir() / "gen_cf.json");
  EXPECT_EQ(cf.shape, SystemShape({2, 2}, 3));
}

TEST(Cli, TamperedCertificateFailsVerify) {
  ASSERT_EQ(run("generate --dims 3,2,2 --seed 11 -o " + p("t.json")), 0);
  ASSERT_EQ(run("decompose " + p("t.json") + " -o " + p("t_cert.json")), 0);
  auto j = io::parse(io::read_text(dir() / "t_cert.json"), "cert");
  const double w = j["ensemble"][0]["weight"].get<double>();
  j["ensemble"][0]["weight"] = w * 1.01;
  io::write_text_atomic(dir() / "t_bad.json", io::dump(j));
  EXPECT_EQ(run("verify " + p("t.json") + " " + p("t_bad.json")), 2);
}

TEST(Cli, EntangledFixtures) {
  io::save_state(dir() / "bell.json", oracle::bell_projector());
  EXPECT_EQ(run("check " + p("bell.json")), 2);
  EXPECT_EQ(run("decompose " + p("bell.json") + " -o " + p("bell_cert.json")), 3);
  EXPECT_EQ(verdict_tag(io::load_certificate(dir() / "bell_cert.json").verdict), "NOT_PPT");
  // a non-separable certificate never verifies
  EXPECT_EQ(run("verify " + p("bell.json") + " " + p("bell_cert.json")), 2);

  io::save_state(dir() / "werner.json", oracle::werner(0.5));
  EXPECT_EQ(run("decompose " + p("werner.json") + " -o " + p("werner_cert.json")), 4);

  io::save_state(dir() / "classical.json", oracle::classical_mixture());
  EXPECT_EQ(run("decompose " + p("classical.json") + " -o " + p("cm_cert.json") + " --attempts 0"), 5);
  EXPECT_EQ(run("decompose " + p("classical.json") + " -o " + p("cm_cert.json")), 0);
}

TEST(Cli, ErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("check " + p("missing.json")), 1);
  EXPECT_EQ(run("generate --dims 2 --seed 1 -o " + p("x.json")), 1);
  io::write_text_atomic(dir() / "garbage.json", "{\"format_version\": 1");
  EXPECT_EQ(run("inspect " + p("garbage.json")), 1);
  ASSERT_EQ(run("generate --dims 2,2 --seed 1 -o " + p("small.json")), 0);
  ASSERT_EQ(run("generate --dims 2,3 --seed 1 -o " + p("other.json")), 0);
  ASSERT_EQ(run("decompose " + p("other.json") + " -o " + p("other_cert.json")), 0);
  EXPECT_EQ(run("verify " + p("small.json") + " " + p("other_cert.json")), 1);
}

TEST(Cli, DeterministicOutputs) {
  ASSERT_EQ(run("generate --dims 2,2,2,3 --seed 5 -o " + p("d1.json")), 0);
  ASSERT_EQ(run("generate --dims 2,2,2,3 --seed 5 -o " + p("d2.json")), 0);
  EXPECT_EQ(io::read_text(dir() / "d1.json"), io::read_text(dir() / "d2.json"));
  ASSERT_EQ(run("decompose " + p("d1.json") + " --seed 3 -o " + p("c1.json")), 0);
  ASSERT_EQ(run("decompose " + p("d1.json") + " --seed 3 -o " + p("c2.json")), 0);
  EXPECT_EQ(io::read_text(dir() / "c1.json"), io::read_text(dir() / "c2.json"));
  ASSERT_EQ(run("generate --dims 2,2,2,3 --seed 6 -o " + p("d3.json")), 0);
  EXPECT_NE(io::read_text(dir() / "d1.json"), io::read_text(dir() / "d3.json"));
}
