// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unistd.h>

#include "l2rom/io.hpp"
#include "test_support.hpp"

using namespace l2rom;
using l2rom::testing::Rng;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("l2rom_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::permissions(path, fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(path, ec);
  }
  fs::path operator/(const char* name) const { return path / name; }
};

template <typename M>
bool same_bits(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(typename M::Scalar) *
                                             static_cast<std::size_t>(a.size())) == 0;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

void write_raw(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("roms round-trip bit for bit") {
  TempDir dir;
  Rng rng(3);
  for (const auto& rom : {l2rom::testing::random_lti_rom(rng, 3, 2, 1),
                          l2rom::testing::random_lti_rom(rng, 2, 1, 1, true),
                          l2rom::testing::random_stationary_rom(rng, 3, 1, 2),
                          l2rom::testing::random_kron_rom(rng, 2, 2, 2, 1)}) {
    io::write_rom(dir / "rom.json", rom);
    CHECK(io::read_kind(dir / "rom.json") == io::Kind::rom);
    const StructuredRom back = io::read_rom(dir / "rom.json");
    CHECK(back.structure == rom.structure);
    CHECK(back.order == rom.order);
    REQUIRE(back.a_terms.size() == rom.a_terms.size());
    for (std::size_t t = 0; t < rom.a_terms.size(); ++t) {
      CHECK(same_bits(back.a_terms[t].matrix, rom.a_terms[t].matrix));
      CHECK(back.a_terms[t].family.terms().size() == rom.a_terms[t].family.terms().size());
    }
    CHECK(same_bits(back.b_terms[0].matrix, rom.b_terms[0].matrix));
    CHECK(same_bits(back.c_terms[0].matrix, rom.c_terms[0].matrix));
    CHECK(back.kron.has_value() == rom.kron.has_value());
    if (rom.kron) CHECK(same_bits(back.kron->Axi, rom.kron->Axi));
    const ParamPoint p = rom.n_params == 2 ? ParamPoint(cplx{0.1, 1.0}, cplx{0.5, 0.2})
                                           : ParamPoint(cplx{0.3, 0.7});
    CHECK(same_bits(evaluate_output(back, p).output, evaluate_output(rom, p).output));
  }
  CHECK_FALSE(fs::exists(dir / "rom.json.tmp"));
}

TEST_CASE("awkward doubles survive the text format") {
  TempDir dir;
  MatR A(1, 6);
  A << 0.1, -0.0, 1.0 / 3.0, 5e-324, std::numeric_limits<double>::max(), -2.2250738585072014e-308;
  const auto rom = make_lti_rom(MatR::Identity(1, 1), A.leftCols(1), A.block(0, 1, 1, 1),
                                A.block(0, 2, 1, 1));
  io::write_rom(dir / "r.json", rom);
  const auto back = io::read_rom(dir / "r.json");
  CHECK(same_bits(back.b_terms[0].matrix(0, 0), -0.0));
  CHECK(same_bits(back.c_terms[0].matrix(0, 0), 1.0 / 3.0));

  SampleSet s;
  s.points = {ParamPoint(cplx{0.0, 1e-300}), ParamPoint(cplx{0.0, -1e-300})};
  MatC v(1, 1);
  v(0, 0) = cplx{5e-324, std::numeric_limits<double>::max()};
  s.values = {v, MatC(v.conjugate())};
  s.weights = {0.1, 0.1};
  io::write_samples(dir / "s.json", s);
  const auto sb = io::read_samples(dir / "s.json");
  CHECK(same_bits(sb.values[0], s.values[0]));
  CHECK(sb.points[1][0] == s.points[1][0]);
  CHECK(same_bits(sb.weights[0], 0.1));
}

TEST_CASE("samples round-trip") {
  TempDir dir;
  Rng rng(4);
  const SampleSet one = l2rom::testing::random_closed_samples(
      rng, 1, 5, 2, 3, [&] { return ParamPoint(cplx{0.0, rng.uniform(-3.0, 3.0)}); });
  const SampleSet two = l2rom::testing::random_closed_samples(rng, 2, 4, 1, 1, [&] {
    return ParamPoint(cplx{0.0, rng.normal()}, std::polar(1.0, rng.uniform(0.0, 6.0)));
  });
  for (const auto& s : {one, two}) {
    io::write_samples(dir / "s.json", s);
    const SampleSet back = io::read_samples(dir / "s.json");
    REQUIRE(back.size() == s.size());
    CHECK(back.n_params == s.n_params);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(same_bits(back.values[i], s.values[i]));
      CHECK(same_bits(back.weights[i], s.weights[i]));
      for (int d = 0; d < s.points[i].dim(); ++d) CHECK(back.points[i][d] == s.points[i][d]);
    }
    CHECK(check_conjugation_closure(back).closed);
  }
}

TEST_CASE("models round-trip") {
  TempDir dir;
  SUBCASE("lti") {
    const auto fom = make_random_stable(7, 2, 1, 11, TimeDomain::discrete);
    io::write_model(dir / "m.json", fom);
    const auto back = std::get<AffineLtiFom>(io::read_model(dir / "m.json"));
    CHECK(back.time == TimeDomain::discrete);
    CHECK(same_bits(MatR(back.A), MatR(fom.A)));
    CHECK(same_bits(MatR(back.E), MatR(fom.E)));
    CHECK(same_bits(back.B, fom.B));
    CHECK(same_bits(back.C, fom.C));
  }
  SUBCASE("stationary") {
    const auto fom = make_poisson(4);
    io::write_model(dir / "m.json", fom);
    const auto back = std::get<AffineStationaryFom>(io::read_model(dir / "m.json"));
    CHECK(back.a == fom.a);
    CHECK(back.b == fom.b);
    CHECK(same_bits(MatR(back.A1), MatR(fom.A1)));
    CHECK(same_bits(MatR(back.A2), MatR(fom.A2)));
  }
  SUBCASE("kron parametric") {
    const auto fom = make_kron_parametric(3, 2, 2, 1, 5);
    io::write_model(dir / "m.json", fom);
    const auto back = std::get<KronParametricFom>(io::read_model(dir / "m.json"));
    CHECK(same_bits(back.terms.s_poles, fom.terms.s_poles));
    CHECK(same_bits(back.terms.xi_poles, fom.terms.xi_poles));
    CHECK(same_bits(back.terms.left, fom.terms.left));
    CHECK(same_bits(back.terms.right, fom.terms.right));
  }
}

TEST_CASE("certificates and traces round-trip") {
  TempDir dir;
  io::CertificateFile f;
  f.certificate.family = Family::stationary;
  f.certificate.tolerance = 1e-6;
  f.certificate.rows = {{0, -1, cplx{-3.2, 0.0}, cplx{}, 1e-9, 2e-9,
                         std::numeric_limits<double>::quiet_NaN()}};
  f.certificate.finalize(1e-6);
  f.data_path = "poisson.json";
  f.rom_path = "rom.json";
  io::write_certificate(dir / "c.json", f);
  const auto back = io::read_certificate(dir / "c.json");
  CHECK(back.certificate.family == Family::stationary);
  CHECK(back.certificate.pass);
  CHECK(back.certificate.rows.size() == 1);
  CHECK(std::isnan(back.certificate.rows[0].hermite));
  CHECK(back.certificate.rows[0].left == 2e-9);
  CHECK(back.data_path == "poisson.json");

  Rng rng(5);
  FitTrace t;
  t.rom = l2rom::testing::random_lti_rom(rng, 2, 1, 1);
  t.iterations = {{3.0, 1.0, 0.0}, {2.0, 0.5, 0.25}};
  t.converged = true;
  t.message = "done";
  io::write_trace(dir / "t.json", t);
  const auto tb = io::read_trace(dir / "t.json");
  CHECK(tb.accepted_steps() == 1);
  CHECK(tb.final_objective() == 2.0);
  CHECK(tb.message == "done");
  CHECK(same_bits(tb.rom.a_terms[1].matrix, t.rom.a_terms[1].matrix));
}

TEST_CASE("malformed files are format errors") {
  TempDir dir;
  write_raw(dir / "bad.json", "{\"kind\": \"rom\", \"version\": 1, \"structure\": ");
  CHECK_THROWS_AS(io::read_rom(dir / "bad.json"), io::FormatError);
  write_raw(dir / "v2.json", "{\"kind\": \"rom\", \"version\": 2}");
  CHECK_THROWS_AS(io::read_rom(dir / "v2.json"), io::FormatError);
  write_raw(dir / "odd.json", "{\"kind\": \"potato\", \"version\": 1}");
  CHECK_THROWS_AS(io::read_kind(dir / "odd.json"), io::FormatError);
  write_raw(dir / "ragged.json",
            "{\"kind\":\"model\",\"version\":1,\"model\":\"lti\",\"time\":\"continuous\","
            "\"E\":[[1.0],[1.0, 2.0]],\"A\":[[1.0]],\"B\":[[1.0]],\"C\":[[1.0]]}");
  CHECK_THROWS_AS(io::read_model(dir / "ragged.json"), io::FormatError);
  write_raw(dir / "type.json",
            "{\"kind\":\"samples\",\"version\":1,\"n_params\":\"one\",\"points\":[],"
            "\"values\":[],\"weights\":[]}");
  CHECK_THROWS_AS(io::read_samples(dir / "type.json"), io::FormatError);

  Rng rng(6);
  io::write_rom(dir / "rom.json", l2rom::testing::random_lti_rom(rng, 2, 1, 1));
  CHECK_THROWS_AS(io::read_samples(dir / "rom.json"), io::FormatError);
}

TEST_CASE("file system failures are io errors") {
  TempDir dir;
  CHECK_THROWS_AS(io::read_rom(dir / "missing.json"), io::IoError);
  Rng rng(7);
  const auto rom = l2rom::testing::random_lti_rom(rng, 2, 1, 1);
  CHECK_THROWS_AS(io::write_rom(dir.path / "no" / "such" / "dir.json", rom), io::IoError);
  if (::geteuid() != 0) {
    fs::permissions(dir.path, fs::perms::owner_write | fs::perms::group_write |
                                  fs::perms::others_write,
                    fs::perm_options::remove);
    CHECK_THROWS_AS(io::write_rom(dir / "rom.json", rom), io::IoError);
  }
}

TEST_CASE("atomic writes replace the target without leftovers") {
  TempDir dir;
  io::write_text_atomic(dir / "a.txt", "first");
  io::write_text_atomic(dir / "a.txt", "second");
  std::ifstream in(dir / "a.txt");
  std::string text;
  in >> text;
  CHECK(text == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++entries;
  CHECK(entries == 1);
}
