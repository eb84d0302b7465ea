#include <doctest.h>

#include <filesystem>

#include "cgauge/errors.hpp"
#include "cgauge/field_io.hpp"
#include "support.hpp"

using namespace cgauge;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "cgauge_field_io_test";
  fs::create_directories(dir);
  return dir;
}

std::size_t error_offset(const std::string& text) {
  try {
    parse_field(text, "inline");
  } catch (const FieldFormatError& e) {
    return e.byte_offset();
  }
  FAIL("expected FieldFormatError");
  return 0;
}

}  // namespace

TEST_CASE("roundtrip is bit-exact for every kind") {
  const fs::path dir = scratch_dir();
  const Grid g(12);
  ScalarField s = testing::noise(g, 1);
  s[3] = 1.0 / 3.0;
  s[4] = -0.0;
  s[5] = 1e-300;
  write_field(dir / "s.json", s);
  const ScalarField s2 = read_scalar_field(dir / "s.json");
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(s2[c] == s[c]);
  CHECK(std::signbit(s2[4]));

  const VecField v = grad(s);
  write_field(dir / "v.json", v);
  const VecField v2 = read_vec2_field(dir / "v.json");
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(v2[c] == v[c]);

  const RotationField P = random_rotation_field(3, g, 0.9, 4);
  write_field(dir / "P.json", P);
  CHECK(read_rotation_field(dir / "P.json") == P);

  const SkewPotential w = random_smooth_potential(4, g, 1.3, 4, 7);
  write_field(dir / "w.json", w);
  CHECK(read_skew_potential(dir / "w.json") == w);

  const FieldDocument doc = read_field(dir / "w.json");
  CHECK(doc.kind == FieldKind::SkewPotential);
  CHECK(doc.n == 4);
  CHECK(doc.N == 12);
  CHECK(doc.data.size() == g.cells() * 32);
  // Layout (a * n + b) * 2 + dir inside each cell.
  CHECK(doc.data[(1 * 4 + 3) * 2 + 1] == w.get(0, 1, 1, 3));
}

TEST_CASE("writing is deterministic") {
  const SkewPotential w = random_smooth_potential(3, Grid(8), 1.0, 4, 2);
  CHECK(field_json(w) == field_json(w));
  CHECK(field_json(ScalarField(Grid(4), 0.1)).find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("malformed JSON reports the parser offset") {
  const std::string text = R"({"kind": "scalar", "n": 1, "N": 4, "data": [1, 2,, 3]})";
  CHECK(error_offset(text) == text.find(",,") + 2);
}

TEST_CASE("schema violations name the offending token") {
  const std::string zeros16 = "0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0";
  SUBCASE("unknown key") {
    const std::string text = R"({"kind": "scalar", "n": 1, "N": 4, "extra": 1, "data": [)" + zeros16 + "]}";
    CHECK(error_offset(text) == text.find("\"extra\""));
  }
  SUBCASE("wrong length") {
    const std::string text = R"({"kind": "scalar", "n": 1, "N": 4, "data": [1, 2]})";
    CHECK(error_offset(text) == text.find("\"data\""));
  }
  SUBCASE("non-number entry") {
    const std::string text = R"({"kind": "scalar", "n": 1, "N": 4, "data": [0, 0, "x", )" +
                             zeros16.substr(9) + "]}";
    CHECK(error_offset(text) == text.find("\"x\""));
  }
  SUBCASE("wrong n for scalar") {
    const std::string text = R"({"kind": "scalar", "n": 2, "N": 4, "data": [)" + zeros16 + "]}";
    CHECK(error_offset(text) == text.find("\"n\""));
  }
  SUBCASE("unknown kind") {
    const std::string text = R"({"kind": "tensor", "n": 1, "N": 4, "data": [)" + zeros16 + "]}";
    CHECK(error_offset(text) == text.find("\"kind\""));
  }
  SUBCASE("missing key") {
    CHECK_THROWS_AS(parse_field(R"({"kind": "scalar", "n": 1, "N": 4})", "inline"), FieldFormatError);
  }
}

TEST_CASE("skew potentials must be exactly antisymmetric") {
  const Grid g(4);
  SkewPotential w(g, 2);
  w.set(0, 0, 0, 1, 0.5);
  std::string text = field_json(w);
  CHECK_NOTHROW(parse_field(text, "inline"));
  // Entry (1, 0) of direction 0 in cell 0 is the third number.
  const std::size_t pos = text.find("-0.5");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 4, "-0.50000000000000011");
  CHECK(error_offset(text) == pos);

  std::string diag = field_json(SkewPotential(g, 2));
  const std::size_t first = diag.find('[') + 1;
  diag.replace(first, 1, "1");
  CHECK_THROWS_AS(parse_field(diag, "inline"), FieldFormatError);
}

TEST_CASE("typed readers reject other kinds and non-rotations") {
  const fs::path dir = scratch_dir();
  write_field(dir / "scalar.json", ScalarField(Grid(4), 1.0));
  CHECK_THROWS_AS(read_rotation_field(dir / "scalar.json"), FieldFormatError);
  CHECK_THROWS_AS(read_skew_potential(dir / "scalar.json"), FieldFormatError);
  RotationField P(Grid(4), 2);
  P.entry(0, 0, 0) = 2.0;
  write_field(dir / "bad_rot.json", P);
  CHECK_THROWS_AS(read_rotation_field(dir / "bad_rot.json"), FieldFormatError);
  CHECK_THROWS_AS(read_field(dir / "missing.json"), Error);
}
