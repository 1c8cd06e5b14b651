#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "detlab/error.hpp"
#include "detlab/io.hpp"
#include "support.hpp"

using namespace detlab;
using namespace detlab::testing;

namespace {
ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

/// Container text for an 8 x 8 grid with `count` copies of `entry`.
std::string container(const std::string& kind, const std::string& entry, int count, int version = 1) {
  std::string s = R"({"header": {"schema_version": )" + std::to_string(version) +
                  R"(, "n": 2, "m": 8, "field_kind": ")" + kind + R"(", "psd_flag": false}, "values": [)";
  for (int i = 0; i < count; ++i) s += (i ? "," : "") + entry;
  return s + "]}";
}
}  // namespace

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("field containers round-trip bitwise") {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3}) {
    const TorusGrid g(n, 8);
    ScalarField s(g);
    for (double& v : s.values) v = u(rng);
    VectorField vf(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int c = 0; c < n; ++c) vf.at(i, c) = u(rng) * 1e-300;
    MatrixField m(g, SymMatrix(n), true);
    for (SymMatrix& a : m.values) a = random_spd(rng, n);

    const ScalarField s2 = std::get<ScalarField>(io::parse_field(io::serialize_field(s)));
    CHECK(s2.values == s.values);
    const VectorField v2 = std::get<VectorField>(io::parse_field(io::serialize_field(vf)));
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int c = 0; c < n; ++c) CHECK(v2.at(i, c) == vf.at(i, c));
    const MatrixField m2 = std::get<MatrixField>(io::parse_field(io::serialize_field(m)));
    CHECK(m2.psd_flag);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(m2.values[i] == m.values[i]);
    CHECK(io::serialize_field(m2) == io::serialize_field(m));
  }
}

TEST_CASE("field files") {
  const auto dir = std::filesystem::temp_directory_path() / "detlab_test_io";
  std::filesystem::create_directories(dir);
  const MatrixField m(TorusGrid(2, 8), SymMatrix::identity(2, 2.0));
  io::write_field(dir / "m.json", m);
  CHECK(io::read_matrix_field(dir / "m.json").values[3] == m.values[3]);
  CHECK(code_of([&] { io::read_scalar_field(dir / "m.json"); }) == ErrorCode::Parse);
  CHECK(code_of([&] { io::read_field(dir / "missing.json"); }) == ErrorCode::Io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed containers") {
  CHECK(code_of([] { io::parse_field("{not json"); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(R"({"values": []})"); }) == ErrorCode::Parse);
  CHECK_NOTHROW(io::parse_field(container("scalar", "1", 64)));
  CHECK(code_of([] { io::parse_field(container("scalar", "1", 64, 2)); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(container("scalar", "1", 63)); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(container("scalar", "\"x\"", 64)); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(container("tensor", "1", 64)); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(container("matrix", "[1,0]", 64)); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_field(container("vector", "[1,0,0]", 64)); }) == ErrorCode::Parse);
  CHECK(code_of([] {
          io::parse_field(R"({"header": {"schema_version": 1, "n": 2, "m": 6, "field_kind": "scalar", "psd_flag": false}, "values": []})");
        }) == ErrorCode::Parse);
  ScalarField bad(TorusGrid(2, 8));
  bad.values[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { io::serialize_field(bad); }) == ErrorCode::Io);
}

TEST_CASE("key-value text and lists") {
  const auto kv = io::parse_key_values("# comment\n a = 1 \n\nb=x,y # trailing\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "x,y");
  CHECK(code_of([] { io::parse_key_values("novalue\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_key_values(" = 3\n"); }) == ErrorCode::Parse);

  CHECK(io::parse_index_list("1..5") == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(io::parse_index_list("1,2,4") == std::vector<int>{1, 2, 4});
  CHECK(io::parse_index_list("1..3, 8") == std::vector<int>{1, 2, 3, 8});
  CHECK(code_of([] { io::parse_index_list("5..1"); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_index_list("a"); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::parse_index_list(""); }) == ErrorCode::Parse);
  CHECK(io::parse_real_list("0.5, 1e-3") == std::vector<double>{0.5, 1e-3});
  CHECK(code_of([] { io::parse_real_list("0.5x"); }) == ErrorCode::Parse);
}

TEST_CASE("sequence specs round-trip") {
  SequenceSpec s = io::parse_sequence_spec("family = counterexample\nn = 3\nm = 128\nk_range = 1..4\n");
  CHECK(s.family == Family::Counterexample);
  CHECK(s.center == Point{0.5, 0.5, 0.5});
  CHECK(s.k_range.size() == 4);
  const SequenceSpec t = io::parse_sequence_spec(io::serialize_sequence_spec(s));
  CHECK(t.n == 3);
  CHECK(t.m == 128);
  CHECK(t.k_range == s.k_range);
  CHECK(t.center == s.center);

  const auto dir = std::filesystem::temp_directory_path() / "detlab_test_spec";
  std::filesystem::create_directories(dir);
  io::write_field(dir / "base.json", MatrixField(TorusGrid(2, 8), SymMatrix::identity(2), true));
  const SequenceSpec m = io::parse_sequence_spec("family = mollified\nk_range = 1,2\nmollify_eps = 0.25,0.125\nbase_field = base.json\n", dir);
  REQUIRE(m.base.has_value());
  CHECK(m.base->grid.points_per_axis() == 8);
  CHECK(io::serialize_sequence_spec(m).find("base_field = base.json") != std::string::npos);
  std::filesystem::remove_all(dir);

  CHECK(code_of([] { io::parse_sequence_spec("n = 2\n"); }) == ErrorCode::Parse);
}

TEST_CASE("CSV tables") {
  io::CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK(t.rows() == 1);
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
}
