#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hamchain/errors.hpp"
#include "hamchain/toml_lite.hpp"

using namespace hamchain;
using namespace hamchain::toml_lite;

TEST_CASE("root and section key-value pairs") {
  auto doc = parse_string(
      "title = \"demo\"\n"
      "count = 42\n"
      "\n"
      "[system]\n"
      "id = \"pendulum\"  # inline comment\n"
      "mass = 1.5\n"
      "flag = true\n");
  CHECK(doc.get_string("", "title", "") == "demo");
  CHECK(doc.get_int("", "count", 0) == 42);
  CHECK(doc.get_string("system", "id", "") == "pendulum");
  CHECK(doc.get_double("system", "mass", 0.0) == 1.5);
  CHECK(doc.get_bool("system", "flag", false));
}

TEST_CASE("fallbacks apply when keys are absent") {
  auto doc = parse_string("[a]\nx = 1\n");
  CHECK(doc.get_double("a", "missing", 2.5) == 2.5);
  CHECK(doc.get_int("b", "x", -7) == -7);
  CHECK(doc.get_string("a", "name", "dflt") == "dflt");
  CHECK_FALSE(doc.has("a", "missing"));
  CHECK(doc.has("a", "x"));
}

TEST_CASE("numbers: ints, floats, signs, exponents, underscores") {
  auto doc = parse_string(
      "i = -12\n"
      "big = 1_000_000\n"
      "f1 = 0.5\n"
      "f2 = 1e-3\n"
      "f3 = -2.5E2\n");
  CHECK(doc.get_int("", "i", 0) == -12);
  CHECK(doc.get_int("", "big", 0) == 1000000);
  CHECK(doc.get_double("", "f1", 0) == 0.5);
  CHECK(doc.get_double("", "f2", 0) == 1e-3);
  CHECK(doc.get_double("", "f3", 0) == -250.0);
  // ints read as doubles, not the other way around
  CHECK(doc.get_double("", "i", 0) == -12.0);
  CHECK_THROWS_AS(doc.get_int("", "f1", 0), ConfigError);
}

TEST_CASE("arrays of numbers") {
  auto doc = parse_string("a = [1, 2, 3]\nb = [0.5, -1.5]\nempty = []\n");
  CHECK(doc.get_int_array("", "a", {}) == std::vector<int64_t>{1, 2, 3});
  CHECK(doc.get_double_array("", "b", {}) == std::vector<double>{0.5, -1.5});
  CHECK(doc.get_double_array("", "empty", {9}).empty());
  // int arrays coerce to double arrays
  CHECK(doc.get_double_array("", "a", {}) == std::vector<double>{1, 2, 3});
}

TEST_CASE("strings with escapes") {
  auto doc = parse_string("s = \"a\\\"b\\n\\tc\\\\\"\n");
  CHECK(doc.get_string("", "s", "") == "a\"b\n\tc\\");
}

TEST_CASE("comments and blank lines between everything") {
  auto doc = parse_string(
      "# leading comment\n"
      "\n"
      "[x]  # section comment\n"
      "# another\n"
      "k = 3 # trailing\n"
      "\n");
  CHECK(doc.get_int("x", "k", 0) == 3);
}

TEST_CASE("last assignment wins") {
  auto doc = parse_string("k = 1\nk = 2\n");
  CHECK(doc.get_int("", "k", 0) == 2);
}

TEST_CASE("parse errors carry line context") {
  CHECK_THROWS_AS(parse_string("k 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_string("k = \n"), ConfigError);
  CHECK_THROWS_AS(parse_string("k = \"unterminated\n"), ConfigError);
  CHECK_THROWS_AS(parse_string("k = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_string("[]\n"), ConfigError);
  CHECK_THROWS_AS(parse_string("k = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_string("k = 1 extra\n"), ConfigError);
  try {
    parse_string("ok = 1\nbad = \n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("type mismatches throw") {
  auto doc = parse_string("s = \"x\"\nn = 1\n");
  CHECK_THROWS_AS(doc.get_double("", "s", 0.0), ConfigError);
  CHECK_THROWS_AS(doc.get_string("", "n", ""), ConfigError);
  CHECK_THROWS_AS(doc.get_bool("", "n", false), ConfigError);
  CHECK_THROWS_AS(doc.get_double_array("", "n", {}), ConfigError);
}

TEST_CASE("missing file errors") {
  CHECK_THROWS_AS(parse_file("/nonexistent/config.toml"), ConfigError);
}
