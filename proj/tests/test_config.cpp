#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "hiertext/config.hpp"
#include "helpers.hpp"

using namespace hiertext;

TEST_CASE("config parses sections, comments, and trimmed values") {
  std::istringstream in(
      "# global comment\n"
      "[hmlstm]\n"
      "hidden = 128   # trailing comment\n"
      "  lr=0.001\n"
      "dropout =\t0.5\n"
      "\n"
      "[train]\n"
      "model = hmlstm\n");
  const auto cfg = config::parse_config(in);
  REQUIRE(cfg.sections.size() == 2);
  REQUIRE(cfg.get("hmlstm", "hidden", "") == "128");
  REQUIRE(cfg.get("hmlstm", "lr", "") == "0.001");
  REQUIRE(cfg.get("hmlstm", "dropout", "") == "0.5");
  REQUIRE(cfg.get("train", "model", "") == "hmlstm");
  REQUIRE(cfg.get("train", "missing", "fallback") == "fallback");
  REQUIRE(cfg.has("hmlstm", "hidden"));
  REQUIRE_FALSE(cfg.has("hmlstm", "absent"));
  REQUIRE_FALSE(cfg.has("nope", "hidden"));
}

TEST_CASE("numeric and boolean accessors convert or fail loudly") {
  std::istringstream in(
      "[a]\n"
      "n = 42\n"
      "x = 2.5\n"
      "flag = yes\n"
      "off = false\n"
      "bad = 12abc\n"
      "word = maybe\n");
  const auto cfg = config::parse_config(in);
  REQUIRE(cfg.get_num<int>("a", "n", 0) == 42);
  REQUIRE(cfg.get_num<double>("a", "x", 0) == 2.5);
  REQUIRE(cfg.get_num<int>("a", "missing", 7) == 7);
  REQUIRE(cfg.get_bool("a", "flag", false));
  REQUIRE_FALSE(cfg.get_bool("a", "off", true));
  REQUIRE(cfg.get_bool("a", "missing", true));
  REQUIRE_THROWS_WITH(cfg.get_num<int>("a", "bad", 0),
                      Catch::Matchers::ContainsSubstring("not a number: '12abc'"));
  REQUIRE_THROWS_WITH(cfg.get_bool("a", "word", false),
                      Catch::Matchers::ContainsSubstring("not a boolean: 'maybe'"));
}

TEST_CASE("parse problems are collected into one error") {
  std::istringstream in(
      "[broken\n"
      "key value\n"
      "= orphan\n");
  try {
    config::parse_config(in, "test.cfg");
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("test.cfg:1: malformed section") != std::string::npos);
    REQUIRE(msg.find("test.cfg:2: expected key = value") != std::string::npos);
    REQUIRE(msg.find("test.cfg:3: empty key") != std::string::npos);
    REQUIRE(std::count(msg.begin(), msg.end(), ';') == 2);
  }
}

TEST_CASE("schema validation reports every violation together") {
  std::istringstream in(
      "[hmlstm]\n"
      "hidden = 64\n"
      "mystery = 1\n"
      "[rogue]\n"
      "x = 2\n");
  const auto cfg = config::parse_config(in);
  const std::map<std::string, std::set<std::string>> schema = {
      {"hmlstm", {"hidden", "lr"}}};
  try {
    config::validate_schema(cfg, schema);
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("unknown key 'mystery' in section [hmlstm]") != std::string::npos);
    REQUIRE(msg.find("unknown section [rogue]") != std::string::npos);
  }
  std::istringstream ok("[hmlstm]\nhidden = 64\nlr = 0.001\n");
  REQUIRE_NOTHROW(config::validate_schema(config::parse_config(ok), schema));
}

TEST_CASE("empty input yields an empty config") {
  std::istringstream in("# only comments\n\n");
  const auto cfg = config::parse_config(in);
  REQUIRE(cfg.sections.empty());
}

TEST_CASE("later assignments override earlier ones") {
  std::istringstream in("[a]\nk = 1\nk = 2\n");
  REQUIRE(config::parse_config(in).get("a", "k", "") == "2");
}

TEST_CASE("load_config round-trips a file and rejects a missing one") {
  const auto dir = testutil::temp_dir("cfg");
  const auto path = (dir / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "[train]\nseed = 9\n";
  }
  const auto cfg = config::load_config(path);
  REQUIRE(cfg.get_num<int>("train", "seed", 0) == 9);
  REQUIRE_THROWS_WITH(config::load_config((dir / "missing.cfg").string()),
                      Catch::Matchers::ContainsSubstring("cannot open config file"));
}
