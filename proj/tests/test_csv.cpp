#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "milogit/csv.hpp"
#include "milogit/rng.hpp"
#include "oracle.hpp"

using namespace milogit;

TEST_CASE("kv grammar: comments, blanks, trimming") {
  KvConfig kv = parse_kv_text("# header comment\n\n  a = 1  # trailing\n\tb=x y z \n", "t");
  CHECK(kv.get("a") == "1");
  CHECK(kv.get("b") == "x y z");
  CHECK(kv.keys() == std::vector<std::string>{"a", "b"});
  CHECK(kv.has("a"));
  CHECK_FALSE(kv.has("c"));
  CHECK(kv.get_or("c", "dflt") == "dflt");
}

TEST_CASE("kv grammar: errors carry origin and line") {
  try {
    parse_kv_text("a = 1\nnot a pair\n", "cfg.txt");
    FAIL("expected bad_config");
  } catch (const error& e) {
    CHECK(e.code() == "bad_config");
    CHECK(std::string(e.what()).find("cfg.txt line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_kv_text("= v\n", "t"), error);   // empty key
  CHECK_THROWS_AS(parse_kv_text("a=1\na=2\n", "t"), error);  // duplicate
}

TEST_CASE("kv numeric accessors") {
  KvConfig kv = parse_kv_text("n = 100\nx = 2.5\nlist = 1, 2  3\nbad = 7q\n", "t");
  CHECK(kv.integer("n") == 100);
  CHECK(kv.num("x") == 2.5);
  CHECK(kv.integer_or("missing", 42) == 42);
  CHECK(kv.num_list("list") == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(kv.num("bad"), error);
  CHECK_THROWS_AS(kv.integer("x"), error);  // 2.5 is not integral
  CHECK_THROWS_AS(kv.num("nope"), error);   // absent key
  CHECK(kv.list("list") == std::vector<std::string>{"1", "2", "3"});
  CHECK(kv.list_or("absent").empty());
}

TEST_CASE("split_list handles commas, spaces, tabs") {
  CHECK(KvConfig::split_list("a,b c\td") == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(KvConfig::split_list("  ,, ").empty());
}

TEST_CASE("fnv1a pinned vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("schema validation") {
  Schema s = schema_from_kv(parse_kv_text(
      "outcome = y\nx1 = a b\nx2 = c\nz = z1\nw = w1 w2\nmissing = .\nignore = junk\n", "t"));
  CHECK(s.outcome == std::vector<std::string>{"y"});
  CHECK(s.x1 == std::vector<std::string>{"a", "b"});
  CHECK(s.missing_token == ".");
  CHECK(s.ignore == std::vector<std::string>{"junk"});

  auto expect_bad = [](const char* text) {
    try {
      schema_from_kv(parse_kv_text(text, "t"));
      FAIL("expected bad_schema");
    } catch (const error& e) {
      CHECK(e.code() == "bad_schema");
    }
  };
  expect_bad("outcome = y\nx1 = a\nx2 = b\ntypo = z\n");       // unknown key
  expect_bad("outcome = y1 y2\nx1 = a\nx2 = b\n");             // two outcomes
  expect_bad("outcome = y\nx1 = a\nx2 =\n");                   // empty x2
}

TEST_CASE("csv parser handles quoting") {
  auto rows = detail::parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\r\n2,3\n", "t");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "x,1");
  CHECK(rows[1][1] == "say \"hi\"");
  CHECK(rows[2][0] == "2");
  // embedded newline inside quotes
  auto rows2 = detail::parse_csv("a\n\"line1\nline2\"\n", "t");
  REQUIRE(rows2.size() == 2);
  CHECK(rows2[1][0] == "line1\nline2");
}

TEST_CASE("csv parser error paths") {
  auto expect_bad_csv = [](const char* text) {
    try {
      detail::parse_csv(text, "f.csv");
      FAIL("expected bad_csv");
    } catch (const error& e) {
      CHECK(e.code() == "bad_csv");
      CHECK(std::string(e.what()).find("f.csv") != std::string::npos);
    }
  };
  expect_bad_csv("a,b\nx\"y,1\n");      // stray quote
  expect_bad_csv("a\n\"unclosed\n");    // unterminated
  expect_bad_csv("");                   // empty file
}

TEST_CASE("dataset_from_rows role and shape errors") {
  Schema s = schema_from_kv(parse_kv_text("outcome = y\nx1 = a\nx2 = b\nz = z\n", "t"));
  auto expect_code = [&](const std::string& text, const std::string& code) {
    try {
      dataset_from_rows(detail::parse_csv(text, "t"), s, "t");
      FAIL("expected " + code);
    } catch (const error& e) {
      CHECK(e.code() == code);
    }
  };
  expect_code("y,a,b,z,extra\n1,1,1,0,9\n", "bad_schema");      // unassigned column
  expect_code("y,a,b\n1,1,1\n", "bad_schema");                  // schema column not in header
  expect_code("y,a,a,b,z\n1,1,1,1,0\n", "bad_csv");             // duplicate column
  expect_code("y,a,b,z\n1,1,1\n", "bad_csv");                   // field count mismatch
  expect_code("y,a,b,z\nNA,1,1,0\n", "bad_outcome");            // outcome missing
  expect_code("y,a,b,z\n1,1,1,NA\n", "bad_record");             // z missing
  // record index appears in the message
  try {
    dataset_from_rows(detail::parse_csv("y,a,b,z\n1,1,1,0\nNA,1,1,0\n", "t"), s, "t");
    FAIL("expected bad_outcome");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("record 2") != std::string::npos);
  }
}

TEST_CASE("missing covariate cells produce patterns") {
  Schema s = schema_from_kv(parse_kv_text("outcome = y\nx1 = a1 a2\nx2 = b\n", "t"));
  Dataset ds = dataset_from_rows(
      detail::parse_csv("y,a1,a2,b\n1,NA,NA,0\n0,1,2,3\n1,1,2,NA\n", "t"), s, "t");
  CHECK(ds.pattern(0) == Pattern::x1_missing);
  CHECK(ds.pattern(1) == Pattern::complete);
  CHECK(ds.pattern(2) == Pattern::x2_missing);
  // custom missing token: "NA" becomes an ordinary (non-numeric, so rejected) level
  Schema s2 = schema_from_kv(parse_kv_text("outcome = y\nx1 = a\nx2 = b\nmissing = .\n", "t"));
  Dataset ds2 = dataset_from_rows(detail::parse_csv("y,a,b\n1,.,0\n0,1,1\n", "t"), s2, "t");
  CHECK(ds2.pattern(0) == Pattern::x1_missing);
}

TEST_CASE("write_csv round trip is byte stable") {
  RngStream rng(808);
  for (int rep = 0; rep < 10; ++rep) {
    RngStream sub = rng.substream(rep);
    oracle::TinyOpts opt;
    opt.w_cols = rep % 3;
    opt.z_cols = rep % 2;
    Dataset ds = oracle::tiny(sub, opt);
    Schema s;
    s.outcome = {"y"};
    s.x1 = {"x1"};
    s.x2 = {"x2"};
    if (opt.z_cols == 1) s.z = {"z"};
    if (opt.w_cols >= 1) s.w.push_back("w1");
    if (opt.w_cols >= 2) s.w.push_back("w2");
    std::ostringstream first;
    write_csv(first, ds, s);
    Dataset ds2 = dataset_from_rows(detail::parse_csv(first.str(), "t"), s, "t");
    std::ostringstream second;
    write_csv(second, ds2, s);
    CHECK(first.str() == second.str());
    CHECK(ds2.n() == ds.n());
    CHECK(ds2.pattern_counts() == ds.pattern_counts());
  }
}

TEST_CASE("read_file reports io errors") {
  try {
    read_file("/nonexistent/path/q.csv");
    FAIL("expected io error");
  } catch (const error& e) {
    CHECK(e.code() == "io");
  }
}
