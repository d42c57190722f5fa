#include <gtest/gtest.h>

#include <sstream>

#include "marginlab/config.hpp"
#include "marginlab/csv.hpp"

using namespace marginlab;

TEST(Config, ParseFlatKeyValue) {
  std::istringstream in(R"(# comment
[run]
seed = 7
trials = 100

[solver]
restarts=32
)");
  auto cfg = Config::parse(in);
  EXPECT_EQ(cfg.get("seed"), "7");
  EXPECT_EQ(cfg.get("trials"), "100");
  EXPECT_EQ(cfg.get("restarts"), "32");
}

TEST(Config, RejectsMalformedLines) {
  std::istringstream bad1("just words\n");
  EXPECT_THROW(Config::parse(bad1), std::invalid_argument);
  std::istringstream bad2("[unterminated\n");
  EXPECT_THROW(Config::parse(bad2), std::invalid_argument);
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(Config::parse(dup), std::invalid_argument);
}

TEST(Config, CanonicalTextSortedAndHashStable) {
  Config a;
  a.set("zeta", "1");
  a.set("alpha", "2");
  EXPECT_EQ(a.canonical_text(), "alpha=2\nzeta=1\n");
  Config b;
  b.set("alpha", "2");
  b.set("zeta", "1");
  EXPECT_EQ(config_hash(a), config_hash(b));  // order of insertion irrelevant
  b.set("alpha", "3");
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(1e-5), "1e-05");
  // round trip exactness
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
}
