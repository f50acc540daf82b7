#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subgeo/config.hpp"
#include "subgeo/error.hpp"
#include "subgeo/io.hpp"

using namespace subgeo;
using nlohmann::json;

namespace {

std::string field_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, RoundTripsEveryDefault) {
  for (auto k : {ExperimentKind::RateTables, ExperimentKind::Table1Check, ExperimentKind::SrwmFull,
                 ExperimentKind::ArFull, ExperimentKind::PcnFull, ExperimentKind::TailCheck}) {
    const json j = to_json(default_config(k));
    EXPECT_EQ(to_json(parse_config(j)), j);
  }
}

TEST(Config, RejectsUnknownKeysAndBadRanges) {
  json j = to_json(default_config(ExperimentKind::RateTables));
  json bad = j;
  bad["rate"]["kapa"] = 0.5;
  EXPECT_EQ(field_of(bad), "rate.kapa");
  bad = j;
  bad["rate"]["family"] = "Polynomial";
  bad["rate"]["kappa"] = 1.5;
  EXPECT_EQ(field_of(bad), "rate.kappa");
  bad = j;
  bad["version"] = 99;
  EXPECT_EQ(field_of(bad), "version");
  bad = j;
  bad["experiment"] = "Nope";
  EXPECT_EQ(field_of(bad), "experiment");
}

TEST(Io, FloatsAreRoundTrippable) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3)), 1.0 / 3);
  EXPECT_EQ(tagged(INFINITY, Provenance::Exact)["value"], "inf");
  EXPECT_EQ(tagged(0.5, Provenance::McCi)["provenance"], "mc_ci");
}

TEST(Io, CsvHeaderAndRows) {
  const auto dir = std::filesystem::temp_directory_path() / "subgeo_io_test";
  const auto path = output_path((dir / "x").string(), "t.csv");
  {
    CsvWriter w(path, {"n", "v", "s"});
    w.row({3L, 0.25, std::string("ok")});
  }
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  EXPECT_EQ(ss.str(), "n,v,s\n3,0.25,ok\n");
  std::filesystem::remove_all(dir);
}
