#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluctsel/core/error.hpp"
#include "fluctsel/io/io.hpp"
#include "helpers.hpp"

using namespace fluctsel;

namespace {

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    read_broods_csv(in);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    return e.what();
  }
  return "";
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "fluctsel_unit" / name;
  std::filesystem::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("brood CSV round trip is exact") {
  const Dataset d = testing::small_data(21, 6, 15.0);
  std::ostringstream out;
  write_broods_csv(out, d);
  std::istringstream in(out.str());
  const auto back = read_broods_csv(in);
  CHECK(back == d.to_broods());
  const auto path = scratch("broods.csv");
  write_broods_csv(path, d);
  const Dataset e = read_dataset_csv(path);
  CHECK(e.to_broods() == d.to_broods());
}

TEST_CASE("columns are found by name and extras ignored") {
  std::istringstream in("id,n_fledglings,note,laying_date,year\n1,3,x,12.5,2001\n2,0,y,-4,2001\n");
  const auto b = read_broods_csv(in);
  REQUIRE(b.size() == 2u);
  CHECK(b[0].year == 2001);
  CHECK(b[0].laying_date == 12.5);
  CHECK(b[0].n_fledglings == 3);
  CHECK(b[1].n_fledglings == 0);
}

TEST_CASE("bad rows name their line") {
  CHECK(parse_error("year,laying_date,n_fledglings\n1,2,3\n1,2,-1\n").find("line 3") != std::string::npos);
  CHECK(parse_error("year,laying_date,n_fledglings\n1,abc,3\n").find("line 2") != std::string::npos);
  CHECK(parse_error("year,laying_date,n_fledglings\n1,2\n").find("line 2") != std::string::npos);
  CHECK(parse_error("year,laying_date,n_fledglings\n1,nan,2\n").find("line 2") != std::string::npos);
  CHECK(parse_error("year,date,n\n1,2,3\n").find("line 1") != std::string::npos);
  CHECK(parse_error("year,laying_date,n_fledglings\n1,2,2.5\n").find("line 2") != std::string::npos);
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(12.0) == "12");
  const double v = 1.0 / 3.0;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("ini reader flattens sections") {
  std::istringstream in("[run]\nseed = 5\n; comment\n[design]\ntmax = 25\n");
  const IniMap m = read_ini(in, "test.ini");
  CHECK(m.at("run.seed") == "5");
  CHECK(m.at("design.tmax") == "25");
  std::istringstream bad("[run\nseed=1\n");
  CHECK_THROWS_AS(read_ini(bad, "bad.ini"), Error);
}

TEST_CASE("latent export and text writers create directories") {
  const SimResult r = simulate_dataset(SimDesign{.tmax = 3, .mean_n = 5});
  const auto path = scratch("nested/dir/latents.csv");
  std::filesystem::remove_all(path.parent_path());
  write_latents_csv(path, r.data, r.latents);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "year,alpha,theta,omega");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
  CHECK(build_info().contains("eigen"));
}

}
