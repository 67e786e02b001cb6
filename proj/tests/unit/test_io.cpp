#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "idm/errors.hpp"
#include "idm/io.hpp"

TEST_SUITE("io") {

TEST_CASE("points CSV round-trips every double exactly") {
  const auto dir = testing::scratch_dir("io_roundtrip");
  idm::PointMatrix x = testing::gaussian_points(17, 5, 4);
  x(0, 0) = 1e-300;
  x(1, 1) = -0.1;
  x(2, 2) = 1.0 / 3.0;
  idm::write_points_csv(dir / "p.csv", x);
  const idm::PointMatrix y = idm::read_points_csv(dir / "p.csv");
  REQUIRE(y.rows() == 17);
  REQUIRE(y.cols() == 5);
  CHECK(y == x);

  std::ifstream in(dir / "p.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0,x1,x2,x3,x4");
}

TEST_CASE("ragged CSV is refused") {
  const auto dir = testing::scratch_dir("io_ragged");
  std::ofstream(dir / "bad.csv") << "x0,x1\n1,2\n3\n";
  CHECK_THROWS_AS(idm::read_points_csv(dir / "bad.csv"), idm::ConfigurationError);
}

TEST_CASE("json helpers") {
  const auto dir = testing::scratch_dir("io_json");
  idm::write_json(dir / "a.json", {{"k", 3}, {"v", {1, 2}}});
  const auto j = idm::read_json(dir / "a.json");
  CHECK(j.at("k").get<int>() == 3);
  CHECK(idm::sidecar_path(dir / "data.csv") == dir / "data.json");
}

}
