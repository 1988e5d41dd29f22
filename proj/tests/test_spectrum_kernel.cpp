#include <filesystem>
#include <fstream>

#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "coagtree/error.hpp"
#include "coagtree/kernel.hpp"
#include "coagtree/spectrum.hpp"

using namespace coagtree;

TEST_CASE("spectrum basics") {
  const MassSpectrum mu({{2.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}});
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0].mass == 1.0);
  CHECK(mu.weight_of(2.0) == 0.5);
  CHECK(mu.moment(1) == doctest::Approx(1.5));
  const auto counts = mu.sample_counts(5);
  CHECK(counts.size() == 5);
  CHECK(std::count(counts.begin(), counts.end(), 1.0) + std::count(counts.begin(), counts.end(), 2.0) == 5);
  const std::vector<double> xs{1.0, 1.0, 3.0, 1.0};
  const auto emp = MassSpectrum::empirical(xs);
  CHECK(emp.weight_of(1.0) == 0.75);
  CHECK(emp.weight_of(3.0) == 0.25);
}

TEST_CASE("spectrum csv round trip") {
  const auto p = std::filesystem::temp_directory_path() / "coagtree_spectrum_test.csv";
  const MassSpectrum mu({{1.0, 0.1}, {2.5, 0.9}});
  save_spectrum_csv(mu, p);
  const auto back = load_spectrum_csv(p);
  REQUIRE(back.size() == 2);
  CHECK(back.atoms()[1].mass == 2.5);
  CHECK(back.weight_of(1.0) == 0.1);
  std::ofstream(p) << "mass,weight\n1.0,-2\n";
  CHECK_THROWS_AS(load_spectrum_csv(p), ConfigError);
  std::filesystem::remove(p);
}

TEST_CASE("builtin kernels") {
  CHECK(builtin_kernel("constant")(3.0, 4.0) == 1.0);
  CHECK(builtin_kernel("product")(3.0, 4.0) == 12.0);
  CHECK(builtin_kernel("additive")(3.0, 4.0) == 7.0);
  CHECK(builtin_kernel("inverse-sum")(1.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(builtin_kernel("nope"), ConfigError);
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = builtin_kernel(name);
    CAPTURE(name);
    REQUIRE(k.has_phi());
    const double b = k.ktilde_bound().value();
    for (double x : {0.5, 1.0, 7.0}) {
      for (double y : {1.0, 3.0, 100.0}) {
        CHECK(k(x, y) == k(y, x));
        CHECK(k(x, y) <= b * k.phi(x) * k.phi(y) * (1 + 1e-12));
      }
    }
    CHECK(check_assumptions(k, MassSpectrum::monodisperse()).ok);
  }
}

TEST_CASE("tabulated kernel from a grid file") {
  const auto p = std::filesystem::temp_directory_path() / "coagtree_kernel_test.csv";
  std::ofstream(p) << "x\\y,1,2\n1,1.0,2.0\n2,2.0,4.0\n";
  const Kernel k = load_kernel_grid(p);
  CHECK(k(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(k(1.5, 1.0) == doctest::Approx(1.5));
  CHECK(k(1.5, 1.5) == doctest::Approx(2.25));
  CHECK(k(10.0, 10.0) == doctest::Approx(4.0));  // clamped
  CHECK(k.ktilde_bound().value() == doctest::Approx(4.0));
  std::ofstream(p) << "x\\y,1,2\n1,1.0,0.0\n2,2.0,4.0\n";
  CHECK_THROWS_AS(load_kernel_grid(p), ConfigError);
  std::filesystem::remove(p);
}
