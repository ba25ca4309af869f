#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpminv/kernels.hpp"
#include "dpminv/rng.hpp"

using namespace dpminv;

namespace {

Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v = rng.gaussian_vec(n);
  for (double& x : v) x *= scale;
  return v;
}

}  // namespace

TEST_CASE("scalar kernel basics") {
  kern::set_backend(kern::Backend::Scalar);
  Vec x = {1.0, 2.0, 3.0};
  Vec y = {4.0, -1.0, 0.5};
  Vec out(3);
  kern::axpby(2.0, x.data(), -1.0, y.data(), out.data(), 3);
  CHECK(out[0] == doctest::Approx(-2.0));
  CHECK(out[1] == doctest::Approx(5.0));
  CHECK(out[2] == doctest::Approx(5.5));

  CHECK(kern::dot(x.data(), y.data(), 3) == doctest::Approx(4.0 - 2.0 + 1.5));
  CHECK(kern::sum_sq(x.data(), 3) == doctest::Approx(14.0));
  CHECK(kern::sq_dist(x.data(), y.data(), 3) == doctest::Approx(9.0 + 9.0 + 6.25));
  CHECK(kern::sq_dist_scaled(x.data(), y.data(), 2.0, 3) ==
        doctest::Approx(49.0 + 16.0 + 4.0));
  CHECK(kern::l1_dist(x.data(), y.data(), 3) == doctest::Approx(3.0 + 3.0 + 2.5));
  CHECK(kern::sum_abs(y.data(), 3) == doctest::Approx(5.5));

  Vec acc = {1.0, 1.0, 1.0};
  kern::axpy(3.0, x.data(), acc.data(), 3);
  CHECK(acc[0] == doctest::Approx(4.0));
  CHECK(acc[2] == doctest::Approx(10.0));
}

TEST_CASE("avx2 variant matches scalar reference") {
  if (!kern::avx2_supported()) {
    MESSAGE("AVX2 not available; dispatch stays on scalar");
    return;
  }
  Rng rng(99);
  // sizes straddling the vector width, including tails
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 15u, 64u, 257u, 1000u}) {
    Vec x = random_vec(rng, n, 2.0);
    Vec y = random_vec(rng, n, 0.5);

    kern::set_backend(kern::Backend::Scalar);
    Vec out_s(n), acc_s = y;
    kern::axpby(1.7, x.data(), -0.3, y.data(), out_s.data(), n);
    kern::axpy(0.77, x.data(), acc_s.data(), n);
    const double dot_s = kern::dot(x.data(), y.data(), n);
    const double ss_s = kern::sum_sq(x.data(), n);
    const double sd_s = kern::sq_dist(x.data(), y.data(), n);
    const double sds_s = kern::sq_dist_scaled(x.data(), y.data(), 1.3, n);
    const double l1_s = kern::l1_dist(x.data(), y.data(), n);
    const double sa_s = kern::sum_abs(x.data(), n);

    kern::set_backend(kern::Backend::Avx2);
    REQUIRE(kern::active_backend() == kern::Backend::Avx2);
    Vec out_v(n), acc_v = y;
    kern::axpby(1.7, x.data(), -0.3, y.data(), out_v.data(), n);
    kern::axpy(0.77, x.data(), acc_v.data(), n);

    // elementwise kernels: bitwise identical
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(out_v[i] == out_s[i]);
      CHECK(acc_v[i] == acc_s[i]);
    }
    // reductions: accumulation order differs, compare with tolerance
    const double tol = 1e-12 * static_cast<double>(n);
    CHECK(kern::dot(x.data(), y.data(), n) == doctest::Approx(dot_s).epsilon(tol));
    CHECK(kern::sum_sq(x.data(), n) == doctest::Approx(ss_s).epsilon(tol));
    CHECK(kern::sq_dist(x.data(), y.data(), n) == doctest::Approx(sd_s).epsilon(tol));
    CHECK(kern::sq_dist_scaled(x.data(), y.data(), 1.3, n) ==
          doctest::Approx(sds_s).epsilon(tol));
    CHECK(kern::l1_dist(x.data(), y.data(), n) == doctest::Approx(l1_s).epsilon(tol));
    CHECK(kern::sum_abs(x.data(), n) == doctest::Approx(sa_s).epsilon(tol));
  }
  kern::set_backend(kern::Backend::Avx2);
}

TEST_CASE("backend reporting") {
  kern::set_backend(kern::Backend::Scalar);
  CHECK(std::string(kern::backend_name()) == "scalar");
  if (kern::avx2_supported()) {
    kern::set_backend(kern::Backend::Avx2);
    CHECK(std::string(kern::backend_name()) == "avx2");
  }
}
