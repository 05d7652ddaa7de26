#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hagprop/multiindex.hpp"

using namespace hagprop;

TEST_CASE("graded-lex enumeration d=2 J=1") {
  MultiIndexTable t(2, 1);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == MultiIndex{0, 0});
  CHECK(t[1] == MultiIndex{1, 0});
  CHECK(t[2] == MultiIndex{0, 1});
}

TEST_CASE("table size is binomial(J+d, d)") {
  CHECK(MultiIndexTable(3, 2).size() == 10);  // binomial(5,3)
  CHECK(MultiIndexTable(1, 5).size() == 6);
  CHECK(MultiIndexTable(4, 6).size() == binomial(10, 4));
}

TEST_CASE("1-d grading is 0..J") {
  MultiIndexTable t(1, 5);
  for (int j = 0; j <= 5; ++j) CHECK(t[j] == MultiIndex{j});
}

TEST_CASE("offset examples") {
  CHECK(MultiIndexTable(2, 1).offset({0, 1}) == 2);
  CHECK(MultiIndexTable(1, 5).offset({3}) == 3);
  // derived by enumerate-and-search: d=2 J=2 order is
  // (0,0),(1,0),(0,1),(2,0),(1,1),(0,2)
  CHECK(MultiIndexTable(2, 2).offset({1, 1}) == 4);
}

TEST_CASE("offset round trip and grade counts") {
  for (int d : {1, 2, 3}) {
    MultiIndexTable t(d, 6);
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(t.offset(t[k]) == k);
    for (int L = 0; L <= 6; ++L) CHECK(t.grade_count(L) == binomial(L + d - 1, d - 1));
  }
}

TEST_CASE("out-of-range index is a domain error") {
  MultiIndexTable t(2, 3);
  CHECK_THROWS_AS(t.offset({4, 0}), std::domain_error);
  CHECK_THROWS_AS(MultiIndexTable(0, 3), std::invalid_argument);
}

TEST_CASE("prefix property: degrees <= n occupy the first count_upto(n) slots") {
  MultiIndexTable t(3, 5);
  for (int n = 0; n <= 5; ++n) {
    std::size_t c = t.count_upto(n);
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (k < c) CHECK(degree(t[k]) <= n);
      else CHECK(degree(t[k]) > n);
    }
  }
}

TEST_CASE("factorials: exact and log-space agree") {
  MultiIndex j{4, 3, 2};
  CHECK(factorial_exact(j) == 24ull * 6ull * 2ull);
  CHECK(std::abs(log_factorial(j) - std::log(288.0)) < 1e-12);
  MultiIndex big{40, 24};  // |j| = 64: log-space only
  CHECK_THROWS_AS(factorial_exact(big), std::domain_error);
  CHECK(log_factorial(big) == doctest::Approx(std::lgamma(41.0) + std::lgamma(25.0)));
}
