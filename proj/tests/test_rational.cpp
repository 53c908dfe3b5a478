#include "taut/linalg.hpp"
#include "taut/rational.hpp"

#include <doctest.h>

using taut::Rational;
using taut::RationalMatrix;

TEST_SUITE("rational") {

TEST_CASE("lowest terms and sign normalization") {
    CHECK(Rational(6, 8).str() == "3/4");
    CHECK(Rational(3, -6).str() == "-1/2");
    CHECK(Rational(0, 5).str() == "0");
    CHECK(Rational(4, 2).is_integer());
    CHECK(Rational(-3, 9).denominator() == 3);
    CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("parse round trip") {
    for (const char* s : {"0", "1", "-7", "1/24", "-29/5760", "-123456789012345678901234567891/2"})
        CHECK(Rational::parse(s).str() == s);
    CHECK(Rational::parse("2/4") == Rational(1, 2));
    CHECK_THROWS(Rational::parse("1/0"));
    CHECK_THROWS(Rational::parse("abc"));
    CHECK_THROWS(Rational::parse(""));
}

TEST_CASE("exact arithmetic") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 24) - Rational(1, 12) * Rational(1, 2) == Rational(0));
    CHECK(Rational(2, 3) / Rational(4, 9) == Rational(3, 2));
    CHECK(-Rational(5, 7) == Rational(-5, 7));
    CHECK_THROWS(Rational(1) / Rational(0));
    Rational sum;
    for (int i = 1; i <= 50; ++i) sum += Rational(1, i * (i + 1));
    CHECK(sum == Rational(50, 51));
    CHECK(taut::pow(Rational(2, 3), -2) == Rational(9, 4));
    CHECK(taut::factorial(10) == Rational(3628800));
    CHECK(taut::double_factorial_odd(0) == Rational(1));
    CHECK(taut::double_factorial_odd(4) == Rational(105));
    CHECK(taut::abs(Rational(-3, 2)) == Rational(3, 2));
}

TEST_CASE("Eigen matrices of rationals") {
    RationalMatrix a(2, 2);
    a << Rational(1), Rational(2), Rational(3), Rational(4);
    RationalMatrix b = a * a;
    CHECK(b(0, 0) == Rational(7));
    CHECK(b(1, 1) == Rational(22));
    CHECK(taut::matrix_rank(a) == 2);
    RationalMatrix c(2, 3);
    c << Rational(1), Rational(1, 2), Rational(1, 3), Rational(2), Rational(1), Rational(2, 3);
    CHECK(taut::matrix_rank(c) == 1);
    const auto null = taut::nullspace(c);
    REQUIRE(null.size() == 2);
    for (const auto& v : null) CHECK((c * v).isZero());
}

}
