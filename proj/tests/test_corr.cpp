#include "dvv_oracle.hpp"
#include "taut/corr.hpp"
#include "taut/parallel.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using taut::Rational;
using taut::point_correlator;

namespace {

std::vector<int> parse_exponents(const std::string& text) {
    std::vector<int> d;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');)
        if (item.find_first_not_of(' ') != std::string::npos) d.push_back(std::stoi(item));
    return d;
}

}  // namespace

TEST_SUITE("corr") {

TEST_CASE("examples") {
    CHECK(point_correlator(0, {0, 0, 0}) == Rational(1));
    CHECK(point_correlator(0, {1, 0, 0, 0}) == Rational(1));
    CHECK(point_correlator(1, {1}) == Rational(1, 24));
    CHECK(point_correlator(1, {0, 0}) == Rational(0));
    CHECK(point_correlator(2, {4}) == Rational(1, 1152));
    CHECK(point_correlator(3, {7}) == Rational(1, 82944));
    CHECK(point_correlator(2, {2, 3}) == Rational(29, 5760));
}

TEST_CASE("golden values from the naive recursion") {
    std::ifstream in(TAUT_TEST_DATA "/point_correlators.txt");
    REQUIRE(in);
    int count = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto a = line.find(';'), b = line.find(';', a + 1);
        const int g = std::stoi(line.substr(0, a));
        const auto d = parse_exponents(line.substr(a + 1, b - a - 1));
        const Rational expected = Rational::parse(line.substr(b + 2));
        INFO(line);
        CHECK(point_correlator(g, d) == expected);
        ++count;
    }
    CHECK(count > 100);
}

TEST_CASE("agrees with the naive recursion up to dimension 10") {
    oracle::Dvv dvv;
    int mismatches = 0, count = 0;
    oracle::for_each_key(10, [&](int g, const std::vector<int>& d) {
        ++count;
        if (point_correlator(g, d) != dvv(g, d)) ++mismatches;
    });
    CHECK(count > 400);
    CHECK(mismatches == 0);
}

TEST_CASE("string and dilaton equations up to dimension 12") {
    int checked = 0, bad = 0;
    oracle::for_each_key(12, [&](int g, const std::vector<int>& d) {
        if (d.empty()) return;
        if (d.front() == 0 && d.size() >= 2) {
            std::vector<int> rest(d.begin() + 1, d.end());
            if (2 * g - 2 + static_cast<int>(rest.size()) > 0) {
                Rational rhs;
                for (std::size_t j = 0; j < rest.size(); ++j) {
                    if (rest[j] == 0) continue;
                    auto r = rest;
                    --r[j];
                    rhs += point_correlator(g, r);
                }
                ++checked;
                if (point_correlator(g, d) != rhs) ++bad;
            }
        }
        const auto one = std::find(d.begin(), d.end(), 1);
        if (one != d.end()) {
            std::vector<int> rest = d;
            rest.erase(rest.begin() + (one - d.begin()));
            const int n = static_cast<int>(rest.size());
            if (2 * g - 2 + n > 0) {
                ++checked;
                if (point_correlator(g, d) != Rational(2 * g - 2 + n) * point_correlator(g, rest)) ++bad;
            }
        }
    });
    CHECK(checked > 1000);
    CHECK(bad == 0);
}

TEST_CASE("dimension vanishing and permutation invariance") {
    std::mt19937 rng(7);
    for (int g = 0; g <= 3; ++g)
        for (int n = 1; n <= 5; ++n) {
            std::vector<int> d(static_cast<std::size_t>(n));
            for (int trial = 0; trial < 20; ++trial) {
                for (auto& x : d) x = static_cast<int>(rng() % 6);
                int sum = 0;
                for (int x : d) sum += x;
                const Rational v = point_correlator(g, d);
                if (sum != 3 * g - 3 + n || 2 * g - 2 + n <= 0) CHECK(v.is_zero());
                auto p = d;
                std::shuffle(p.begin(), p.end(), rng);
                CHECK(point_correlator(g, p) == v);
            }
        }
    CHECK(point_correlator(0, {0, 0}) == Rational(0));
    CHECK(point_correlator(-1, {0, 0, 0}) == Rational(0));
}

TEST_CASE("integral of psi and kappa") {
    CHECK(taut::integral_psi_kappa(1, {0}, {1}) == Rational(1, 24));
    CHECK(taut::integral_psi_kappa(0, {0, 0, 0}, {}) == Rational(1));
    CHECK(taut::integral_psi_kappa(1, {1}, {}) == Rational(1, 24));
    CHECK(taut::integral_psi_kappa(1, {0}, {1}) == point_correlator(1, {0, 2}));
    CHECK(taut::integral_psi_kappa(2, {}, {1, 2}) == point_correlator(2, {2, 3}));
    CHECK(taut::integral_psi_kappa(1, {2}, {}) == Rational(0));
    CHECK_THROWS(taut::integral_psi_kappa(1, {0}, {0}));
    // kappa_1 kappa_2 = kappa_{1,2} - kappa_3 on M_{2,0}
    CHECK(taut::integral_psi_kappa_product(2, {}, {1, 2}) ==
          taut::integral_psi_kappa(2, {}, {1, 2}) - taut::integral_psi_kappa(2, {}, {3}));
}

TEST_CASE("concurrent queries agree") {
    oracle::Dvv dvv;
    std::vector<std::pair<int, std::vector<int>>> keys;
    oracle::for_each_key(13, [&](int g, const std::vector<int>& d) {
        if (g >= 3) keys.emplace_back(g, d);
    });
    std::vector<Rational> values(keys.size());
    taut::parallel_for(keys.size(), 8, [&](std::size_t i) { values[i] = point_correlator(keys[i].first, keys[i].second); });
    for (std::size_t i = 0; i < keys.size(); i += 7) CHECK(values[i] == dvv(keys[i].first, keys[i].second));
    CHECK(taut::correlator_cache_size() > 0);
}

}
