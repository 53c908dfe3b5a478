#ifndef TAUT_TESTS_DVV_ORACLE_HPP
#define TAUT_TESTS_DVV_ORACLE_HPP

#include "taut/rational.hpp"

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

// Plain DVV recursion on the largest exponent, no string/dilaton shortcuts.
namespace oracle {

using taut::Rational;

inline Rational odd_double_factorial(int n) {  // (2n+1)!!
    Rational r(1);
    for (int i = 1; i <= 2 * n + 1; i += 2) r *= Rational(i);
    return r;
}

class Dvv {
public:
    Rational operator()(int g, std::vector<int> d) {
        if (g < 0) return Rational(0);
        for (int x : d)
            if (x < 0) return Rational(0);
        const int n = static_cast<int>(d.size());
        if (2 * g - 2 + n <= 0) return Rational(0);
        int sum = 0;
        for (int x : d) sum += x;
        if (sum != 3 * g - 3 + n) return Rational(0);
        std::sort(d.begin(), d.end());
        auto key = std::make_pair(g, d);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        Rational v;
        if (g == 0 && n == 3) {
            v = Rational(1);
        } else if (g == 1 && n == 1) {
            v = Rational(1, 24);
        } else {
            v = step(g, d);
        }
        memo_.emplace(key, v);
        return v;
    }

private:
    // (2k+3)!! <tau_{k+1} S> = sum_j (2k+2d_j+1)!!/(2d_j-1)!! <tau_{k+d_j} S-j>
    //   + 1/2 sum_{r+s=k-1} (2r+1)!!(2s+1)!! (<tau_r tau_s S>_{g-1} + sum <tau_r I>_{g1} <tau_s J>_{g2})
    Rational step(int g, std::vector<int> d) {
        const int top = d.back();
        d.pop_back();
        const int k = top - 1;
        const int n = static_cast<int>(d.size());
        Rational total;
        for (int j = 0; j < n; ++j) {
            std::vector<int> rest = d;
            const int dj = rest[static_cast<std::size_t>(j)];
            rest.erase(rest.begin() + j);
            rest.push_back(k + dj);
            const Rational c = odd_double_factorial(k + dj) / (dj == 0 ? Rational(1) : odd_double_factorial(dj - 1));
            total += c * (*this)(g, rest);
        }
        for (int r = 0; r <= k - 1; ++r) {
            const int s = k - 1 - r;
            const Rational c = odd_double_factorial(r) * odd_double_factorial(s) / Rational(2);
            std::vector<int> both = d;
            both.push_back(r);
            both.push_back(s);
            total += c * (*this)(g - 1, both);
            for (int g1 = 0; g1 <= g; ++g1)
                for (int mask = 0; mask < (1 << n); ++mask) {
                    std::vector<int> I{r}, J{s};
                    for (int i = 0; i < n; ++i) ((mask >> i) & 1 ? I : J).push_back(d[static_cast<std::size_t>(i)]);
                    const Rational a = (*this)(g1, I);
                    if (!a.is_zero()) total += c * a * (*this)(g - g1, J);
                }
        }
        return total / odd_double_factorial(k + 1);
    }

    std::map<std::pair<int, std::vector<int>>, Rational> memo_;
};

// Calls fn(g, d) for every sorted exponent list with sum d = 3g-3+n, stable, 3g-3+n <= max_dim.
template <class Fn>
void for_each_key(int max_dim, Fn&& fn) {
    for (int g = 0; 3 * g - 3 <= max_dim; ++g)
        for (int n = 0; 3 * g - 3 + n <= max_dim; ++n) {
            if (2 * g - 2 + n <= 0) continue;
            const int dim = 3 * g - 3 + n;
            if (dim < 0) continue;
            std::vector<int> cur;
            auto rec = [&](auto&& self, int left, int slots, int lo) -> void {
                if (slots == 0) {
                    if (left == 0) fn(g, cur);
                    return;
                }
                for (int x = lo; x <= left; ++x) {
                    cur.push_back(x);
                    self(self, left - x, slots - 1, x);
                    cur.pop_back();
                }
            };
            rec(rec, dim, n, 0);
        }
}

}  // namespace oracle

#endif
