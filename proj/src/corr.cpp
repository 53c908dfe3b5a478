#include "taut/corr.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>

namespace taut {

CorrelatorKey::CorrelatorKey(int g, std::vector<int> d) : genus(g), exponents(std::move(d)) {
    std::sort(exponents.begin(), exponents.end());
}

int CorrelatorKey::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

std::string CorrelatorKey::str() const {
    std::ostringstream os;
    os << "<";
    for (std::size_t i = 0; i < exponents.size(); ++i) os << (i ? " " : "") << "tau_" << exponents[i];
    os << ">_" << genus;
    return os.str();
}

namespace {

class CorrelatorCache {
public:
    bool find(const CorrelatorKey& key, Rational& out) const {
        std::shared_lock lock(mutex_);
        auto it = table_.find(key);
        if (it == table_.end()) return false;
        out = it->second;
        return true;
    }
    void store(const CorrelatorKey& key, const Rational& value) {
        std::unique_lock lock(mutex_);
        table_.emplace(key, value);
    }
    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return table_.size();
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<CorrelatorKey, Rational> table_;
};

CorrelatorCache& cache() {
    static CorrelatorCache c;
    return c;
}

// m!! for odd m >= -1.
Rational odd_df(int m) {
    mpz_class z = 1;
    for (int k = m; k > 1; k -= 2) z *= k;
    return Rational(z);
}

Rational compute(const CorrelatorKey& key);

Rational lookup(int genus, std::vector<int> exponents) {
    return point_correlator(CorrelatorKey(genus, std::move(exponents)));
}

std::vector<int> without(const std::vector<int>& v, std::size_t idx) {
    std::vector<int> out;
    out.reserve(v.size() - 1);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i != idx) out.push_back(v[i]);
    return out;
}

Rational compute(const CorrelatorKey& key) {
    const int g = key.genus;
    const auto& d = key.exponents;
    const int n = key.size();

    if (g == 0 && n == 3) return Rational(1);  // dimension already checked: all zero
    if (g == 1 && n == 1) return Rational(1, 24);

    // String equation.
    if (d.front() == 0) {
        auto rest = without(d, 0);
        Rational sum;
        for (std::size_t j = 0; j < rest.size(); ++j) {
            if (rest[j] == 0) continue;
            auto r = rest;
            --r[j];
            sum += lookup(g, r);
        }
        return sum;
    }
    // Dilaton equation.
    if (d.front() == 1) {
        auto rest = without(d, 0);
        return Rational(2 * g - 2 + n - 1) * lookup(g, rest);
    }

    // DVV on the largest insertion tau_{k+1}.
    const int k = d.back() - 1;
    const std::vector<int> rest = without(d, d.size() - 1);
    const int m = static_cast<int>(rest.size());

    Rational total;
    for (int j = 0; j < m; ++j) {
        auto r = rest;
        r[j] += k;
        total += odd_df(2 * k + 2 * rest[j] + 1) / odd_df(2 * rest[j] - 1) * lookup(g, r);
    }

    Rational half(1, 2);
    for (int a = 0; a <= k - 1; ++a) {
        const int b = k - 1 - a;
        const Rational w = half * odd_df(2 * a + 1) * odd_df(2 * b + 1);
        if (g >= 1) {
            auto r = rest;
            r.push_back(a);
            r.push_back(b);
            total += w * lookup(g - 1, r);
        }
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            std::vector<int> left{a}, right{b};
            int left_sum = a;
            for (int j = 0; j < m; ++j) {
                if (mask & (1u << j)) {
                    left.push_back(rest[j]);
                    left_sum += rest[j];
                } else {
                    right.push_back(rest[j]);
                }
            }
            // genus of left side fixed by dimension
            const int num = left_sum + 3 - static_cast<int>(left.size());
            if (num < 0 || num % 3 != 0) continue;
            const int g1 = num / 3;
            if (g1 > g) continue;
            const Rational lv = lookup(g1, left);
            if (lv.is_zero()) continue;
            total += w * lv * lookup(g - g1, right);
        }
    }
    return total / odd_df(2 * k + 3);
}

}  // namespace

Rational point_correlator(const CorrelatorKey& key) {
    if (key.genus < 0 || !key.stable()) return Rational(0);
    for (int e : key.exponents)
        if (e < 0) return Rational(0);
    if (key.degree() != key.dimension()) return Rational(0);
    Rational value;
    if (cache().find(key, value)) return value;
    value = compute(key);
    cache().store(key, value);
    return value;
}

Rational point_correlator(int genus, std::vector<int> exponents) {
    return point_correlator(CorrelatorKey(genus, std::move(exponents)));
}

Rational integral_psi_kappa(int genus, const std::vector<int>& psi, const std::vector<int>& kappa) {
    if (2 * genus - 2 + static_cast<int>(psi.size()) <= 0)
        throw std::invalid_argument("integral_psi_kappa: unstable (g, n)");
    std::vector<int> ex = psi;
    for (int k : kappa) {
        if (k <= 0) throw std::invalid_argument("integral_psi_kappa: kappa index must be positive");
        ex.push_back(k + 1);
    }
    return point_correlator(genus, std::move(ex));
}

Rational integral_psi_kappa_product(int genus, const std::vector<int>& psi,
                                   const std::vector<int>& kappa_factors) {
    if (kappa_factors.empty()) return point_correlator(genus, psi);
    for (int k : kappa_factors)
        if (k <= 0) throw std::invalid_argument("integral_psi_kappa_product: kappa index must be positive");
    // kappa_{k_m} = pi_*(psi_x^{k_m+1}); the remaining kappas pull back as kappa - psi_x^k.
    std::vector<int> head(kappa_factors.begin(), kappa_factors.end() - 1);
    const int last = kappa_factors.back();
    const int m = static_cast<int>(head.size());
    Rational total;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        int shift = 0;
        std::vector<int> keep;
        int sign = 1;
        for (int i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                shift += head[i];
                sign = -sign;
            } else {
                keep.push_back(head[i]);
            }
        }
        auto up = psi;
        up.push_back(last + 1 + shift);
        total += Rational(sign) * integral_psi_kappa_product(genus, up, keep);
    }
    return total;
}

std::size_t correlator_cache_size() { return cache().size(); }

}  // namespace taut
