#ifndef TAUT_CORR_HPP
#define TAUT_CORR_HPP

#include "taut/rational.hpp"

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace taut {

// <tau_{d_1} ... tau_{d_n}>_g, exponents kept sorted.
struct CorrelatorKey {
    int genus = 0;
    std::vector<int> exponents;

    CorrelatorKey() = default;
    CorrelatorKey(int g, std::vector<int> d);

    int size() const { return static_cast<int>(exponents.size()); }
    bool stable() const { return 2 * genus - 2 + size() > 0; }
    int dimension() const { return 3 * genus - 3 + size(); }
    int degree() const;
    std::string str() const;

    auto operator<=>(const CorrelatorKey&) const = default;
};

Rational point_correlator(const CorrelatorKey& key);
Rational point_correlator(int genus, std::vector<int> exponents);

// Integral of psi^psi * kappa_{k_1..k_m} (multi-index kappa) over M_{g,n}.
Rational integral_psi_kappa(int genus, const std::vector<int>& psi, const std::vector<int>& kappa);

// Integral of psi^psi * kappa_{k_1} ... kappa_{k_m} (product of single-index kappas).
Rational integral_psi_kappa_product(int genus, const std::vector<int>& psi,
                                   const std::vector<int>& kappa_factors);

std::size_t correlator_cache_size();

}  // namespace taut

#endif
