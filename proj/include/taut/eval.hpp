#ifndef TAUT_EVAL_HPP
#define TAUT_EVAL_HPP

#include "taut/graph_sum.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace taut {

// psi-kappa monomial on one factor. kappa is a multi-index class kappa_{k_1..k_m}.
struct PsiKappaFactor {
    std::map<Marking, int> psi;
    std::vector<int> kappa;  // sorted, entries >= 1

    int degree() const;
    std::string str() const;
    auto operator<=>(const PsiKappaFactor&) const = default;
};

struct PsiKappaMonomial {
    std::vector<PsiKappaFactor> factors;

    int degree() const;
    // Factors joined by " | "; a factor is "1" or items like psi[1]^2*kappa[1,2].
    std::string str() const;
    static PsiKappaMonomial parse(std::string_view text);
    auto operator<=>(const PsiKappaMonomial&) const = default;
};

// All monomials of the given total degree on the ambient, in a fixed order.
std::vector<PsiKappaMonomial> monomials_of_degree(const AmbientSpace& ambient, int degree);
std::vector<PsiKappaMonomial> monomials_of_degree(const Factor& factor, int degree);

struct AddedPoint {
    int factor = 0;
    int psi = 0;
};

struct InducedEntrySpec {
    std::map<Marking, int> increments;  // extra psi powers on original markings
    std::vector<AddedPoint> added;
};

// Product of point correlators over vertices (rank one); requires no kappa.
Rational correlator_polynomial_value(const DualGraph& g);
Rational correlator_polynomial_value(const std::vector<DualGraph>& factors);

// Replaces kappa_{k_1..k_m} at a vertex by tails with psi^{k_j+1}, labelled
// by fresh markings above the largest existing one.
DualGraph eliminate_kappa(const DualGraph& g);

// Integral over M_{g, N + A} of p^*(prod psi_i^{a_i} * kappa) * prod psi_i^{b_i} * prod psi_x^{e_x},
// p forgetting the A added points. kappa is a product of single-index kappas.
struct VertexPoint {
    int ancestor = 0;    // pulled back from the base
    int descendant = 0;  // on the total space
    auto operator<=>(const VertexPoint&) const = default;
};
Rational vertex_integral(int genus, const std::vector<VertexPoint>& points, const std::vector<int>& kappa_singles,
                         const std::vector<int>& added);

// <p^*(L) prod psi^{d}> for the point theory.
Rational induced_entry(const GraphSum& L, const InducedEntrySpec& spec);

// Intersection number of [L] with the monomial class M (complementary degree).
Rational pair(const GraphSum& L, const PsiKappaMonomial& M);

}  // namespace taut

#endif
