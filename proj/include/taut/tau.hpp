#ifndef TAUT_TAU_HPP
#define TAUT_TAU_HPP

#include "taut/eval.hpp"
#include "taut/graph_sum.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace taut {

enum class ComponentKind { nonseparating, separating };

// A connected component of the node-covering space of one factor. For a
// separating component factors[0] carries alpha and factors[1] carries beta.
struct BoundaryComponentId {
    ComponentKind kind = ComponentKind::nonseparating;
    std::vector<Factor> factors;

    std::string str() const;
    static BoundaryComponentId parse(std::string_view text);
    auto operator<=>(const BoundaryComponentId&) const = default;
};

// Components of the boundary covering of `factor`, new labels alpha_depth / beta_depth.
std::vector<BoundaryComponentId> boundary_components(const Factor& factor, int depth = 0);

// Polynomial in psi_alpha, psi_beta with integer coefficients: (i, j) -> coefficient.
struct RhoPolynomial {
    std::map<std::pair<int, int>, long> coefficients;

    RhoPolynomial times_sum() const;  // multiplied by (psi_alpha + psi_beta)
    std::string str() const;
    bool operator==(const RhoPolynomial&) const = default;
};

RhoPolynomial rho(int k);

using TauResult = std::map<BoundaryComponentId, GraphSum>;

TauResult tau(int k, const GraphSum& L, int depth = 0);
TauResult tau_on_factor(int k, const GraphSum& L, int factor, int depth = 0);

// rho(k) * M with psi_alpha, psi_beta placed on the factors carrying alpha_depth / beta_depth.
std::vector<std::pair<Rational, PsiKappaMonomial>> multiply_rho(const RhoPolynomial& r, const PsiKappaMonomial& M,
                                                                const AmbientSpace& ambient, int depth);

}  // namespace taut

#endif
