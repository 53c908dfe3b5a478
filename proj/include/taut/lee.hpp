#ifndef TAUT_LEE_HPP
#define TAUT_LEE_HPP

#include "taut/eval.hpp"
#include "taut/tau.hpp"

#include <optional>
#include <string>
#include <vector>

namespace taut {

// One step of a recursion path: apply tau_k to `factor` and keep `component`.
// Step number s uses the labels alpha_s, beta_s.
struct PathStep {
    int factor = 0;
    int k = 1;
    BoundaryComponentId component;

    std::string str() const;
    auto operator<=>(const PathStep&) const = default;
};

struct GorensteinTest {
    std::vector<PathStep> path;
    PsiKappaMonomial monomial;

    std::string id() const;
};

struct Witness {
    GorensteinTest test;
    Rational value;
};

enum class VerdictStatus { gorenstein_vanishing, fails };

struct Verdict {
    VerdictStatus status = VerdictStatus::gorenstein_vanishing;
    std::optional<Witness> witness;

    bool vanishing() const { return status == VerdictStatus::gorenstein_vanishing; }
};

// Decides whether [L] pairs to zero with every tautological class of
// complementary degree. This is membership in the relations produced by the
// recursive algorithm; it equals cohomological vanishing exactly when the
// Gorenstein property holds for the moduli spaces involved.
Verdict check(const GraphSum& L);
// Same recursion, descending through tau_k for every k in `ks` (ks = {1} is check).
Verdict check_with_tau(const GraphSum& L, const std::vector<int>& ks);

// Runs the path on L and pairs the result with the test monomial.
Rational evaluate_test(const GraphSum& L, const GorensteinTest& test);

struct ConstraintMatrix {
    std::vector<GorensteinTest> rows;
    std::vector<CanonicalGraph> columns;
    RationalMatrix entries;

    std::string csv() const;
};

struct RelationOptions {
    int jobs = 1;
    // Include the pairing tests on the top space (drop them to get the recursion-only tests).
    bool top_monomials = true;
    // Run check on every returned relation.
    bool verify = true;
};

// Independent subset of the tests of check, evaluated on all generators of
// the given degree. Markings of `factor` must be 1..n.
ConstraintMatrix constraint_matrix(const Factor& factor, int degree, const RelationOptions& options = {});

std::vector<GraphSum> relations_from(const ConstraintMatrix& m, const Factor& factor);
std::vector<GraphSum> find_relations(const Factor& factor, int degree, const RelationOptions& options = {});

struct RankReport {
    std::size_t generators = 0;
    std::size_t rank = 0;
    std::size_t nullity = 0;
};

RankReport gorenstein_rank(const Factor& factor, int degree, const RelationOptions& options = {});

}  // namespace taut

#endif
