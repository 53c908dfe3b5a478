#ifndef TAUT_GRAPH_HPP
#define TAUT_GRAPH_HPP

#include "taut/rational.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace taut {

// Ordinary markings are positive integers. Negative values are the reserved
// recursion labels: alpha_j = -(2j+1), beta_j = -(2j+2).
using Marking = int;

constexpr Marking alpha_label(int depth) { return -(2 * depth + 1); }
constexpr Marking beta_label(int depth) { return -(2 * depth + 2); }
constexpr bool is_reserved(Marking m) { return m < 0; }

std::string marking_name(Marking m);
Marking parse_marking(std::string_view text);

class GraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Vertex {
    int genus = 0;
    std::vector<int> kappa;  // multi-index, sorted ascending, entries >= 1
};

struct HalfEdge {
    int vertex = 0;
    int psi = 0;
};

struct Edge {
    int first = 0;   // half-edge label
    int second = 0;  // half-edge label
};

struct Tail {
    int vertex = 0;
    Marking marking = 0;
    int psi = 0;
};

struct DualGraph {
    std::vector<Vertex> vertices;
    std::vector<HalfEdge> half_edges;
    std::vector<Edge> edges;
    std::vector<Tail> tails;

    static DualGraph smooth(int genus, const std::vector<Marking>& markings);

    int genus() const;
    int degree() const;
    int edge_count() const { return static_cast<int>(edges.size()); }
    int valence(int v) const;
    // Degree of the psi/kappa decorations sitting at vertex v.
    int decoration_degree(int v) const;
    std::vector<Marking> markings() const;
    bool connected() const;
    bool has_kappa() const;
    // Some vertex carries decorations of degree above its own dimension.
    bool vanishes_by_degree() const;
    int add_vertex(int genus, std::vector<int> kappa = {});
    int add_edge(int v, int psi_v, int w, int psi_w);

    // Throws GraphError naming the offending vertex / edge.
    void validate() const;
};

struct CanonicalGraph {
    DualGraph graph;
    std::string key;
    std::uint64_t automorphisms = 1;
};

CanonicalGraph canonicalize(const DualGraph& g);

// Serializes g as stored (no relabeling).
std::string serialize(const DualGraph& g);
DualGraph parse_graph(std::string_view text);

struct Factor {
    int genus = 0;
    std::vector<Marking> markings;  // sorted

    Factor() = default;
    Factor(int g, std::vector<Marking> m);

    int size() const { return static_cast<int>(markings.size()); }
    int dimension() const { return 3 * genus - 3 + size(); }
    bool stable() const { return 2 * genus - 2 + size() > 0; }
    std::string str() const;

    auto operator<=>(const Factor&) const = default;
};

struct AmbientSpace {
    std::vector<Factor> factors;

    AmbientSpace() = default;
    explicit AmbientSpace(std::vector<Factor> f);
    static AmbientSpace single(int genus, int n);

    int dimension() const;
    std::string str() const;

    auto operator<=>(const AmbientSpace&) const = default;
};

std::vector<Marking> standard_markings(int n);

// Isomorphism classes of stable graphs of the given degree on M_{g,S}.
std::vector<CanonicalGraph> enumerate_graphs(const Factor& factor, int degree);
// All undecorated stable graphs with at most max_edges edges.
std::vector<CanonicalGraph> enumerate_stable_shapes(const Factor& factor, int max_edges);

// kappa_K = sum over permutations of prod over cycles of kappa_{k(c)}.
// Keys are sorted multisets of single kappa indices.
using KappaPolynomial = std::map<std::vector<int>, Rational>;
KappaPolynomial kappa_multi_to_monomials(const std::vector<int>& K);
// Inverse change of basis: product of single kappas as a combination of multi-index kappas.
KappaPolynomial kappa_monomial_to_multi(const std::vector<int>& singles);

enum class PullbackKind { forgetful, separating, nonseparating };

struct KappaPullbackTerm {
    Rational coefficient;
    std::vector<int> left;
    std::vector<int> right;  // separating only
    int psi_new = 0;         // forgetful only
};

std::vector<KappaPullbackTerm> kappa_pullback(PullbackKind kind, const std::vector<int>& K);

}  // namespace taut

#endif
