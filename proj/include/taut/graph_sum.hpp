#ifndef TAUT_GRAPH_SUM_HPP
#define TAUT_GRAPH_SUM_HPP

#include "taut/graph.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace taut {

struct GraphTerm {
    std::vector<CanonicalGraph> factors;  // one per ambient factor
    Rational coefficient;

    std::uint64_t automorphisms() const;
    int degree() const;
};

std::string term_key(const std::vector<CanonicalGraph>& factors);

// Rational combination of decorated graphs on a product of moduli spaces.
// The class of a term is (1/|Aut|) times the pushforward of its decorations.
class GraphSum {
public:
    GraphSum() = default;
    explicit GraphSum(AmbientSpace ambient) : ambient_(std::move(ambient)) {}

    const AmbientSpace& ambient() const { return ambient_; }
    const std::map<std::string, GraphTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    // -1 when empty.
    int degree() const { return degree_; }
    int dimension() const { return ambient_.dimension() - (degree_ < 0 ? 0 : degree_); }

    void add(const DualGraph& g, const Rational& c);
    void add(const std::vector<DualGraph>& factors, const Rational& c);
    void add_canonical(std::vector<CanonicalGraph> factors, const Rational& c);
    void add(const GraphSum& other, const Rational& scale = Rational(1));

    GraphSum scaled(const Rational& c) const;
    Rational coefficient(const std::string& key) const;

    // Serialized form, one "coefficient<TAB>key" per line.
    std::string str() const;

private:
    void check_factor(std::size_t i, const DualGraph& g) const;

    AmbientSpace ambient_;
    std::map<std::string, GraphTerm> terms_;
    int degree_ = -1;
};

GraphSum operator+(const GraphSum& a, const GraphSum& b);
GraphSum operator-(const GraphSum& a, const GraphSum& b);
GraphSum operator*(const Rational& c, const GraphSum& a);

// Lines "coefficient<TAB>key"; product terms join factor keys with " & ".
// Blank lines and lines starting with '#' are ignored. The ambient is
// inferred from the graphs; an optional `ambient` argument fixes it.
GraphSum parse_graph_sum(std::string_view text);
GraphSum parse_graph_sum(std::string_view text, const AmbientSpace& ambient);

}  // namespace taut

#endif
