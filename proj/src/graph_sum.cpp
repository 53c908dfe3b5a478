#include "taut/graph_sum.hpp"

#include <sstream>

namespace taut {

std::uint64_t GraphTerm::automorphisms() const {
    std::uint64_t a = 1;
    for (const auto& f : factors) a *= f.automorphisms;
    return a;
}

int GraphTerm::degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.graph.degree();
    return d;
}

std::string term_key(const std::vector<CanonicalGraph>& factors) {
    std::string k;
    for (std::size_t i = 0; i < factors.size(); ++i) k += (i ? " & " : "") + factors[i].key;
    return k;
}

void GraphSum::check_factor(std::size_t i, const DualGraph& g) const {
    const Factor& f = ambient_.factors.at(i);
    if (g.genus() != f.genus || g.markings() != f.markings)
        throw GraphError("graph " + serialize(g) + " does not live on " + f.str());
}

void GraphSum::add(const DualGraph& g, const Rational& c) { add(std::vector<DualGraph>{g}, c); }

void GraphSum::add(const std::vector<DualGraph>& factors, const Rational& c) {
    std::vector<CanonicalGraph> cs;
    cs.reserve(factors.size());
    for (const auto& g : factors) cs.push_back(canonicalize(g));
    add_canonical(std::move(cs), c);
}

void GraphSum::add_canonical(std::vector<CanonicalGraph> factors, const Rational& c) {
    if (c.is_zero()) return;
    if (factors.size() != ambient_.factors.size())
        throw GraphError("term has " + std::to_string(factors.size()) + " factors, ambient " + ambient_.str() + " has " +
                         std::to_string(ambient_.factors.size()));
    for (std::size_t i = 0; i < factors.size(); ++i) check_factor(i, factors[i].graph);
    int d = 0;
    for (const auto& f : factors) d += f.graph.degree();
    if (degree_ >= 0 && d != degree_)
        throw GraphError("inhomogeneous graph sum: degree " + std::to_string(d) + " vs " + std::to_string(degree_));
    std::string key = term_key(factors);
    auto it = terms_.find(key);
    if (it == terms_.end()) {
        terms_.emplace(std::move(key), GraphTerm{std::move(factors), c});
    } else {
        it->second.coefficient += c;
        if (it->second.coefficient.is_zero()) terms_.erase(it);
    }
    degree_ = terms_.empty() ? -1 : d;
}

void GraphSum::add(const GraphSum& other, const Rational& scale) {
    if (other.empty() || scale.is_zero()) return;
    if (empty() && ambient_.factors.empty()) ambient_ = other.ambient_;
    if (other.ambient_ != ambient_)
        throw GraphError("adding graph sums on different ambients: " + ambient_.str() + " vs " + other.ambient_.str());
    for (const auto& [k, t] : other.terms_) add_canonical(t.factors, t.coefficient * scale);
}

GraphSum GraphSum::scaled(const Rational& c) const {
    GraphSum out(ambient_);
    out.add(*this, c);
    return out;
}

Rational GraphSum::coefficient(const std::string& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? Rational(0) : it->second.coefficient;
}

std::string GraphSum::str() const {
    std::string s;
    for (const auto& [k, t] : terms_) s += t.coefficient.str() + "\t" + k + "\n";
    return s;
}

GraphSum operator+(const GraphSum& a, const GraphSum& b) {
    GraphSum out = a;
    out.add(b);
    return out;
}

GraphSum operator-(const GraphSum& a, const GraphSum& b) {
    GraphSum out = a;
    out.add(b, Rational(-1));
    return out;
}

GraphSum operator*(const Rational& c, const GraphSum& a) { return a.scaled(c); }

namespace {

struct ParsedLine {
    Rational coefficient;
    std::vector<DualGraph> factors;
};

std::vector<ParsedLine> parse_lines(std::string_view text) {
    std::vector<ParsedLine> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos)
            throw GraphError("line " + std::to_string(lineno) + ": expected 'coefficient<TAB>graph key'");
        ParsedLine p;
        try {
            p.coefficient = Rational::parse(std::string_view(line).substr(start, tab - start));
        } catch (const std::invalid_argument& e) {
            throw GraphError("line " + std::to_string(lineno) + ": " + e.what());
        }
        std::string_view rest = std::string_view(line).substr(tab + 1);
        std::size_t pos = 0;
        for (;;) {
            std::size_t amp = rest.find(" & ", pos);
            p.factors.push_back(parse_graph(rest.substr(pos, amp == std::string_view::npos ? amp : amp - pos)));
            if (amp == std::string_view::npos) break;
            pos = amp + 3;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

GraphSum parse_graph_sum(std::string_view text) {
    auto lines = parse_lines(text);
    if (lines.empty()) return GraphSum();
    std::vector<Factor> factors;
    for (const auto& g : lines.front().factors) factors.emplace_back(g.genus(), g.markings());
    GraphSum out{AmbientSpace(std::move(factors))};
    for (const auto& l : lines) out.add(l.factors, l.coefficient);
    return out;
}

GraphSum parse_graph_sum(std::string_view text, const AmbientSpace& ambient) {
    GraphSum out(ambient);
    for (const auto& l : parse_lines(text)) out.add(l.factors, l.coefficient);
    return out;
}

}  // namespace taut
