#include "taut/eval.hpp"

#include "taut/corr.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>
#include <numeric>
#include <shared_mutex>

namespace taut {

int PsiKappaFactor::degree() const {
    int d = std::accumulate(kappa.begin(), kappa.end(), 0);
    for (const auto& [m, e] : psi) d += e;
    return d;
}

std::string PsiKappaFactor::str() const {
    std::string s;
    for (const auto& [m, e] : psi) {
        if (e == 0) continue;
        if (!s.empty()) s += "*";
        s += "psi[" + marking_name(m) + "]";
        if (e != 1) s += "^" + std::to_string(e);
    }
    if (!kappa.empty()) {
        if (!s.empty()) s += "*";
        s += "kappa[";
        for (std::size_t i = 0; i < kappa.size(); ++i) s += (i ? "," : "") + std::to_string(kappa[i]);
        s += "]";
    }
    return s.empty() ? "1" : s;
}

int PsiKappaMonomial::degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.degree();
    return d;
}

std::string PsiKappaMonomial::str() const {
    std::string s;
    for (std::size_t i = 0; i < factors.size(); ++i) s += (i ? " | " : "") + factors[i].str();
    return s;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

int parse_int(std::string_view s, std::string_view context) {
    s = trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::invalid_argument("bad integer '" + std::string(s) + "' in monomial " + std::string(context));
    return v;
}

}  // namespace

PsiKappaMonomial PsiKappaMonomial::parse(std::string_view text) {
    PsiKappaMonomial out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t bar = text.find('|', start);
        std::string_view part = trim(text.substr(start, bar == std::string_view::npos ? bar : bar - start));
        PsiKappaFactor f;
        if (part != "1" && !part.empty()) {
            std::size_t i = 0;
            while (i <= part.size()) {
                std::size_t star = part.find('*', i);
                std::string_view item = trim(part.substr(i, star == std::string_view::npos ? star : star - i));
                if (item.substr(0, 4) == "psi[") {
                    const std::size_t close = item.find(']');
                    if (close == std::string_view::npos) throw std::invalid_argument("unclosed psi[ in monomial");
                    const Marking m = parse_marking(item.substr(4, close - 4));
                    int e = 1;
                    if (close + 1 < item.size()) {
                        if (item[close + 1] != '^') throw std::invalid_argument("expected ^ after psi[..]");
                        e = parse_int(item.substr(close + 2), text);
                    }
                    f.psi[m] += e;
                } else if (item.substr(0, 6) == "kappa[") {
                    const std::size_t close = item.find(']');
                    if (close == std::string_view::npos || close + 1 != item.size())
                        throw std::invalid_argument("malformed kappa[..] in monomial");
                    std::string_view body = item.substr(6, close - 6);
                    std::size_t j = 0;
                    while (j <= body.size()) {
                        std::size_t comma = body.find(',', j);
                        const int k = parse_int(body.substr(j, comma == std::string_view::npos ? comma : comma - j), text);
                        if (k <= 0) throw std::invalid_argument("kappa index must be positive");
                        f.kappa.push_back(k);
                        if (comma == std::string_view::npos) break;
                        j = comma + 1;
                    }
                } else {
                    throw std::invalid_argument("unknown monomial item '" + std::string(item) + "'");
                }
                if (star == std::string_view::npos) break;
                i = star + 1;
            }
        }
        std::sort(f.kappa.begin(), f.kappa.end());
        out.factors.push_back(std::move(f));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return out;
}

namespace {

void compositions(int total, int slots, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (slots == 0) {
        if (total == 0) out.push_back(cur);
        return;
    }
    for (int a = total; a >= 0; --a) {
        if (slots == 1 && a != total) continue;
        cur.push_back(a);
        compositions(total - a, slots - 1, cur, out);
        cur.pop_back();
    }
}

void partitions(int total, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (total == 0) {
        out.emplace_back(cur.rbegin(), cur.rend());
        return;
    }
    for (int a = std::min(total, max_part); a >= 1; --a) {
        cur.push_back(a);
        partitions(total - a, a, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<PsiKappaMonomial> monomials_of_degree(const Factor& factor, int degree) {
    std::vector<PsiKappaMonomial> out;
    if (degree < 0) return out;
    for (int c = 0; c <= degree; ++c) {
        std::vector<std::vector<int>> parts, comps;
        std::vector<int> cur;
        partitions(c, c, cur, parts);
        compositions(degree - c, factor.size(), cur, comps);
        for (const auto& p : parts)
            for (const auto& s : comps) {
                PsiKappaFactor f;
                f.kappa = p;
                for (int i = 0; i < factor.size(); ++i)
                    if (s[i] > 0) f.psi[factor.markings[i]] = s[i];
                out.push_back({{f}});
            }
    }
    return out;
}

std::vector<PsiKappaMonomial> monomials_of_degree(const AmbientSpace& ambient, int degree) {
    std::vector<PsiKappaMonomial> acc{PsiKappaMonomial{}};
    int remaining_dim = ambient.dimension();
    for (std::size_t i = 0; i < ambient.factors.size(); ++i) {
        const Factor& f = ambient.factors[i];
        remaining_dim -= f.dimension();
        std::vector<PsiKappaMonomial> next;
        for (const auto& partial : acc) {
            const int used = partial.degree();
            for (int d = 0; d <= std::min(f.dimension(), degree - used); ++d) {
                // remaining factors must be able to absorb the rest
                if (degree - used - d > remaining_dim) continue;
                for (const auto& m : monomials_of_degree(f, d)) {
                    PsiKappaMonomial x = partial;
                    x.factors.push_back(m.factors.front());
                    next.push_back(std::move(x));
                }
            }
        }
        acc = std::move(next);
    }
    std::vector<PsiKappaMonomial> out;
    for (auto& m : acc)
        if (m.degree() == degree) out.push_back(std::move(m));
    return out;
}

Rational correlator_polynomial_value(const DualGraph& g) {
    if (g.has_kappa()) throw GraphError("correlator_polynomial_value: graph carries kappa decorations");
    std::vector<std::vector<int>> ex(g.vertices.size());
    for (const auto& h : g.half_edges) ex[h.vertex].push_back(h.psi);
    for (const auto& t : g.tails) ex[t.vertex].push_back(t.psi);
    Rational value(1);
    for (std::size_t v = 0; v < g.vertices.size() && !value.is_zero(); ++v)
        value *= point_correlator(g.vertices[v].genus, ex[v]);
    return value;
}

Rational correlator_polynomial_value(const std::vector<DualGraph>& factors) {
    Rational value(1);
    for (const auto& g : factors) value *= correlator_polynomial_value(g);
    return value;
}

DualGraph eliminate_kappa(const DualGraph& g) {
    DualGraph out = g;
    Marking next = 1;
    for (const auto& t : g.tails) next = std::max(next, t.marking + 1);
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
        for (int k : out.vertices[v].kappa) out.tails.push_back({static_cast<int>(v), next++, k + 1});
        out.vertices[v].kappa.clear();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vertex integrals

namespace {

using PsiPoly = std::map<std::pair<std::vector<int>, std::vector<int>>, Rational>;

// Pushforward of prod psi_i^{desc_i} * prod psi_x^{e_x} along the map forgetting the
// added points, as a polynomial in base psi classes and single-index kappas.
PsiPoly pushforward(int genus, const std::vector<int>& desc, const std::vector<int>& added) {
    PsiPoly cur;
    std::vector<int> start = desc;
    start.insert(start.end(), added.begin(), added.end());
    cur[{start, {}}] = Rational(1);
    for (std::size_t step = 0; step < added.size(); ++step) {
        PsiPoly next;
        for (const auto& [key, coeff] : cur) {
            const auto& [psi, kap] = key;
            const int f0 = psi.back();
            std::vector<int> down(psi.begin(), psi.end() - 1);
            const int n_down = static_cast<int>(down.size());
            const int m = static_cast<int>(kap.size());
            // kappa_k upstairs = pullback(kappa_k) + psi_x^k
            for (unsigned mask = 0; mask < (1u << m); ++mask) {
                int f = f0;
                std::vector<int> rest;
                for (int i = 0; i < m; ++i) {
                    if (mask & (1u << i))
                        f += kap[i];
                    else
                        rest.push_back(kap[i]);
                }
                if (f >= 2) {
                    rest.push_back(f - 1);
                    std::sort(rest.begin(), rest.end());
                    next[{down, rest}] += coeff;
                } else if (f == 1) {
                    next[{down, rest}] += coeff * Rational(2 * genus - 2 + n_down);
                } else {
                    for (int j = 0; j < n_down; ++j) {
                        if (down[j] == 0) continue;
                        auto d2 = down;
                        --d2[j];
                        next[{d2, rest}] += coeff;
                    }
                }
            }
        }
        cur.clear();
        for (auto& [k, c] : next)
            if (!c.is_zero()) cur.emplace(k, c);
    }
    return cur;
}

struct VertexKey {
    int genus;
    std::vector<VertexPoint> points;
    std::vector<int> kappa;
    std::vector<int> added;
    auto operator<=>(const VertexKey&) const = default;
};

class VertexCache {
public:
    bool find(const VertexKey& k, Rational& out) const {
        std::shared_lock lock(mutex_);
        auto it = table_.find(k);
        if (it == table_.end()) return false;
        out = it->second;
        return true;
    }
    void store(const VertexKey& k, const Rational& v) {
        std::unique_lock lock(mutex_);
        table_.emplace(k, v);
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<VertexKey, Rational> table_;
};

VertexCache& vertex_cache() {
    static VertexCache c;
    return c;
}

}  // namespace

Rational vertex_integral(int genus, const std::vector<VertexPoint>& points, const std::vector<int>& kappa_singles,
                         const std::vector<int>& added) {
    const int n = static_cast<int>(points.size());
    if (2 * genus - 2 + n <= 0) throw GraphError("vertex_integral: unstable base");
    int total = 0;
    for (const auto& p : points) total += p.ancestor + p.descendant;
    for (int k : kappa_singles) total += k;
    for (int e : added) total += e;
    if (total != 3 * genus - 3 + n + static_cast<int>(added.size())) return Rational(0);

    VertexKey key{genus, points, kappa_singles, added};
    std::sort(key.points.begin(), key.points.end());
    std::sort(key.kappa.begin(), key.kappa.end());
    std::sort(key.added.begin(), key.added.end());
    Rational value;
    if (vertex_cache().find(key, value)) return value;

    std::vector<int> desc, anc;
    for (const auto& p : key.points) {
        desc.push_back(p.descendant);
        anc.push_back(p.ancestor);
    }
    value = Rational(0);
    for (const auto& [pk, coeff] : pushforward(genus, desc, key.added)) {
        const auto& [psi, kap] = pk;
        std::vector<int> ex(n);
        for (int i = 0; i < n; ++i) ex[i] = psi[i] + anc[i];
        std::vector<int> ks = key.kappa;
        ks.insert(ks.end(), kap.begin(), kap.end());
        value += coeff * integral_psi_kappa_product(genus, ex, ks);
    }
    vertex_cache().store(key, value);
    return value;
}

// ---------------------------------------------------------------------------
// Graph evaluation

namespace {

KappaPolynomial multiply(const KappaPolynomial& a, const KappaPolynomial& b) {
    KappaPolynomial out;
    for (const auto& [ka, ca] : a)
        for (const auto& [kb, cb] : b) {
            std::vector<int> k = ka;
            k.insert(k.end(), kb.begin(), kb.end());
            std::sort(k.begin(), k.end());
            out[k] += ca * cb;
        }
    return out;
}

// Value of one factor graph, without the 1/|Aut| normalization.
Rational evaluate_factor(const DualGraph& g, const std::map<Marking, int>& increments, const PsiKappaFactor* mono,
                         const std::vector<int>& added) {
    const int nv = static_cast<int>(g.vertices.size());
    std::vector<std::vector<VertexPoint>> pts(nv);
    for (const auto& h : g.half_edges) pts[h.vertex].push_back({h.psi, 0});
    for (const auto& t : g.tails) {
        int extra = 0;
        if (auto it = increments.find(t.marking); it != increments.end()) extra += it->second;
        if (mono)
            if (auto it = mono->psi.find(t.marking); it != mono->psi.end()) extra += it->second;
        pts[t.vertex].push_back({t.psi, extra});
    }
    std::vector<int> mk;
    if (mono) mk = mono->kappa;
    const int nk = static_cast<int>(mk.size());
    const int na = static_cast<int>(added.size());

    std::vector<KappaPolynomial> own(nv);
    for (int v = 0; v < nv; ++v) own[v] = kappa_multi_to_monomials(g.vertices[v].kappa);

    // h(v, kappa subset, added subset), memoized per call
    std::map<std::tuple<int, unsigned, unsigned>, Rational> memo;
    auto local = [&](int v, unsigned kmask, unsigned amask) -> Rational {
        auto key = std::make_tuple(v, kmask, amask);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::vector<int> kv, av;
        for (int i = 0; i < nk; ++i)
            if (kmask & (1u << i)) kv.push_back(mk[i]);
        for (int i = 0; i < na; ++i)
            if (amask & (1u << i)) av.push_back(added[i]);
        KappaPolynomial kp = kv.empty() ? own[v] : multiply(own[v], kappa_multi_to_monomials(kv));
        Rational r;
        for (const auto& [singles, c] : kp) r += c * vertex_integral(g.vertices[v].genus, pts[v], singles, av);
        memo.emplace(key, r);
        return r;
    };

    Rational total;
    std::vector<int> assign(nk + na, 0);
    for (;;) {
        std::vector<unsigned> km(nv, 0), am(nv, 0);
        for (int i = 0; i < nk; ++i) km[assign[i]] |= 1u << i;
        for (int i = 0; i < na; ++i) am[assign[nk + i]] |= 1u << i;
        Rational prod(1);
        for (int v = 0; v < nv && !prod.is_zero(); ++v) prod *= local(v, km[v], am[v]);
        total += prod;
        int k = nk + na - 1;
        while (k >= 0 && ++assign[k] == nv) assign[k--] = 0;
        if (k < 0) break;
    }
    return total;
}

}  // namespace

Rational induced_entry(const GraphSum& L, const InducedEntrySpec& spec) {
    const auto& factors = L.ambient().factors;
    std::vector<std::vector<int>> added(factors.size());
    for (const auto& a : spec.added) {
        if (a.factor < 0 || a.factor >= static_cast<int>(factors.size()))
            throw GraphError("induced_entry: added point on factor " + std::to_string(a.factor) + " out of range");
        if (a.psi < 0) throw GraphError("induced_entry: negative psi exponent");
        added[a.factor].push_back(a.psi);
    }
    std::vector<std::map<Marking, int>> incr(factors.size());
    for (const auto& [m, e] : spec.increments) {
        bool found = false;
        for (std::size_t i = 0; i < factors.size(); ++i)
            if (std::binary_search(factors[i].markings.begin(), factors[i].markings.end(), m)) {
                incr[i][m] = e;
                found = true;
            }
        if (!found && !L.empty()) throw GraphError("induced_entry: unknown marking " + marking_name(m));
    }
    Rational total;
    for (const auto& [key, term] : L.terms()) {
        Rational v = term.coefficient / Rational(static_cast<long>(term.automorphisms()));
        for (std::size_t i = 0; i < factors.size() && !v.is_zero(); ++i)
            v *= evaluate_factor(term.factors[i].graph, incr[i], nullptr, added[i]);
        total += v;
    }
    return total;
}

Rational pair(const GraphSum& L, const PsiKappaMonomial& M) {
    if (L.empty()) return Rational(0);
    const auto& factors = L.ambient().factors;
    if (M.factors.size() != factors.size())
        throw GraphError("pair: monomial has " + std::to_string(M.factors.size()) + " factors, ambient has " +
                         std::to_string(factors.size()));
    if (M.degree() != L.dimension())
        throw GraphError("pair: monomial degree " + std::to_string(M.degree()) + " is not complementary to class dimension " +
                         std::to_string(L.dimension()));
    for (std::size_t i = 0; i < factors.size(); ++i)
        for (const auto& [m, e] : M.factors[i].psi)
            if (!std::binary_search(factors[i].markings.begin(), factors[i].markings.end(), m))
                throw GraphError("pair: marking " + marking_name(m) + " not on factor " + factors[i].str());
    Rational total;
    for (const auto& [key, term] : L.terms()) {
        Rational v = term.coefficient / Rational(static_cast<long>(term.automorphisms()));
        for (std::size_t i = 0; i < factors.size() && !v.is_zero(); ++i)
            v *= evaluate_factor(term.factors[i].graph, {}, &M.factors[i], {});
        total += v;
    }
    return total;
}

}  // namespace taut
