#include "taut/tau.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <sstream>

namespace taut {

std::string BoundaryComponentId::str() const {
    std::string s = kind == ComponentKind::nonseparating ? "nonsep[" : "sep[";
    for (std::size_t i = 0; i < factors.size(); ++i) s += (i ? "|" : "") + factors[i].str();
    return s + "]";
}

namespace {

Factor parse_factor(std::string_view t) {
    // M(g;m1,m2,...)
    if (t.size() < 4 || t.substr(0, 2) != "M(" || t.back() != ')') throw GraphError("bad factor: " + std::string(t));
    t = t.substr(2, t.size() - 3);
    const std::size_t semi = t.find(';');
    if (semi == std::string_view::npos) throw GraphError("bad factor, missing ';'");
    Factor f;
    f.genus = std::stoi(std::string(t.substr(0, semi)));
    std::string_view rest = t.substr(semi + 1);
    std::size_t i = 0;
    while (i < rest.size()) {
        std::size_t c = rest.find(',', i);
        f.markings.push_back(parse_marking(rest.substr(i, c == std::string_view::npos ? c : c - i)));
        if (c == std::string_view::npos) break;
        i = c + 1;
    }
    std::sort(f.markings.begin(), f.markings.end());
    return f;
}

}  // namespace

BoundaryComponentId BoundaryComponentId::parse(std::string_view text) {
    BoundaryComponentId id;
    std::string_view body;
    if (text.substr(0, 7) == "nonsep[") {
        id.kind = ComponentKind::nonseparating;
        body = text.substr(7);
    } else if (text.substr(0, 4) == "sep[") {
        id.kind = ComponentKind::separating;
        body = text.substr(4);
    } else {
        throw GraphError("bad boundary component: " + std::string(text));
    }
    if (body.empty() || body.back() != ']') throw GraphError("bad boundary component: " + std::string(text));
    body.remove_suffix(1);
    const std::size_t bar = body.find('|');
    id.factors.push_back(parse_factor(body.substr(0, bar)));
    if (bar != std::string_view::npos) id.factors.push_back(parse_factor(body.substr(bar + 1)));
    return id;
}

std::vector<BoundaryComponentId> boundary_components(const Factor& factor, int depth) {
    const Marking a = alpha_label(depth), b = beta_label(depth);
    std::vector<BoundaryComponentId> out;
    if (factor.genus >= 1) {
        auto m = factor.markings;
        m.push_back(a);
        m.push_back(b);
        out.push_back({ComponentKind::nonseparating, {Factor(factor.genus - 1, m)}});
    }
    const int n = factor.size();
    for (int g1 = 0; g1 <= factor.genus; ++g1)
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<Marking> s1{a}, s2{b};
            for (int i = 0; i < n; ++i) ((mask & (1u << i)) ? s1 : s2).push_back(factor.markings[i]);
            Factor f1(g1, s1), f2(factor.genus - g1, s2);
            if (f1.stable() && f2.stable()) out.push_back({ComponentKind::separating, {f1, f2}});
        }
    return out;
}

RhoPolynomial RhoPolynomial::times_sum() const {
    RhoPolynomial out;
    for (const auto& [ij, c] : coefficients) {
        out.coefficients[{ij.first + 1, ij.second}] += c;
        out.coefficients[{ij.first, ij.second + 1}] += c;
    }
    for (auto it = out.coefficients.begin(); it != out.coefficients.end();)
        it = it->second == 0 ? out.coefficients.erase(it) : std::next(it);
    return out;
}

std::string RhoPolynomial::str() const {
    std::ostringstream os;
    bool first = true;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        auto [i, j] = it->first;
        long c = it->second;
        if (c == 0) continue;
        os << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
        const long a = c < 0 ? -c : c;
        std::string mono;
        if (i > 0) mono += "psi_a" + (i > 1 ? "^" + std::to_string(i) : std::string());
        if (j > 0) mono += std::string(mono.empty() ? "" : "*") + "psi_b" + (j > 1 ? "^" + std::to_string(j) : std::string());
        if (mono.empty())
            os << a;
        else
            os << (a != 1 ? std::to_string(a) + "*" : "") << mono;
        first = false;
    }
    return first ? "0" : os.str();
}

RhoPolynomial rho(int k) {
    if (k < 1) throw std::invalid_argument("rho: k must be positive");
    RhoPolynomial r;
    for (int i = 0; i <= k - 1; ++i) {
        const int j = k - 1 - i;
        r.coefficients[{i, j}] = (j % 2 == 0) ? 1 : -1;
    }
    return r;
}

namespace {

struct TauOutput {
    BoundaryComponentId component;
    std::vector<CanonicalGraph> factors;
    Rational weight;  // coefficient in the labelled convention times |Aut| of the output
};

// Splits a (possibly disconnected) graph carrying alpha/beta tails into components.
void emit(const DualGraph& h, int genus, Marking a, Marking b, const Rational& coeff, std::vector<TauOutput>& out) {
    const int nv = static_cast<int>(h.vertices.size());
    std::vector<int> comp(nv, -1);
    std::vector<std::vector<int>> adj(nv);
    for (const auto& e : h.edges) {
        const int x = h.half_edges[e.first].vertex, y = h.half_edges[e.second].vertex;
        adj[x].push_back(y);
        adj[y].push_back(x);
    }
    int ncomp = 0;
    for (int s = 0; s < nv; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{s};
        comp[s] = ncomp;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y : adj[x])
                if (comp[y] < 0) {
                    comp[y] = ncomp;
                    stack.push_back(y);
                }
        }
        ++ncomp;
    }
    std::vector<DualGraph> parts(ncomp);
    std::vector<int> local(nv);
    for (int v = 0; v < nv; ++v) local[v] = parts[comp[v]].add_vertex(h.vertices[v].genus, h.vertices[v].kappa);
    for (const auto& e : h.edges) {
        const auto& x = h.half_edges[e.first];
        const auto& y = h.half_edges[e.second];
        parts[comp[x.vertex]].add_edge(local[x.vertex], x.psi, local[y.vertex], y.psi);
    }
    int alpha_comp = 0;
    for (const auto& t : h.tails) {
        parts[comp[t.vertex]].tails.push_back({local[t.vertex], t.marking, t.psi});
        if (t.marking == a) alpha_comp = comp[t.vertex];
    }
    TauOutput o;
    o.weight = coeff;
    if (ncomp == 1) {
        o.component.kind = ComponentKind::nonseparating;
        auto c = canonicalize(parts[0]);
        o.component.factors.emplace_back(genus - 1, c.graph.markings());
        o.weight *= Rational(static_cast<long>(c.automorphisms));
        o.factors.push_back(std::move(c));
    } else {
        o.component.kind = ComponentKind::separating;
        for (int idx : {alpha_comp, 1 - alpha_comp}) {
            auto c = canonicalize(parts[idx]);
            o.component.factors.emplace_back(c.graph.genus(), c.graph.markings());
            o.weight *= Rational(static_cast<long>(c.automorphisms));
            o.factors.push_back(std::move(c));
        }
    }
    (void)b;
    out.push_back(std::move(o));
}

DualGraph remove_edge(const DualGraph& g, int edge, int* va, int* pa, int* vb, int* pb, bool flip) {
    const Edge& e = g.edges[edge];
    const int x = flip ? e.second : e.first;
    const int y = flip ? e.first : e.second;
    *va = g.half_edges[x].vertex;
    *pa = g.half_edges[x].psi;
    *vb = g.half_edges[y].vertex;
    *pb = g.half_edges[y].psi;
    DualGraph h;
    h.vertices = g.vertices;
    h.tails = g.tails;
    for (int i = 0; i < g.edge_count(); ++i) {
        if (i == edge) continue;
        const auto& u = g.half_edges[g.edges[i].first];
        const auto& w = g.half_edges[g.edges[i].second];
        h.add_edge(u.vertex, u.psi, w.vertex, w.psi);
    }
    return h;
}

std::vector<TauOutput> tau_graph_uncached(int k, const DualGraph& g, int depth) {
    const Marking a = alpha_label(depth), b = beta_label(depth);
    for (const auto& t : g.tails)
        if (t.marking == a || t.marking == b)
            throw GraphError("tau: labels " + marking_name(a) + "/" + marking_name(b) + " already in use");
    const int genus = g.genus();
    const Rational sign_k((k - 1) % 2 == 0 ? 1 : -1);
    std::vector<TauOutput> out;

    // 1. Cut an edge, both orientations.
    for (int e = 0; e < g.edge_count(); ++e)
        for (bool flip : {false, true}) {
            int va, pa, vb, pb;
            DualGraph h = remove_edge(g, e, &va, &pa, &vb, &pb, flip);
            DualGraph h1 = h, h2 = h;
            h1.tails.push_back({va, a, pa + k});
            h1.tails.push_back({vb, b, pb});
            h2.tails.push_back({va, a, pa});
            h2.tails.push_back({vb, b, pb + k});
            emit(h1, genus, a, b, Rational(1), out);
            emit(h2, genus, a, b, sign_k, out);
        }

    // 2. Split a vertex in two, alpha on one side and beta on the other.
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
        std::vector<int> hs, ts;
        for (int x = 0; x < static_cast<int>(g.half_edges.size()); ++x)
            if (g.half_edges[x].vertex == v) hs.push_back(x);
        for (int x = 0; x < static_cast<int>(g.tails.size()); ++x)
            if (g.tails[x].vertex == v) ts.push_back(x);
        const int items = static_cast<int>(hs.size() + ts.size());
        const auto& kap = g.vertices[v].kappa;
        const int m = static_cast<int>(kap.size());
        const int gv = g.vertices[v].genus;
        for (unsigned mask = 0; mask < (1u << items); ++mask) {
            const int na = std::popcount(mask), nb = items - na;
            for (int g1 = 0; g1 <= gv; ++g1) {
                const int g2 = gv - g1;
                if (2 * g1 - 2 + na + 1 <= 0 || 2 * g2 - 2 + nb + 1 <= 0) continue;
                for (unsigned kmask = 0; kmask < (1u << m); ++kmask) {
                    std::vector<int> I, J;
                    for (int i = 0; i < m; ++i) ((kmask & (1u << i)) ? I : J).push_back(kap[i]);
                    DualGraph h = g;
                    h.vertices[v] = {g1, I};
                    const int w = h.add_vertex(g2, J);
                    for (int i = 0; i < items; ++i) {
                        if (mask & (1u << i)) continue;
                        if (i < static_cast<int>(hs.size()))
                            h.half_edges[hs[i]].vertex = w;
                        else
                            h.tails[ts[i - hs.size()]].vertex = w;
                    }
                    for (int i = 0; i <= k - 1; ++i) {
                        const int j = k - 1 - i;
                        DualGraph x = h;
                        x.tails.push_back({v, a, i});
                        x.tails.push_back({w, b, j});
                        emit(x, genus, a, b, Rational(j % 2 == 0 ? -1 : 1), out);
                    }
                }
            }
        }
    }

    // 3. Lower the genus of a vertex and attach alpha, beta to it.
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
        if (g.vertices[v].genus < 1) continue;
        for (int i = 0; i <= k - 1; ++i) {
            const int j = k - 1 - i;
            DualGraph x = g;
            --x.vertices[v].genus;
            x.tails.push_back({v, a, i});
            x.tails.push_back({v, b, j});
            emit(x, genus, a, b, Rational(j % 2 == 0 ? -1 : 1), out);
        }
    }
    return out;
}

class TauCache {
public:
    std::shared_ptr<const std::vector<TauOutput>> get(int k, const CanonicalGraph& g, int depth) {
        auto key = std::make_tuple(k, depth, g.key);
        {
            std::shared_lock lock(mutex_);
            auto it = table_.find(key);
            if (it != table_.end()) return it->second;
        }
        auto value = std::make_shared<const std::vector<TauOutput>>(tau_graph_uncached(k, g.graph, depth));
        std::unique_lock lock(mutex_);
        return table_.emplace(key, value).first->second;
    }

private:
    std::shared_mutex mutex_;
    std::map<std::tuple<int, int, std::string>, std::shared_ptr<const std::vector<TauOutput>>> table_;
};

TauCache& tau_cache() {
    static TauCache c;
    return c;
}

}  // namespace

TauResult tau_on_factor(int k, const GraphSum& L, int factor, int depth) {
    if (k <= 0) throw std::invalid_argument("tau: k must be positive");
    const auto& amb = L.ambient().factors;
    if (factor < 0 || factor >= static_cast<int>(amb.size())) {
        if (L.empty() && amb.empty()) return {};
        throw std::invalid_argument("tau_on_factor: factor index out of range");
    }
    TauResult result;
    for (const auto& [key, term] : L.terms()) {
        const CanonicalGraph& g = term.factors[factor];
        const Rational base = term.coefficient / Rational(static_cast<long>(g.automorphisms));
        for (const auto& o : *tau_cache().get(k, g, depth)) {
            auto it = result.find(o.component);
            if (it == result.end()) {
                std::vector<Factor> fs(amb.begin(), amb.begin() + factor);
                fs.insert(fs.end(), o.component.factors.begin(), o.component.factors.end());
                fs.insert(fs.end(), amb.begin() + factor + 1, amb.end());
                it = result.emplace(o.component, GraphSum(AmbientSpace(std::move(fs)))).first;
            }
            std::vector<CanonicalGraph> fs(term.factors.begin(), term.factors.begin() + factor);
            fs.insert(fs.end(), o.factors.begin(), o.factors.end());
            fs.insert(fs.end(), term.factors.begin() + factor + 1, term.factors.end());
            it->second.add_canonical(std::move(fs), base * o.weight);
        }
    }
    for (auto it = result.begin(); it != result.end();) it = it->second.empty() ? result.erase(it) : std::next(it);
    return result;
}

TauResult tau(int k, const GraphSum& L, int depth) {
    if (L.ambient().factors.size() > 1) throw std::invalid_argument("tau: single-factor ambient expected");
    return tau_on_factor(k, L, 0, depth);
}

std::vector<std::pair<Rational, PsiKappaMonomial>> multiply_rho(const RhoPolynomial& r, const PsiKappaMonomial& M,
                                                                const AmbientSpace& ambient, int depth) {
    const Marking a = alpha_label(depth), b = beta_label(depth);
    int fa = -1, fb = -1;
    for (std::size_t i = 0; i < ambient.factors.size(); ++i) {
        const auto& ms = ambient.factors[i].markings;
        if (std::binary_search(ms.begin(), ms.end(), a)) fa = static_cast<int>(i);
        if (std::binary_search(ms.begin(), ms.end(), b)) fb = static_cast<int>(i);
    }
    if (fa < 0 || fb < 0) throw GraphError("multiply_rho: ambient lacks alpha/beta labels");
    std::vector<std::pair<Rational, PsiKappaMonomial>> out;
    for (const auto& [ij, c] : r.coefficients) {
        PsiKappaMonomial x = M;
        if (ij.first) x.factors[fa].psi[a] += ij.first;
        if (ij.second) x.factors[fb].psi[b] += ij.second;
        out.emplace_back(Rational(c), std::move(x));
    }
    return out;
}

}  // namespace taut
