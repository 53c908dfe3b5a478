#include "taut/graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <numeric>
#include <set>
#include <sstream>

namespace taut {

std::string marking_name(Marking m) {
    if (m > 0) return std::to_string(m);
    if (m == 0) throw GraphError("marking 0 is not a valid label");
    const int idx = -m - 1;
    const int depth = idx / 2;
    std::string s = (idx % 2 == 0) ? "a" : "b";
    if (depth > 0) s += std::to_string(depth);
    return s;
}

Marking parse_marking(std::string_view text) {
    if (text.empty()) throw GraphError("empty marking label");
    if (text[0] == 'a' || text[0] == 'b') {
        int depth = 0;
        if (text.size() > 1) {
            auto [p, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), depth);
            if (ec != std::errc() || p != text.data() + text.size() || depth < 0)
                throw GraphError("bad marking label: " + std::string(text));
        }
        return text[0] == 'a' ? alpha_label(depth) : beta_label(depth);
    }
    int v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || v <= 0)
        throw GraphError("bad marking label: " + std::string(text));
    return v;
}

DualGraph DualGraph::smooth(int genus, const std::vector<Marking>& markings) {
    DualGraph g;
    g.vertices.push_back({genus, {}});
    for (Marking m : markings) g.tails.push_back({0, m, 0});
    return g;
}

int DualGraph::genus() const {
    int g = 0;
    for (const auto& v : vertices) g += v.genus;
    // first Betti number of a connected graph
    return g + edge_count() - static_cast<int>(vertices.size()) + 1;
}

int DualGraph::degree() const {
    int d = edge_count();
    for (const auto& v : vertices)
        for (int k : v.kappa) d += k;
    for (const auto& h : half_edges) d += h.psi;
    for (const auto& t : tails) d += t.psi;
    return d;
}

int DualGraph::valence(int v) const {
    int n = 0;
    for (const auto& h : half_edges) n += (h.vertex == v);
    for (const auto& t : tails) n += (t.vertex == v);
    return n;
}

int DualGraph::decoration_degree(int v) const {
    int d = 0;
    for (int k : vertices[v].kappa) d += k;
    for (const auto& h : half_edges)
        if (h.vertex == v) d += h.psi;
    for (const auto& t : tails)
        if (t.vertex == v) d += t.psi;
    return d;
}

std::vector<Marking> DualGraph::markings() const {
    std::vector<Marking> m;
    for (const auto& t : tails) m.push_back(t.marking);
    std::sort(m.begin(), m.end());
    return m;
}

bool DualGraph::connected() const {
    if (vertices.empty()) return false;
    std::vector<int> parent(vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : edges) parent[find(half_edges[e.first].vertex)] = find(half_edges[e.second].vertex);
    const int root = find(0);
    for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
        if (find(v) != root) return false;
    return true;
}

bool DualGraph::has_kappa() const {
    for (const auto& v : vertices)
        if (!v.kappa.empty()) return true;
    return false;
}

bool DualGraph::vanishes_by_degree() const {
    for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
        if (decoration_degree(v) > 3 * vertices[v].genus - 3 + valence(v)) return true;
    return false;
}

int DualGraph::add_vertex(int genus, std::vector<int> kappa) {
    std::sort(kappa.begin(), kappa.end());
    vertices.push_back({genus, std::move(kappa)});
    return static_cast<int>(vertices.size()) - 1;
}

int DualGraph::add_edge(int v, int psi_v, int w, int psi_w) {
    const int a = static_cast<int>(half_edges.size());
    half_edges.push_back({v, psi_v});
    half_edges.push_back({w, psi_w});
    edges.push_back({a, a + 1});
    return static_cast<int>(edges.size()) - 1;
}

void DualGraph::validate() const {
    const int nv = static_cast<int>(vertices.size());
    if (nv == 0) throw GraphError("graph has no vertices");
    for (int v = 0; v < nv; ++v) {
        if (vertices[v].genus < 0) throw GraphError("vertex " + std::to_string(v) + ": negative genus");
        for (int k : vertices[v].kappa)
            if (k <= 0) throw GraphError("vertex " + std::to_string(v) + ": kappa index must be positive");
        if (!std::is_sorted(vertices[v].kappa.begin(), vertices[v].kappa.end()))
            throw GraphError("vertex " + std::to_string(v) + ": kappa multiset not sorted");
    }
    const int nh = static_cast<int>(half_edges.size());
    for (int h = 0; h < nh; ++h) {
        if (half_edges[h].vertex < 0 || half_edges[h].vertex >= nv)
            throw GraphError("half-edge " + std::to_string(h) + ": vertex out of range");
        if (half_edges[h].psi < 0) throw GraphError("half-edge " + std::to_string(h) + ": negative psi");
    }
    std::vector<int> used(nh, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        for (int h : {edges[e].first, edges[e].second}) {
            if (h < 0 || h >= nh) throw GraphError("edge " + std::to_string(e) + ": half-edge out of range");
            ++used[h];
        }
        if (edges[e].first == edges[e].second) throw GraphError("edge " + std::to_string(e) + ": degenerate");
    }
    for (int h = 0; h < nh; ++h)
        if (used[h] != 1) throw GraphError("half-edge " + std::to_string(h) + " is not in exactly one edge");
    std::set<Marking> seen;
    for (const auto& t : tails) {
        if (t.vertex < 0 || t.vertex >= nv) throw GraphError("tail " + marking_name(t.marking) + ": vertex out of range");
        if (t.psi < 0) throw GraphError("tail " + marking_name(t.marking) + ": negative psi");
        if (t.marking == 0 || !seen.insert(t.marking).second)
            throw GraphError("marking " + std::to_string(t.marking) + " repeated or invalid");
    }
    for (int v = 0; v < nv; ++v)
        if (2 * vertices[v].genus - 2 + valence(v) <= 0)
            throw GraphError("vertex " + std::to_string(v) + " is unstable");
    if (!connected()) throw GraphError("graph is not connected");
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

using Code = std::vector<int>;

struct Prepared {
    const DualGraph* g;
    std::vector<std::vector<int>> incident;  // half-edges per vertex
    std::vector<int> partner;                // half-edge -> other half-edge
};

Prepared prepare(const DualGraph& g) {
    Prepared p{&g, std::vector<std::vector<int>>(g.vertices.size()), std::vector<int>(g.half_edges.size())};
    for (int h = 0; h < static_cast<int>(g.half_edges.size()); ++h) p.incident[g.half_edges[h].vertex].push_back(h);
    for (const auto& e : g.edges) {
        p.partner[e.first] = e.second;
        p.partner[e.second] = e.first;
    }
    return p;
}

std::vector<int> refine_colors(const Prepared& p) {
    const DualGraph& g = *p.g;
    const int nv = static_cast<int>(g.vertices.size());
    std::vector<Code> sig(nv);
    for (int v = 0; v < nv; ++v) {
        Code c{g.vertices[v].genus, static_cast<int>(g.vertices[v].kappa.size())};
        c.insert(c.end(), g.vertices[v].kappa.begin(), g.vertices[v].kappa.end());
        std::vector<std::pair<int, int>> ts;
        for (const auto& t : g.tails)
            if (t.vertex == v) ts.push_back({t.marking, t.psi});
        std::sort(ts.begin(), ts.end());
        c.push_back(static_cast<int>(ts.size()));
        for (auto [m, s] : ts) {
            c.push_back(m);
            c.push_back(s);
        }
        sig[v] = std::move(c);
    }
    auto rank = [&](const std::vector<Code>& s) {
        std::vector<Code> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<int> col(nv);
        for (int v = 0; v < nv; ++v)
            col[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), s[v]) - sorted.begin());
        return std::make_pair(col, static_cast<int>(sorted.size()));
    };
    auto [color, classes] = rank(sig);
    for (;;) {
        std::vector<Code> next(nv);
        for (int v = 0; v < nv; ++v) {
            std::vector<std::array<int, 3>> nb;
            for (int h : p.incident[v]) {
                const int o = p.partner[h];
                nb.push_back({g.half_edges[h].psi, g.half_edges[o].psi, color[g.half_edges[o].vertex]});
            }
            std::sort(nb.begin(), nb.end());
            Code c{color[v]};
            for (const auto& a : nb) c.insert(c.end(), a.begin(), a.end());
            next[v] = std::move(c);
        }
        auto [ncolor, nclasses] = rank(next);
        color = std::move(ncolor);
        if (nclasses == classes) break;
        classes = nclasses;
    }
    return color;
}

struct EdgeCode {
    int va, pa, vb, pb;
    auto operator<=>(const EdgeCode&) const = default;
};

// Encoding of g under the vertex relabeling v -> pos[v].
Code encode(const DualGraph& g, const std::vector<int>& pos, std::vector<EdgeCode>* edges_out,
            std::vector<std::array<int, 3>>* tails_out) {
    const int nv = static_cast<int>(g.vertices.size());
    std::vector<int> order(nv);
    for (int v = 0; v < nv; ++v) order[pos[v]] = v;
    Code c;
    for (int i = 0; i < nv; ++i) {
        const auto& vx = g.vertices[order[i]];
        c.push_back(vx.genus);
        c.push_back(static_cast<int>(vx.kappa.size()));
        c.insert(c.end(), vx.kappa.begin(), vx.kappa.end());
    }
    std::vector<EdgeCode> es;
    es.reserve(g.edges.size());
    for (const auto& e : g.edges) {
        EdgeCode a{pos[g.half_edges[e.first].vertex], g.half_edges[e.first].psi, pos[g.half_edges[e.second].vertex],
                   g.half_edges[e.second].psi};
        if (std::make_pair(a.vb, a.pb) < std::make_pair(a.va, a.pa)) a = {a.vb, a.pb, a.va, a.pa};
        es.push_back(a);
    }
    std::sort(es.begin(), es.end());
    for (const auto& e : es) c.insert(c.end(), {e.va, e.pa, e.vb, e.pb});
    std::vector<std::array<int, 3>> ts;
    for (const auto& t : g.tails) ts.push_back({t.marking, pos[t.vertex], t.psi});
    std::sort(ts.begin(), ts.end());
    for (const auto& t : ts) c.insert(c.end(), t.begin(), t.end());
    if (edges_out) *edges_out = std::move(es);
    if (tails_out) *tails_out = std::move(ts);
    return c;
}

}  // namespace

CanonicalGraph canonicalize(const DualGraph& g) {
    g.validate();
    const Prepared p = prepare(g);
    const std::vector<int> color = refine_colors(p);
    const int nv = static_cast<int>(g.vertices.size());

    // Color classes in increasing color order; positions are assigned class by class.
    int ncolors = *std::max_element(color.begin(), color.end()) + 1;
    std::vector<std::vector<int>> classes(ncolors);
    for (int v = 0; v < nv; ++v) classes[color[v]].push_back(v);

    std::vector<int> pos(nv);
    Code best;
    std::vector<int> best_pos;
    std::uint64_t hits = 0;
    bool have = false;

    // Enumerate permutations inside every class (odometer over next_permutation).
    for (auto& cl : classes) std::sort(cl.begin(), cl.end());
    for (;;) {
        int at = 0;
        for (const auto& cl : classes)
            for (int v : cl) pos[v] = at++;
        Code c = encode(g, pos, nullptr, nullptr);
        if (!have || c < best) {
            best = std::move(c);
            best_pos = pos;
            hits = 1;
            have = true;
        } else if (c == best) {
            ++hits;
        }
        int k = ncolors - 1;
        while (k >= 0 && !std::next_permutation(classes[k].begin(), classes[k].end())) --k;
        if (k < 0) break;
    }

    std::vector<EdgeCode> es;
    std::vector<std::array<int, 3>> ts;
    encode(g, best_pos, &es, &ts);

    CanonicalGraph out;
    DualGraph& c = out.graph;
    c.vertices.resize(nv);
    for (int v = 0; v < nv; ++v) c.vertices[best_pos[v]] = g.vertices[v];
    for (const auto& e : es) c.add_edge(e.va, e.pa, e.vb, e.pb);
    for (const auto& t : ts) c.tails.push_back({t[1], t[0], t[2]});

    // Automorphisms fixing every vertex: permutations of parallel identical
    // edges and flips of symmetric self-loops.
    std::uint64_t kernel = 1;
    for (std::size_t i = 0; i < es.size();) {
        std::size_t j = i;
        while (j < es.size() && es[j] == es[i]) ++j;
        const std::uint64_t mult = j - i;
        for (std::uint64_t f = 2; f <= mult; ++f) kernel *= f;
        if (es[i].va == es[i].vb && es[i].pa == es[i].pb) kernel <<= mult;
        i = j;
    }
    out.automorphisms = hits * kernel;
    out.key = serialize(c);
    return out;
}

std::string serialize(const DualGraph& g) {
    std::string s = "V=";
    for (const auto& v : g.vertices) {
        s += "(" + std::to_string(v.genus) + ";";
        for (std::size_t i = 0; i < v.kappa.size(); ++i) s += (i ? "," : "") + std::to_string(v.kappa[i]);
        s += ")";
    }
    s += " | E=";
    for (const auto& e : g.edges) s += "(" + std::to_string(e.first) + "," + std::to_string(e.second) + ")";
    s += " | T=";
    for (const auto& t : g.tails)
        s += "(" + marking_name(t.marking) + "," + std::to_string(t.vertex) + "," + std::to_string(t.psi) + ")";
    s += " | H=";
    for (std::size_t h = 0; h < g.half_edges.size(); ++h)
        s += "(" + std::to_string(g.half_edges[h].vertex) + "," + std::to_string(g.half_edges[h].psi) + "," +
             std::to_string(h) + ")";
    return s;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

int to_int(std::string_view s) {
    s = trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw GraphError("bad integer in graph key: '" + std::string(s) + "'");
    return v;
}

// Contents of each "( ... )" group.
std::vector<std::string_view> groups(std::string_view s) {
    std::vector<std::string_view> out;
    s = trim(s);
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == ' ') {
            ++i;
            continue;
        }
        if (s[i] != '(') throw GraphError("expected '(' in graph key section: " + std::string(s));
        const std::size_t close = s.find(')', i);
        if (close == std::string_view::npos) throw GraphError("unbalanced '(' in graph key");
        out.push_back(s.substr(i + 1, close - i - 1));
        i = close + 1;
    }
    return out;
}

}  // namespace

DualGraph parse_graph(std::string_view text) {
    auto sections = split(trim(text), '|');
    if (sections.size() != 4) throw GraphError("graph key needs 4 sections V|E|T|H: " + std::string(text));
    auto body = [&](std::size_t i, const char* tag) {
        std::string_view s = trim(sections[i]);
        const std::string prefix = std::string(tag) + "=";
        if (s.substr(0, prefix.size()) != prefix) throw GraphError("graph key section must start with " + prefix);
        return s.substr(prefix.size());
    };
    DualGraph g;
    for (auto grp : groups(body(0, "V"))) {
        auto parts = split(grp, ';');
        if (parts.size() != 2) throw GraphError("vertex entry needs 'g;kappa': " + std::string(grp));
        Vertex v;
        v.genus = to_int(parts[0]);
        if (!trim(parts[1]).empty())
            for (auto k : split(parts[1], ',')) v.kappa.push_back(to_int(k));
        std::sort(v.kappa.begin(), v.kappa.end());
        g.vertices.push_back(std::move(v));
    }
    std::vector<std::pair<int, int>> raw_edges;
    for (auto grp : groups(body(1, "E"))) {
        auto parts = split(grp, ',');
        if (parts.size() != 2) throw GraphError("edge entry needs two labels: " + std::string(grp));
        raw_edges.push_back({to_int(parts[0]), to_int(parts[1])});
    }
    for (auto grp : groups(body(2, "T"))) {
        auto parts = split(grp, ',');
        if (parts.size() != 3) throw GraphError("tail entry needs 'marking,vertex,psi': " + std::string(grp));
        g.tails.push_back({to_int(parts[1]), parse_marking(trim(parts[0])), to_int(parts[2])});
    }
    std::map<int, HalfEdge> hs;
    for (auto grp : groups(body(3, "H"))) {
        auto parts = split(grp, ',');
        if (parts.size() != 3) throw GraphError("half-edge entry needs 'vertex,psi,label': " + std::string(grp));
        const int label = to_int(parts[2]);
        if (!hs.emplace(label, HalfEdge{to_int(parts[0]), to_int(parts[1])}).second)
            throw GraphError("duplicate half-edge label " + std::to_string(label));
    }
    std::map<int, int> index;
    for (const auto& [label, h] : hs) {
        index[label] = static_cast<int>(g.half_edges.size());
        g.half_edges.push_back(h);
    }
    for (auto [a, b] : raw_edges) {
        if (!index.count(a) || !index.count(b)) throw GraphError("edge refers to unknown half-edge label");
        g.edges.push_back({index[a], index[b]});
    }
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Ambient spaces

Factor::Factor(int g, std::vector<Marking> m) : genus(g), markings(std::move(m)) {
    std::sort(markings.begin(), markings.end());
}

std::string Factor::str() const {
    std::string s = "M(" + std::to_string(genus) + ";";
    for (std::size_t i = 0; i < markings.size(); ++i) s += (i ? "," : "") + marking_name(markings[i]);
    return s + ")";
}

AmbientSpace::AmbientSpace(std::vector<Factor> f) : factors(std::move(f)) {}

AmbientSpace AmbientSpace::single(int genus, int n) { return AmbientSpace({Factor(genus, standard_markings(n))}); }

int AmbientSpace::dimension() const {
    int d = 0;
    for (const auto& f : factors) d += f.dimension();
    return d;
}

std::string AmbientSpace::str() const {
    std::string s;
    for (std::size_t i = 0; i < factors.size(); ++i) s += (i ? " x " : "") + factors[i].str();
    return s;
}

std::vector<Marking> standard_markings(int n) {
    std::vector<Marking> m(n);
    std::iota(m.begin(), m.end(), 1);
    return m;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

void split_vertex_all(const DualGraph& g, int v, std::vector<DualGraph>& out) {
    std::vector<int> hs, ts;
    for (int h = 0; h < static_cast<int>(g.half_edges.size()); ++h)
        if (g.half_edges[h].vertex == v) hs.push_back(h);
    for (int t = 0; t < static_cast<int>(g.tails.size()); ++t)
        if (g.tails[t].vertex == v) ts.push_back(t);
    const int items = static_cast<int>(hs.size() + ts.size());
    const int gv = g.vertices[v].genus;
    for (unsigned mask = 0; mask < (1u << items); ++mask) {
        const int na = std::popcount(mask);
        const int nb = items - na;
        for (int g1 = 0; g1 <= gv; ++g1) {
            const int g2 = gv - g1;
            if (2 * g1 - 2 + na + 1 <= 0 || 2 * g2 - 2 + nb + 1 <= 0) continue;
            DualGraph h = g;
            h.vertices[v].genus = g1;
            const int w = h.add_vertex(g2);
            for (int i = 0; i < items; ++i) {
                if (mask & (1u << i)) continue;
                if (i < static_cast<int>(hs.size()))
                    h.half_edges[hs[i]].vertex = w;
                else
                    h.tails[ts[i - hs.size()]].vertex = w;
            }
            h.add_edge(v, 0, w, 0);
            out.push_back(std::move(h));
        }
    }
}

// All ways to write `total` as an ordered sum of `slots` nonnegative parts.
void compositions(int total, int slots, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (slots == 0) {
        if (total == 0) out.push_back(cur);
        return;
    }
    if (slots == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int a = 0; a <= total; ++a) {
        cur.push_back(a);
        compositions(total - a, slots - 1, cur, out);
        cur.pop_back();
    }
}

void partitions(int total, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (total == 0) {
        std::vector<int> p(cur.rbegin(), cur.rend());
        out.push_back(std::move(p));
        return;
    }
    for (int a = std::min(total, max_part); a >= 1; --a) {
        cur.push_back(a);
        partitions(total - a, a, cur, out);
        cur.pop_back();
    }
}

// Decorations of a single vertex with budget r: (kappa, psi values for its slots).
struct VertexDecoration {
    std::vector<int> kappa;
    std::vector<int> psi;
};

std::vector<VertexDecoration> vertex_decorations(int r, int slots) {
    std::vector<VertexDecoration> out;
    for (int c = 0; c <= r; ++c) {
        std::vector<std::vector<int>> parts;
        std::vector<int> cur;
        partitions(c, c, cur, parts);
        std::vector<std::vector<int>> comps;
        compositions(r - c, slots, cur, comps);
        for (const auto& p : parts)
            for (const auto& s : comps) out.push_back({p, s});
    }
    return out;
}

bool shape_less(const CanonicalGraph& a, const CanonicalGraph& b) {
    if (a.graph.edge_count() != b.graph.edge_count()) return a.graph.edge_count() < b.graph.edge_count();
    return a.key < b.key;
}

}  // namespace

std::vector<CanonicalGraph> enumerate_stable_shapes(const Factor& factor, int max_edges) {
    if (!factor.stable()) throw GraphError("unstable ambient " + factor.str());
    std::map<std::string, CanonicalGraph> all;
    std::vector<DualGraph> level{DualGraph::smooth(factor.genus, factor.markings)};
    for (const auto& g : level) {
        auto c = canonicalize(g);
        all.emplace(c.key, c);
    }
    for (int e = 1; e <= max_edges; ++e) {
        std::map<std::string, CanonicalGraph> next;
        for (const auto& g : level) {
            std::vector<DualGraph> cand;
            for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
                if (g.vertices[v].genus >= 1) {
                    DualGraph h = g;
                    --h.vertices[v].genus;
                    h.add_edge(v, 0, v, 0);
                    cand.push_back(std::move(h));
                }
                split_vertex_all(g, v, cand);
            }
            for (const auto& h : cand) {
                auto c = canonicalize(h);
                next.emplace(c.key, std::move(c));
            }
        }
        level.clear();
        for (auto& [k, c] : next) {
            level.push_back(c.graph);
            all.emplace(k, std::move(c));
        }
        if (level.empty()) break;
    }
    std::vector<CanonicalGraph> out;
    for (auto& [k, c] : all) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), shape_less);
    return out;
}

std::vector<CanonicalGraph> enumerate_graphs(const Factor& factor, int degree) {
    if (!factor.stable()) throw GraphError("unstable ambient " + factor.str());
    if (degree < 0 || degree > factor.dimension())
        throw GraphError("degree " + std::to_string(degree) + " outside [0, " + std::to_string(factor.dimension()) +
                         "] for " + factor.str());
    std::map<std::string, CanonicalGraph> found;
    for (const auto& shape : enumerate_stable_shapes(factor, degree)) {
        const DualGraph& s = shape.graph;
        const int nv = static_cast<int>(s.vertices.size());
        const int budget = degree - s.edge_count();
        // psi slots per vertex: half-edges then tails
        std::vector<std::vector<std::pair<bool, int>>> slots(nv);
        for (int h = 0; h < static_cast<int>(s.half_edges.size()); ++h) slots[s.half_edges[h].vertex].push_back({true, h});
        for (int t = 0; t < static_cast<int>(s.tails.size()); ++t) slots[s.tails[t].vertex].push_back({false, t});
        std::vector<int> cap(nv);
        for (int v = 0; v < nv; ++v) cap[v] = 3 * s.vertices[v].genus - 3 + s.valence(v);

        std::vector<std::vector<int>> budgets;
        std::vector<int> cur;
        compositions(budget, nv, cur, budgets);
        for (const auto& b : budgets) {
            bool ok = true;
            for (int v = 0; v < nv; ++v) ok = ok && b[v] <= cap[v];
            if (!ok) continue;
            std::vector<std::vector<VertexDecoration>> per(nv);
            for (int v = 0; v < nv; ++v) per[v] = vertex_decorations(b[v], static_cast<int>(slots[v].size()));
            std::vector<std::size_t> idx(nv, 0);
            for (;;) {
                DualGraph g = s;
                for (int v = 0; v < nv; ++v) {
                    const auto& d = per[v][idx[v]];
                    g.vertices[v].kappa = d.kappa;
                    for (std::size_t i = 0; i < slots[v].size(); ++i) {
                        auto [is_half, j] = slots[v][i];
                        (is_half ? g.half_edges[j].psi : g.tails[j].psi) = d.psi[i];
                    }
                }
                auto c = canonicalize(g);
                found.emplace(c.key, std::move(c));
                int k = nv - 1;
                while (k >= 0 && ++idx[k] == per[k].size()) idx[k--] = 0;
                if (k < 0) break;
            }
        }
    }
    std::vector<CanonicalGraph> out;
    for (auto& [k, c] : found) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), shape_less);
    return out;
}

// ---------------------------------------------------------------------------
// kappa calculus

namespace {

// Set partitions of {0..m-1}, as block-index vectors.
void set_partitions(int m, int i, std::vector<int>& block, int nblocks, std::vector<std::pair<std::vector<int>, int>>& out) {
    if (i == m) {
        out.push_back({block, nblocks});
        return;
    }
    for (int b = 0; b <= nblocks; ++b) {
        block[i] = b;
        set_partitions(m, i + 1, block, std::max(nblocks, b + 1), out);
    }
}

template <class Weight>
KappaPolynomial partition_sum(const std::vector<int>& K, Weight weight) {
    const int m = static_cast<int>(K.size());
    std::vector<std::pair<std::vector<int>, int>> parts;
    std::vector<int> block(m);
    set_partitions(m, 0, block, 0, parts);
    KappaPolynomial out;
    for (const auto& [blk, nb] : parts) {
        std::vector<int> sums(nb, 0), sizes(nb, 0);
        for (int i = 0; i < m; ++i) {
            sums[blk[i]] += K[i];
            ++sizes[blk[i]];
        }
        std::sort(sums.begin(), sums.end());
        out[sums] += weight(sizes, m, nb);
    }
    for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

}  // namespace

KappaPolynomial kappa_multi_to_monomials(const std::vector<int>& K) {
    // cycles of a permutation on a block of size s: (s-1)! cyclic orders
    return partition_sum(K, [](const std::vector<int>& sizes, int, int) {
        Rational w(1);
        for (int s : sizes) w *= factorial(s - 1);
        return w;
    });
}

KappaPolynomial kappa_monomial_to_multi(const std::vector<int>& singles) {
    return partition_sum(singles, [](const std::vector<int>&, int m, int nb) {
        return Rational((m - nb) % 2 == 0 ? 1 : -1);
    });
}

std::vector<KappaPullbackTerm> kappa_pullback(PullbackKind kind, const std::vector<int>& K) {
    std::vector<int> sorted = K;
    std::sort(sorted.begin(), sorted.end());
    std::vector<KappaPullbackTerm> out;
    switch (kind) {
    case PullbackKind::nonseparating:
        out.push_back({Rational(1), sorted, {}, 0});
        break;
    case PullbackKind::forgetful: {
        out.push_back({Rational(1), sorted, {}, 0});
        std::map<std::pair<std::vector<int>, int>, Rational> acc;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::vector<int> rest = sorted;
            rest.erase(rest.begin() + static_cast<long>(i));
            acc[{rest, sorted[i]}] -= Rational(1);
        }
        for (const auto& [k, c] : acc) out.push_back({c, k.first, {}, k.second});
        break;
    }
    case PullbackKind::separating: {
        const int m = static_cast<int>(sorted.size());
        std::map<std::pair<std::vector<int>, std::vector<int>>, Rational> acc;
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            std::vector<int> l, r;
            for (int i = 0; i < m; ++i) ((mask & (1u << i)) ? l : r).push_back(sorted[i]);
            acc[{l, r}] += Rational(1);
        }
        for (const auto& [k, c] : acc) out.push_back({c, k.first, k.second, 0});
        break;
    }
    }
    return out;
}

}  // namespace taut
