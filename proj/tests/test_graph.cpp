#include "taut/corr.hpp"
#include "taut/graph.hpp"
#include "taut/graph_sum.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>

using namespace taut;

namespace {

DualGraph loop_graph() {
    DualGraph g;
    g.add_vertex(0);
    g.add_edge(0, 0, 0, 0);
    g.tails.push_back({0, 1, 0});
    return g;
}

// Vertex and half-edge indices permuted, edge orientations and tail order shuffled.
DualGraph relabel(const DualGraph& g, std::mt19937& rng) {
    std::vector<int> pv(g.vertices.size()), ph(g.half_edges.size());
    std::iota(pv.begin(), pv.end(), 0);
    std::iota(ph.begin(), ph.end(), 0);
    std::shuffle(pv.begin(), pv.end(), rng);
    std::shuffle(ph.begin(), ph.end(), rng);
    DualGraph out;
    out.vertices.resize(g.vertices.size());
    out.half_edges.resize(g.half_edges.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) out.vertices[static_cast<std::size_t>(pv[v])] = g.vertices[v];
    for (std::size_t h = 0; h < g.half_edges.size(); ++h)
        out.half_edges[static_cast<std::size_t>(ph[h])] = {pv[static_cast<std::size_t>(g.half_edges[h].vertex)],
                                                           g.half_edges[h].psi};
    for (const auto& e : g.edges) {
        Edge f{ph[static_cast<std::size_t>(e.first)], ph[static_cast<std::size_t>(e.second)]};
        if (rng() % 2) std::swap(f.first, f.second);
        out.edges.push_back(f);
    }
    std::shuffle(out.edges.begin(), out.edges.end(), rng);
    for (const auto& t : g.tails) out.tails.push_back({pv[static_cast<std::size_t>(t.vertex)], t.marking, t.psi});
    std::shuffle(out.tails.begin(), out.tails.end(), rng);
    return out;
}

// Counts half-edge permutations (with the induced vertex map) preserving all decorations.
std::uint64_t brute_force_automorphisms(const DualGraph& g) {
    const std::size_t H = g.half_edges.size(), V = g.vertices.size();
    std::vector<int> partner(H);
    for (const auto& e : g.edges) {
        partner[static_cast<std::size_t>(e.first)] = e.second;
        partner[static_cast<std::size_t>(e.second)] = e.first;
    }
    std::vector<int> perm(H), vperm(V);
    std::iota(perm.begin(), perm.end(), 0);
    std::iota(vperm.begin(), vperm.end(), 0);
    std::uint64_t count = 0;
    do {
        do {
            bool ok = true;
            for (std::size_t v = 0; v < V && ok; ++v) {
                const auto& a = g.vertices[v];
                const auto& b = g.vertices[static_cast<std::size_t>(vperm[v])];
                ok = a.genus == b.genus && a.kappa == b.kappa;
            }
            for (std::size_t h = 0; h < H && ok; ++h) {
                const auto& a = g.half_edges[h];
                const auto& b = g.half_edges[static_cast<std::size_t>(perm[h])];
                ok = b.psi == a.psi && b.vertex == vperm[static_cast<std::size_t>(a.vertex)] &&
                     perm[static_cast<std::size_t>(partner[h])] == partner[static_cast<std::size_t>(perm[h])];
            }
            for (const auto& t : g.tails)
                if (ok) ok = vperm[static_cast<std::size_t>(t.vertex)] == t.vertex;
            if (ok) ++count;
        } while (std::next_permutation(vperm.begin(), vperm.end()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return count;
}

void compositions(int total, int parts, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> cur;
    std::function<void(int, int)> rec = [&](int left, int slots) {
        if (slots == 0) {
            if (left == 0) fn(cur);
            return;
        }
        for (int x = 0; x <= left; ++x) {
            cur.push_back(x);
            rec(left - x, slots - 1);
            cur.pop_back();
        }
    };
    rec(total, parts);
}

void partitions(int total, int max_part, std::vector<int>& cur, const std::function<void(const std::vector<int>&)>& fn) {
    if (total == 0) {
        fn(cur);
        return;
    }
    for (int x = std::min(total, max_part); x >= 1; --x) {
        cur.push_back(x);
        partitions(total - x, x, cur, fn);
        cur.pop_back();
    }
}

// Generate-and-filter over raw vertex/edge/tail/decoration data, deduplicated by canonical key.
std::set<std::string> slow_enumeration(int genus, int n, int degree) {
    std::set<std::string> keys;
    for (int E = 0; E <= degree; ++E)
        for (int V = 1; V <= E + 1; ++V) {
            const int vertex_genus = genus - (E - V + 1);
            if (vertex_genus < 0) continue;
            std::vector<std::pair<int, int>> pairs;
            for (int a = 0; a < V; ++a)
                for (int b = a; b < V; ++b) pairs.emplace_back(a, b);
            std::vector<int> chosen;
            std::function<void(int)> edges_rec = [&](int start) {
                if (static_cast<int>(chosen.size()) == E) {
                    compositions(vertex_genus, V, [&](const std::vector<int>& gv) {
                        int tail_maps = 1;
                        for (int i = 0; i < n; ++i) tail_maps *= V;
                        for (int code = 0; code < tail_maps; ++code) {
                            DualGraph base;
                            for (int v = 0; v < V; ++v) base.add_vertex(gv[static_cast<std::size_t>(v)]);
                            for (int p : chosen)
                                base.add_edge(pairs[static_cast<std::size_t>(p)].first, 0,
                                              pairs[static_cast<std::size_t>(p)].second, 0);
                            for (int i = 0, c = code; i < n; ++i, c /= V) base.tails.push_back({c % V, i + 1, 0});
                            if (!base.connected()) continue;
                            bool stable = true;
                            for (int v = 0; v < V; ++v)
                                stable = stable && 2 * base.vertices[static_cast<std::size_t>(v)].genus - 2 + base.valence(v) > 0;
                            if (!stable) continue;
                            const int left = degree - E;
                            compositions(left, V + 1, [&](const std::vector<int>& split) {
                                std::vector<std::vector<int>> kappas(static_cast<std::size_t>(V));
                                std::function<void(int)> kap = [&](int v) {
                                    if (v == V) {
                                        const int slots = n + 2 * E;
                                        compositions(split[static_cast<std::size_t>(V)], slots, [&](const std::vector<int>& psi) {
                                            DualGraph g = base;
                                            for (int u = 0; u < V; ++u) {
                                                auto k = kappas[static_cast<std::size_t>(u)];
                                                std::sort(k.begin(), k.end());
                                                g.vertices[static_cast<std::size_t>(u)].kappa = k;
                                            }
                                            for (int i = 0; i < n; ++i) g.tails[static_cast<std::size_t>(i)].psi = psi[static_cast<std::size_t>(i)];
                                            for (int h = 0; h < 2 * E; ++h)
                                                g.half_edges[static_cast<std::size_t>(h)].psi = psi[static_cast<std::size_t>(n + h)];
                                            if (g.vanishes_by_degree()) return;
                                            keys.insert(canonicalize(g).key);
                                        });
                                        return;
                                    }
                                    std::vector<int> cur;
                                    partitions(split[static_cast<std::size_t>(v)], split[static_cast<std::size_t>(v)], cur,
                                               [&](const std::vector<int>& part) {
                                                   kappas[static_cast<std::size_t>(v)] = part;
                                                   kap(v + 1);
                                               });
                                };
                                kap(0);
                            });
                        }
                    });
                    return;
                }
                for (int p = start; p < static_cast<int>(pairs.size()); ++p) {
                    chosen.push_back(p);
                    edges_rec(p);
                    chosen.pop_back();
                }
            };
            edges_rec(0);
        }
    return keys;
}

std::vector<DualGraph> sample_graphs() {
    std::vector<DualGraph> out;
    for (auto [g, n, d] : std::vector<std::tuple<int, int, int>>{{1, 1, 1}, {1, 2, 2}, {2, 0, 2}, {2, 1, 2}, {0, 5, 2}, {1, 3, 2}})
        for (const auto& c : enumerate_graphs(Factor(g, standard_markings(n)), d)) out.push_back(c.graph);
    return out;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("automorphism examples") {
    CHECK(canonicalize(loop_graph()).automorphisms == 2);
    CHECK(brute_force_automorphisms(loop_graph()) == 2);
    DualGraph smooth = DualGraph::smooth(2, {1, 2});
    smooth.vertices[0].kappa = {1, 1};
    smooth.tails[1].psi = 3;
    CHECK(canonicalize(smooth).automorphisms == 1);
    DualGraph banana;  // two genus-0 vertices joined by three edges: Aut = 2 * 3!
    banana.add_vertex(0);
    banana.add_vertex(0);
    for (int i = 0; i < 3; ++i) banana.add_edge(0, 0, 1, 0);
    CHECK(canonicalize(banana).automorphisms == 12);
    CHECK(brute_force_automorphisms(banana) == 12);
}

TEST_CASE("automorphisms agree with brute force") {
    int compared = 0;
    for (const auto& g : sample_graphs()) {
        if (g.half_edges.size() > 8) continue;
        INFO(canonicalize(g).key);
        CHECK(canonicalize(g).automorphisms == brute_force_automorphisms(g));
        ++compared;
    }
    CHECK(compared > 100);
}

TEST_CASE("canonical keys are invariant under relabeling and idempotent") {
    std::mt19937 rng(11);
    for (const auto& g : sample_graphs()) {
        const CanonicalGraph c = canonicalize(g);
        CHECK(canonicalize(c.graph).key == c.key);
        for (int trial = 0; trial < 5; ++trial) {
            const CanonicalGraph r = canonicalize(relabel(g, rng));
            CHECK(r.key == c.key);
            CHECK(r.automorphisms == c.automorphisms);
        }
        CHECK(canonicalize(parse_graph(c.key)).key == c.key);
    }
}

TEST_CASE("distinct decorations give distinct keys") {
    DualGraph a;
    a.add_vertex(0);
    a.add_vertex(1);
    a.add_edge(0, 1, 1, 0);
    a.tails.push_back({0, 1, 0});
    a.tails.push_back({0, 2, 0});
    DualGraph b = a;
    b.half_edges[0].psi = 0;
    b.half_edges[1].psi = 1;
    CHECK(canonicalize(a).key != canonicalize(b).key);
}

TEST_CASE("validation names the problem") {
    DualGraph g = DualGraph::smooth(0, {1, 2});
    CHECK_THROWS_AS(g.validate(), GraphError);
    DualGraph h = DualGraph::smooth(1, {1});
    h.vertices[0].kappa = {0};
    CHECK_THROWS_AS(h.validate(), GraphError);
    DualGraph ok = loop_graph();
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.genus() == 1);
    CHECK(ok.degree() == 1);
}

TEST_CASE("enumeration examples") {
    CHECK(enumerate_graphs(Factor(0, {1, 2, 3}), 0).size() == 1);
    const auto m11 = enumerate_graphs(Factor(1, {1}), 1);
    CHECK(m11.size() == 3);
    std::set<std::string> kinds;
    for (const auto& c : m11) {
        if (c.graph.edge_count() == 1) kinds.insert("loop");
        else if (!c.graph.vertices[0].kappa.empty()) kinds.insert("kappa");
        else kinds.insert("psi");
    }
    CHECK(kinds.size() == 3);
    CHECK(enumerate_graphs(Factor(2, {}), 0).size() == 1);
    CHECK(enumerate_graphs(Factor(0, {1, 2, 3, 4}), 1).size() == 8);
}

TEST_CASE("enumeration matches a generate-and-filter oracle") {
    for (int g = 0; g <= 2; ++g)
        for (int n = 0; n <= 2; ++n) {
            const Factor f(g, standard_markings(n));
            if (!f.stable()) continue;
            for (int d = 0; d <= std::min(3, f.dimension()); ++d) {
                INFO("g=" << g << " n=" << n << " d=" << d);
                const auto listed = enumerate_graphs(f, d);
                std::set<std::string> keys;
                for (const auto& c : listed) {
                    CHECK(canonicalize(c.graph).key == c.key);
                    CHECK_NOTHROW(c.graph.validate());
                    CHECK(c.graph.degree() == d);
                    keys.insert(c.key);
                }
                CHECK(keys.size() == listed.size());
                CHECK(keys == slow_enumeration(g, n, d));
            }
        }
}

TEST_CASE("kappa expansion examples") {
    const auto two = kappa_multi_to_monomials({2, 5});
    CHECK(two == KappaPolynomial{{{2, 5}, Rational(1)}, {{7}, Rational(1)}});
    const auto three = kappa_multi_to_monomials({1, 2, 4});
    CHECK(three == KappaPolynomial{{{1, 2, 4}, Rational(1)},
                                   {{3, 4}, Rational(1)},
                                   {{2, 5}, Rational(1)},
                                   {{1, 6}, Rational(1)},
                                   {{7}, Rational(2)}});
    CHECK(kappa_multi_to_monomials({3}) == KappaPolynomial{{{3}, Rational(1)}});
    CHECK(kappa_multi_to_monomials({1, 1}) == KappaPolynomial{{{1, 1}, Rational(1)}, {{2}, Rational(1)}});
}

TEST_CASE("kappa expansion coefficients sum to m! and invert") {
    std::mt19937 rng(3);
    for (int m = 1; m <= 6; ++m)
        for (int trial = 0; trial < 4; ++trial) {
            std::vector<int> K(static_cast<std::size_t>(m));
            for (auto& k : K) k = 1 + static_cast<int>(rng() % 3);
            std::sort(K.begin(), K.end());
            Rational sum;
            for (const auto& [mono, c] : kappa_multi_to_monomials(K)) sum += c;
            CHECK(sum == factorial(m));
            KappaPolynomial back;
            for (const auto& [multi, c] : kappa_monomial_to_multi(K))
                for (const auto& [mono, d] : kappa_multi_to_monomials(multi)) back[mono] += c * d;
            std::erase_if(back, [](const auto& kv) { return kv.second.is_zero(); });
            CHECK(back == KappaPolynomial{{K, Rational(1)}});
        }
}

TEST_CASE("kappa pullback examples") {
    const auto f = kappa_pullback(PullbackKind::forgetful, {3});
    REQUIRE(f.size() == 2);
    CHECK((f[0].coefficient == Rational(1) && f[0].left == std::vector<int>{3} && f[0].psi_new == 0));
    CHECK((f[1].coefficient == Rational(-1) && f[1].left.empty() && f[1].psi_new == 3));
    const auto s = kappa_pullback(PullbackKind::separating, {2});
    REQUIRE(s.size() == 2);
    std::set<std::pair<std::vector<int>, std::vector<int>>> sides;
    for (const auto& t : s) {
        CHECK(t.coefficient == Rational(1));
        sides.insert({t.left, t.right});
    }
    CHECK(sides == std::set<std::pair<std::vector<int>, std::vector<int>>>{{{2}, {}}, {{}, {2}}});
    const auto ns = kappa_pullback(PullbackKind::nonseparating, {1, 2});
    REQUIRE(ns.size() == 1);
    CHECK(ns[0].left == std::vector<int>{1, 2});
}

// Integral of pi^*(kappa_K) psi_{n+1}^a over M_{g,n+1} against the projection formula on M_{g,n}.
TEST_CASE("forgetful kappa pullback against integrals") {
    int checked = 0;
    for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 3}, {0, 4}, {1, 1}, {1, 2}, {2, 0}, {2, 1}, {1, 3}})
        for (int a = 0; a <= 3 * g - 2 + n; ++a) {
            const int kdeg = 3 * g - 2 + n - a;
            std::vector<int> cur;
            partitions(kdeg, kdeg, cur, [&](const std::vector<int>& part) {
                std::vector<int> K(part.rbegin(), part.rend());
                Rational lhs;
                for (const auto& t : kappa_pullback(PullbackKind::forgetful, K)) {
                    std::vector<int> psi(static_cast<std::size_t>(n), 0);
                    psi.push_back(t.psi_new + a);
                    lhs += t.coefficient * integral_psi_kappa(g, psi, t.left);
                }
                const std::vector<int> zeros(static_cast<std::size_t>(n), 0);
                Rational rhs;
                if (a == 1) {
                    rhs = Rational(2 * g - 2 + n) * integral_psi_kappa(g, zeros, K);
                } else if (a >= 2) {
                    for (auto [mono, c] : kappa_multi_to_monomials(K)) {
                        auto singles = mono;
                        singles.push_back(a - 1);
                        rhs += c * integral_psi_kappa_product(g, zeros, singles);
                    }
                }
                INFO("g=" << g << " n=" << n << " a=" << a);
                CHECK(lhs == rhs);
                ++checked;
            });
        }
    CHECK(checked > 20);
    // the M_{1,2} / M_{1,1} case written out
    const Rational on_m12 = integral_psi_kappa(1, {0, 1}, {1}) - integral_psi_kappa(1, {0, 2}, {});
    CHECK(on_m12 == integral_psi_kappa(1, {0}, {1}));
    CHECK(on_m12 == Rational(1, 24));
}

TEST_CASE("graph sums prune, stay homogeneous and round trip") {
    DualGraph psi = DualGraph::smooth(1, {1});
    psi.tails[0].psi = 1;
    GraphSum L(AmbientSpace::single(1, 1));
    L.add(psi, Rational(1));
    L.add(loop_graph(), Rational(-1, 12));
    CHECK(L.size() == 2);
    CHECK(L.degree() == 1);
    CHECK(L.dimension() == 0);
    CHECK_THROWS(L.add(DualGraph::smooth(1, {1}), Rational(1)));
    const GraphSum back = parse_graph_sum(L.str());
    CHECK(back.str() == L.str());
    CHECK(back.ambient() == L.ambient());
    L.add(psi, Rational(-1));
    CHECK(L.size() == 1);
    CHECK((L - L).empty());
    CHECK(parse_graph_sum("# comment only\n").empty());
}

}
