#include "taut/lee.hpp"

#include "taut/linalg.hpp"
#include "taut/parallel.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

namespace taut {

std::string PathStep::str() const {
    std::string s = "f" + std::to_string(factor);
    if (k != 1) s += ":tau" + std::to_string(k);
    return s + ":" + component.str();
}

std::string GorensteinTest::id() const {
    std::string s;
    for (const auto& p : path) s += p.str() + " / ";
    return s + "<" + monomial.str() + ">";
}

// ---------------------------------------------------------------------------
// Direct recursion

namespace {

std::string ks_key(const std::vector<int>& ks) {
    std::string s;
    for (int k : ks) s += std::to_string(k) + ",";
    return s;
}

class VerdictCache {
public:
    bool find(const std::string& key, Verdict& out) const {
        std::shared_lock lock(mutex_);
        auto it = table_.find(key);
        if (it == table_.end()) return false;
        out = it->second;
        return true;
    }
    void store(const std::string& key, const Verdict& v) {
        std::unique_lock lock(mutex_);
        table_.emplace(key, v);
    }

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, Verdict> table_;
};

VerdictCache& verdict_cache() {
    static VerdictCache c;
    return c;
}

Verdict check_rec(const GraphSum& L, int depth, const std::vector<int>& ks) {
    if (L.empty()) return {};
    const std::string key = ks_key(ks) + "\n" + L.ambient().str() + "\n" + L.str();
    Verdict v;
    if (verdict_cache().find(key, v)) return v;
    const int dim = L.dimension();
    if (dim < 0) throw std::invalid_argument("check: class degree exceeds ambient dimension");
    for (const auto& M : monomials_of_degree(L.ambient(), dim)) {
        Rational value = pair(L, M);
        if (!value.is_zero()) {
            v.status = VerdictStatus::fails;
            v.witness = Witness{GorensteinTest{{}, M}, value};
            verdict_cache().store(key, v);
            return v;
        }
    }
    for (int k : ks) {
        if (k > dim) continue;
        for (int i = 0; i < static_cast<int>(L.ambient().factors.size()); ++i) {
            for (const auto& [comp, sub] : tau_on_factor(k, L, i, depth)) {
                Verdict r = check_rec(sub, depth + 1, ks);
                if (!r.vanishing()) {
                    r.witness->test.path.insert(r.witness->test.path.begin(), PathStep{i, k, comp});
                    verdict_cache().store(key, r);
                    return r;
                }
            }
        }
    }
    verdict_cache().store(key, v);
    return v;
}

int max_depth_label(const GraphSum& L) {
    int depth = 0;
    for (const auto& f : L.ambient().factors)
        for (Marking m : f.markings)
            if (is_reserved(m)) depth = std::max(depth, (-m - 1) / 2 + 1);
    return depth;
}

}  // namespace

Verdict check_with_tau(const GraphSum& L, const std::vector<int>& ks) {
    for (int k : ks)
        if (k < 1) throw std::invalid_argument("check: tau index must be positive");
    return check_rec(L, max_depth_label(L), ks);
}

Verdict check(const GraphSum& L) { return check_with_tau(L, {1}); }

Rational evaluate_test(const GraphSum& L, const GorensteinTest& test) {
    GraphSum cur = L;
    const int base = max_depth_label(L);
    for (std::size_t s = 0; s < test.path.size(); ++s) {
        if (cur.empty()) return Rational(0);
        const auto& step = test.path[s];
        auto res = tau_on_factor(step.k, cur, step.factor, base + static_cast<int>(s));
        auto it = res.find(step.component);
        if (it == res.end()) return Rational(0);
        cur = it->second;
    }
    if (cur.empty()) return Rational(0);
    return pair(cur, test.monomial);
}

// ---------------------------------------------------------------------------
// Test bases

namespace {

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e) {
    std::uint64_t r = 1;
    while (e) {
        if (e & 1) r = mulmod(r, a);
        a = mulmod(a, a);
        e >>= 1;
    }
    return r;
}

std::uint64_t to_mod(const Rational& q) {
    mpz_class p(std::to_string(kPrime));
    mpz_class n = q.numerator() % p, d = q.denominator() % p;
    if (n < 0) n += p;
    if (d == 0) throw std::runtime_error("denominator divisible by the working prime");
    auto conv = [](const mpz_class& z) { return static_cast<std::uint64_t>(std::stoull(z.get_str())); };
    return mulmod(conv(n), powmod(conv(d), kPrime - 2));
}

// Incremental row-independence test over Z/p.
class ModEchelon {
public:
    bool add(std::vector<std::uint64_t> r) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const std::uint64_t c = r[pivots_[i]];
            if (c == 0) continue;
            const auto& b = rows_[i];
            for (std::size_t j = 0; j < r.size(); ++j)
                if (b[j]) r[j] = (r[j] + kPrime - mulmod(c, b[j])) % kPrime;
        }
        std::size_t p = 0;
        while (p < r.size() && r[p] == 0) ++p;
        if (p == r.size()) return false;
        const std::uint64_t inv = powmod(r[p], kPrime - 2);
        for (auto& x : r) x = mulmod(x, inv);
        rows_.push_back(std::move(r));
        pivots_.push_back(p);
        return true;
    }
    std::size_t rank() const { return rows_.size(); }

private:
    std::vector<std::vector<std::uint64_t>> rows_;
    std::vector<std::size_t> pivots_;
};

struct TestBasis {
    Factor factor;
    int degree = 0;
    std::vector<CanonicalGraph> generators;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<GorensteinTest> tests;
    std::vector<std::vector<Rational>> columns;  // generator -> value of each test

    // Values of all tests on a graph of this space given in standard markings.
    const std::vector<Rational>* column(const CanonicalGraph& g) const {
        auto it = index.find(g.key);
        if (it != index.end()) return &columns[it->second];
        if (!g.graph.vanishes_by_degree())
            throw std::logic_error("graph missing from generator list: " + g.key);
        return nullptr;
    }
};

using TestBasisPtr = std::shared_ptr<const TestBasis>;
TestBasisPtr build_test_basis(int genus, int n, int degree, bool top_monomials, int jobs);

class TestBasisCache {
public:
    TestBasisPtr get(int genus, int n, int degree, int jobs) {
        const auto key = std::make_tuple(genus, n, degree);
        {
            std::lock_guard lock(mutex_);
            auto it = table_.find(key);
            if (it != table_.end()) return it->second;
        }
        TestBasisPtr tb = build_test_basis(genus, n, degree, true, jobs);
        std::lock_guard lock(mutex_);
        return table_.emplace(key, tb).first->second;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, TestBasisPtr> table_;
};

TestBasisCache& test_basis_cache() {
    static TestBasisCache c;
    return c;
}

Marking lift_marking(Marking m, const std::vector<Marking>& actual, int depth_shift) {
    if (m > 0) return actual.at(static_cast<std::size_t>(m - 1));
    const int idx = -m - 1;
    const int depth = idx / 2 + depth_shift;
    return idx % 2 == 0 ? alpha_label(depth) : beta_label(depth);
}

Factor lift_factor(const Factor& f, const std::vector<Marking>& actual, int depth_shift) {
    std::vector<Marking> ms;
    for (Marking m : f.markings) ms.push_back(lift_marking(m, actual, depth_shift));
    return Factor(f.genus, ms);
}

GorensteinTest lift(const GorensteinTest& t, const std::vector<Marking>& actual, int depth_shift, int factor_shift) {
    GorensteinTest out;
    for (const auto& s : t.path) {
        PathStep p{s.factor + factor_shift, s.k, {s.component.kind, {}}};
        for (const auto& f : s.component.factors) p.component.factors.push_back(lift_factor(f, actual, depth_shift));
        out.path.push_back(std::move(p));
    }
    for (const auto& f : t.monomial.factors) {
        PsiKappaFactor x;
        x.kappa = f.kappa;
        for (const auto& [m, e] : f.psi) x.psi[lift_marking(m, actual, depth_shift)] = e;
        out.monomial.factors.push_back(std::move(x));
    }
    return out;
}

CanonicalGraph to_standard(const CanonicalGraph& g, const std::vector<Marking>& actual) {
    DualGraph h = g.graph;
    for (auto& t : h.tails)
        t.marking = static_cast<Marking>(std::lower_bound(actual.begin(), actual.end(), t.marking) - actual.begin()) + 1;
    return canonicalize(h);
}

// Candidate tests contributed by one boundary component at one degree split.
struct Block {
    BoundaryComponentId component;
    std::vector<TestBasisPtr> parts;  // one per component factor
    std::vector<int> degrees;
    std::size_t offset = 0;
    std::size_t size = 0;
};

TestBasisPtr build_test_basis(int genus, int n, int degree, bool top_monomials, int jobs) {
    auto tb = std::make_shared<TestBasis>();
    tb->factor = Factor(genus, standard_markings(n));
    tb->degree = degree;
    tb->generators = enumerate_graphs(tb->factor, degree);
    for (std::size_t j = 0; j < tb->generators.size(); ++j) tb->index.emplace(tb->generators[j].key, j);
    const int dim = tb->factor.dimension();
    const int codim = dim - degree;

    std::vector<GorensteinTest> cand;
    std::vector<PsiKappaMonomial> monos;
    if (top_monomials) monos = monomials_of_degree(tb->factor, codim);
    for (const auto& M : monos) cand.push_back({{}, M});

    std::vector<Block> blocks;
    if (codim >= 1) {
        for (const auto& comp : boundary_components(tb->factor, 0)) {
            if (comp.kind == ComponentKind::nonseparating) {
                const Factor& f = comp.factors[0];
                Block b{comp, {test_basis_cache().get(f.genus, f.size(), degree, jobs)}, {degree}, cand.size(), 0};
                for (const auto& t : b.parts[0]->tests) cand.push_back([&] {
                    GorensteinTest x = lift(t, f.markings, 1, 0);
                    x.path.insert(x.path.begin(), PathStep{0, 1, comp});
                    return x;
                }());
                b.size = cand.size() - b.offset;
                if (b.size) blocks.push_back(std::move(b));
            } else {
                const Factor& f1 = comp.factors[0];
                const Factor& f2 = comp.factors[1];
                for (int d1 = 0; d1 <= degree; ++d1) {
                    const int d2 = degree - d1;
                    if (d1 > f1.dimension() || d2 > f2.dimension()) continue;
                    Block b{comp,
                            {test_basis_cache().get(f1.genus, f1.size(), d1, jobs),
                             test_basis_cache().get(f2.genus, f2.size(), d2, jobs)},
                            {d1, d2},
                            cand.size(),
                            0};
                    for (const auto& t1 : b.parts[0]->tests)
                        for (const auto& t2 : b.parts[1]->tests) {
                            GorensteinTest x = lift(t1, f1.markings, 1, 0);
                            GorensteinTest y = lift(t2, f2.markings, 1 + static_cast<int>(t1.path.size()),
                                                    static_cast<int>(t1.monomial.factors.size()));
                            x.path.insert(x.path.begin(), PathStep{0, 1, comp});
                            x.path.insert(x.path.end(), y.path.begin(), y.path.end());
                            x.monomial.factors.insert(x.monomial.factors.end(), y.monomial.factors.begin(),
                                                      y.monomial.factors.end());
                            cand.push_back(std::move(x));
                        }
                    b.size = cand.size() - b.offset;
                    if (b.size) blocks.push_back(std::move(b));
                }
            }
        }
    }

    const std::size_t ngen = tb->generators.size();
    std::vector<std::vector<Rational>> cols(ngen, std::vector<Rational>(cand.size()));
    parallel_for(ngen, jobs, [&](std::size_t j) {
        GraphSum G(AmbientSpace({tb->factor}));
        G.add_canonical({tb->generators[j]}, Rational(1));
        auto& col = cols[j];
        for (std::size_t r = 0; r < monos.size(); ++r) col[r] = pair(G, monos[r]);
        if (blocks.empty()) return;
        const TauResult res = tau(1, G, 0);
        for (const auto& b : blocks) {
            auto it = res.find(b.component);
            if (it == res.end()) continue;
            for (const auto& [key, term] : it->second.terms()) {
                if (b.parts.size() == 1) {
                    const auto* c = b.parts[0]->column(to_standard(term.factors[0], b.component.factors[0].markings));
                    if (!c) continue;
                    for (std::size_t t = 0; t < b.size; ++t) col[b.offset + t] += term.coefficient * (*c)[t];
                } else {
                    if (term.factors[0].graph.degree() != b.degrees[0]) continue;
                    const auto* c1 = b.parts[0]->column(to_standard(term.factors[0], b.component.factors[0].markings));
                    const auto* c2 = b.parts[1]->column(to_standard(term.factors[1], b.component.factors[1].markings));
                    if (!c1 || !c2) continue;
                    const std::size_t n2 = c2->size();
                    for (std::size_t t1 = 0; t1 < c1->size(); ++t1) {
                        if ((*c1)[t1].is_zero()) continue;
                        const Rational w = term.coefficient * (*c1)[t1];
                        for (std::size_t t2 = 0; t2 < n2; ++t2)
                            if (!(*c2)[t2].is_zero()) col[b.offset + t1 * n2 + t2] += w * (*c2)[t2];
                    }
                }
            }
        }
    });

    // Keep an independent set of candidate rows, in candidate order.
    ModEchelon ech;
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < cand.size() && ech.rank() < ngen; ++r) {
        std::vector<std::uint64_t> row(ngen);
        bool nonzero = false;
        for (std::size_t j = 0; j < ngen; ++j) {
            row[j] = to_mod(cols[j][r]);
            nonzero = nonzero || row[j] != 0;
        }
        if (nonzero && ech.add(std::move(row))) kept.push_back(r);
    }
    for (std::size_t r : kept) tb->tests.push_back(cand[r]);
    tb->columns.assign(ngen, {});
    for (std::size_t j = 0; j < ngen; ++j)
        for (std::size_t r : kept) tb->columns[j].push_back(cols[j][r]);
    return tb;
}

void require_standard(const Factor& f, int degree) {
    if (f.markings != standard_markings(f.size()))
        throw std::invalid_argument("relation search expects markings 1..n");
    if (!f.stable()) throw GraphError("unstable ambient " + f.str());
    if (degree < 0 || degree > f.dimension())
        throw GraphError("degree " + std::to_string(degree) + " outside [0, " + std::to_string(f.dimension()) + "]");
}

}  // namespace

ConstraintMatrix constraint_matrix(const Factor& factor, int degree, const RelationOptions& options) {
    require_standard(factor, degree);
    TestBasisPtr tb = options.top_monomials
                          ? test_basis_cache().get(factor.genus, factor.size(), degree, options.jobs)
                          : build_test_basis(factor.genus, factor.size(), degree, false, options.jobs);
    ConstraintMatrix m;
    m.rows = tb->tests;
    m.columns = tb->generators;
    m.entries = RationalMatrix::Zero(static_cast<Eigen::Index>(m.rows.size()), static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t j = 0; j < m.columns.size(); ++j)
        for (std::size_t r = 0; r < m.rows.size(); ++r)
            m.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = tb->columns[j][r];
    return m;
}

std::vector<GraphSum> relations_from(const ConstraintMatrix& m, const Factor& factor) {
    std::vector<GraphSum> out;
    RationalMatrix a = m.entries;
    if (a.rows() == 0) a = RationalMatrix::Zero(1, static_cast<Eigen::Index>(m.columns.size()));
    for (const auto& x : nullspace<Rational>(a)) {
        GraphSum s(AmbientSpace({factor}));
        for (Eigen::Index j = 0; j < x.size(); ++j)
            if (!x(j).is_zero()) s.add_canonical({m.columns[static_cast<std::size_t>(j)]}, x(j));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<GraphSum> find_relations(const Factor& factor, int degree, const RelationOptions& options) {
    const ConstraintMatrix m = constraint_matrix(factor, degree, options);
    auto rels = relations_from(m, factor);
    if (options.verify && options.top_monomials)
        for (const auto& r : rels)
            if (!check(r).vanishing())
                throw std::logic_error("relation failed the Gorenstein check:\n" + r.str());
    return rels;
}

RankReport gorenstein_rank(const Factor& factor, int degree, const RelationOptions& options) {
    const ConstraintMatrix m = constraint_matrix(factor, degree, options);
    RankReport r;
    r.generators = m.columns.size();
    r.rank = m.rows.size();
    r.nullity = r.generators - r.rank;
    return r;
}

namespace {

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string ConstraintMatrix::csv() const {
    std::string s = "test";
    for (const auto& c : columns) s += "," + csv_quote(c.key);
    s += "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        s += csv_quote(rows[r].id());
        for (std::size_t j = 0; j < columns.size(); ++j)
            s += "," + entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)).str();
        s += "\n";
    }
    return s;
}

}  // namespace taut
