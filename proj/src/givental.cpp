#include "taut/givental.hpp"

#include "taut/corr.hpp"

#include <algorithm>
#include <sstream>

namespace taut {

namespace {

RationalMatrix invert(const RationalMatrix& a) {
    const Eigen::Index n = a.rows();
    RationalMatrix m = a;
    RationalMatrix inv = RationalMatrix::Identity(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index p = c;
        while (p < n && m(p, c).is_zero()) ++p;
        if (p == n) throw std::invalid_argument("pairing is degenerate");
        m.row(c).swap(m.row(p));
        inv.row(c).swap(inv.row(p));
        const Rational s = Rational(1) / m(c, c);
        m.row(c) *= s;
        inv.row(c) *= s;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == c || m(r, c).is_zero()) continue;
            const Rational f = m(r, c);
            m.row(r) -= f * m.row(c);
            inv.row(r) -= f * inv.row(c);
        }
    }
    return inv;
}

bool is_symmetric(const RationalMatrix& m, int sign) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != Rational(sign) * m(j, i)) return false;
    return true;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::vector<std::string> split_char(const std::string& s, char c) {
    std::vector<std::string> out;
    std::string cur;
    for (char x : s) {
        if (x == c) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += x;
        }
    }
    out.push_back(trim(cur));
    return out;
}

int parse_int(const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("not an integer: " + s);
    return v;
}

std::vector<Insertion> with(std::vector<Insertion> v, const Insertion& a) {
    v.push_back(a);
    return v;
}

// Multisets of size n over `alphabet`, non-decreasing.
void multisets(const std::vector<Insertion>& alphabet, int n, std::size_t start, std::vector<Insertion>& cur,
               const std::function<void(const std::vector<Insertion>&)>& emit) {
    if (static_cast<int>(cur.size()) == n) {
        emit(cur);
        return;
    }
    for (std::size_t i = start; i < alphabet.size(); ++i) {
        cur.push_back(alphabet[i]);
        multisets(alphabet, n, i, cur, emit);
        cur.pop_back();
    }
}

std::vector<Insertion> alphabet(int max_d, int rank) {
    std::vector<Insertion> a;
    for (int d = 0; d <= max_d; ++d)
        for (int f = 0; f < rank; ++f) a.push_back({d, f});
    return a;
}

Rational multiplicity_factorial(const std::vector<Insertion>& m) {
    Rational r(1);
    std::size_t i = 0;
    while (i < m.size()) {
        std::size_t j = i;
        while (j < m.size() && m[j] == m[i]) ++j;
        r *= factorial(static_cast<int>(j - i));
        i = j;
    }
    return r;
}

// Product of two correlators; zero without lookup when either is known to vanish.
Rational product(const TruncatedPotential& F, const PotentialKey& a, const PotentialKey& b) {
    if (F.known_zero(a) || F.known_zero(b)) return Rational(0);
    const Rational x = F.get(a);
    if (x.is_zero()) return x;
    return x * F.get(b);
}

void require_frame(const LieElement& x, const TruncatedPotential& F) {
    if (x.max_index() > 0 && x.matrix(1).rows() != F.frame().rank)
        throw std::invalid_argument("Lie element and potential have different rank");
}

void require_key(const TruncatedPotential& F, const PotentialKey& key) {
    if (key.size() == 0) throw std::invalid_argument("correlator key needs at least one insertion");
    for (const auto& i : key.insertions)
        if (i.field < 0 || i.field >= F.frame().rank || i.d < 0)
            throw std::invalid_argument("bad insertion in key " + key.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Frames and Lie elements

TheoryFrame::TheoryFrame(RationalMatrix pairing) : eta(std::move(pairing)) {
    if (eta.rows() == 0 || eta.rows() != eta.cols()) throw std::invalid_argument("pairing must be square");
    if (!is_symmetric(eta, 1)) throw std::invalid_argument("pairing must be symmetric");
    rank = static_cast<int>(eta.rows());
    eta_inv = invert(eta);
}

TheoryFrame TheoryFrame::point() { return TheoryFrame(RationalMatrix::Identity(1, 1)); }

LieElement::LieElement(Direction direction, std::vector<RationalMatrix> coefficients, const TheoryFrame& frame)
    : direction_(direction), coefficients_(std::move(coefficients)), eta_(frame.eta), eta_inv_(frame.eta_inv) {
    const char name = direction_ == Direction::upper ? 'r' : 's';
    for (std::size_t i = 0; i < coefficients_.size(); ++i) {
        const int l = static_cast<int>(i) + 1;
        const auto& m = coefficients_[i];
        if (m.rows() != frame.rank || m.cols() != frame.rank)
            throw std::invalid_argument(std::string(1, name) + "_" + std::to_string(l) + " has wrong size");
        const int sign = l % 2 == 1 ? 1 : -1;
        if (!is_symmetric(eta_ * m, sign))
            throw std::invalid_argument(std::string(1, name) + "_" + std::to_string(l) + " must be eta-" +
                                        (sign == 1 ? "self-adjoint" : "skew-self-adjoint"));
    }
}

bool LieElement::zero(int l) const {
    if (l < 1 || l > max_index()) return true;
    const auto& m = coefficients_[static_cast<std::size_t>(l - 1)];
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!m.data()[i].is_zero()) return false;
    return true;
}

const RationalMatrix& LieElement::matrix(int l) const {
    if (l < 1 || l > max_index()) throw std::out_of_range("Lie element index out of range");
    return coefficients_[static_cast<std::size_t>(l - 1)];
}

RationalMatrix LieElement::lowered(int l) const {
    if (zero(l)) return RationalMatrix::Zero(eta_.rows(), eta_.cols());
    return eta_ * matrix(l);
}

RationalMatrix LieElement::raised(int l) const {
    if (zero(l)) return RationalMatrix::Zero(eta_.rows(), eta_.cols());
    return eta_inv_ * matrix(l).transpose();
}

std::string LieElement::str() const {
    std::string s = std::string("% direction ") + (direction_ == Direction::upper ? "upper" : "lower") + "\n";
    for (int l = 1; l <= max_index(); ++l) {
        if (zero(l)) continue;
        s += std::to_string(l) + ";";
        const auto& m = matrix(l);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) s += " " + m(i, j).str();
        s += "\n";
    }
    return s;
}

LieElement LieElement::parse(std::string_view text, const TheoryFrame& frame) {
    std::optional<Direction> direction;
    std::map<int, RationalMatrix> mats;
    std::istringstream in{std::string(text)};
    int lineno = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto fail = [&](const std::string& why) {
            return std::invalid_argument("Lie element line " + std::to_string(lineno) + ": " + why);
        };
        if (line[0] == '%') {
            const auto w = split_ws(line.substr(1));
            if (w.size() == 2 && w[0] == "direction") {
                if (w[1] == "upper") direction = Direction::upper;
                else if (w[1] == "lower") direction = Direction::lower;
                else throw fail("direction must be upper or lower");
            } else {
                throw fail("unknown directive");
            }
            continue;
        }
        const auto parts = split_char(line, ';');
        if (parts.size() != 2) throw fail("expected `l; entries`");
        const int l = parse_int(parts[0]);
        if (l < 1) throw fail("index must be positive");
        const auto w = split_ws(parts[1]);
        if (static_cast<int>(w.size()) != frame.rank * frame.rank) throw fail("expected rank^2 entries");
        RationalMatrix m(frame.rank, frame.rank);
        for (int i = 0; i < frame.rank; ++i)
            for (int j = 0; j < frame.rank; ++j) m(i, j) = Rational::parse(w[static_cast<std::size_t>(i * frame.rank + j)]);
        if (!mats.emplace(l, m).second) throw fail("index repeated");
    }
    if (!direction) throw std::invalid_argument("Lie element: missing `% direction` line");
    std::vector<RationalMatrix> coeffs;
    const int top = mats.empty() ? 0 : mats.rbegin()->first;
    for (int l = 1; l <= top; ++l) {
        auto it = mats.find(l);
        coeffs.push_back(it == mats.end() ? RationalMatrix::Zero(frame.rank, frame.rank) : it->second);
    }
    return LieElement(*direction, std::move(coeffs), frame);
}

// ---------------------------------------------------------------------------
// Potentials

PotentialKey::PotentialKey(int g, std::vector<Insertion> ins) : genus(g), insertions(std::move(ins)) {
    std::sort(insertions.begin(), insertions.end());
}

int PotentialKey::descendant_sum() const {
    int s = 0;
    for (const auto& i : insertions) s += i.d;
    return s;
}

std::string PotentialKey::str() const {
    std::string s = std::to_string(genus) + "; ";
    for (const auto& i : insertions) s += "(" + std::to_string(i.d) + "," + std::to_string(i.field) + ")";
    return s;
}

TruncatedPotential::TruncatedPotential(TheoryFrame frame, Caps caps, bool tame, bool ancestor)
    : frame_(std::move(frame)), caps_(caps), tame_(tame), ancestor_(ancestor) {
    if (caps.genus < 0 || caps.points < 0 || caps.descendant < 0) throw std::invalid_argument("caps must be >= 0");
}

TruncatedPotential TruncatedPotential::point(Caps caps) {
    TruncatedPotential F(TheoryFrame::point(), caps, true, true);
    for (const auto& key : F.keys()) {
        if (2 * key.genus - 2 + key.size() <= 0) continue;
        if (key.descendant_sum() != 3 * key.genus - 3 + key.size()) continue;
        std::vector<int> ds;
        for (const auto& i : key.insertions) ds.push_back(i.d);
        F.set(key, point_correlator(key.genus, ds));
    }
    return F;
}

TruncatedPotential TruncatedPotential::rescaled_sum(TheoryFrame frame, const std::vector<Rational>& alpha, Caps caps) {
    if (static_cast<int>(alpha.size()) != frame.rank) throw std::invalid_argument("need one rescaling per field");
    for (const auto& a : alpha)
        if (a.is_zero()) throw std::invalid_argument("rescaling constants must be nonzero");
    const TruncatedPotential pt = point(caps);
    TruncatedPotential F(std::move(frame), caps, true, true);
    for (const auto& [key, value] : pt.table()) {
        for (int mu = 0; mu < F.frame().rank; ++mu) {
            std::vector<Insertion> ins;
            for (const auto& i : key.insertions) ins.push_back({i.d, mu});
            const int e = 2 - 2 * key.genus - key.descendant_sum();
            F.set(PotentialKey(key.genus, ins), pow(alpha[static_cast<std::size_t>(mu)], e) * value);
        }
    }
    return F;
}

bool TruncatedPotential::in_caps(const PotentialKey& key) const {
    if (key.genus < 0 || key.genus > caps_.genus || key.size() > caps_.points) return false;
    for (const auto& i : key.insertions)
        if (i.d < 0 || i.d > caps_.descendant || i.field < 0 || i.field >= frame_.rank) return false;
    return true;
}

bool TruncatedPotential::known_zero(const PotentialKey& key) const {
    if (key.genus < 0) return true;
    for (const auto& i : key.insertions)
        if (i.d < 0) return true;
    if (ancestor_ && 2 - 2 * key.genus - key.size() >= 0) return true;
    if (tame_ && key.descendant_sum() > 3 * key.genus - 3 + key.size()) return true;
    return false;
}

void TruncatedPotential::set(const PotentialKey& key, const Rational& value) {
    if (!in_caps(key)) throw std::invalid_argument("key outside caps: " + key.str());
    if (value.is_zero()) {
        table_.erase(key);
        return;
    }
    if (known_zero(key)) throw std::invalid_argument("nonzero value on a key forced to vanish: " + key.str());
    table_[key] = value;
}

Rational TruncatedPotential::get(const PotentialKey& key) const {
    for (const auto& i : key.insertions)
        if (i.field < 0 || i.field >= frame_.rank) throw std::invalid_argument("field out of range in " + key.str());
    if (known_zero(key)) return Rational(0);
    if (!in_caps(key)) throw TruncationLeak("correlator outside caps: " + key.str());
    auto it = table_.find(key);
    return it == table_.end() ? Rational(0) : it->second;
}

Rational TruncatedPotential::get(int genus, std::vector<Insertion> insertions) const {
    return get(PotentialKey(genus, std::move(insertions)));
}

Rational TruncatedPotential::truncated(const PotentialKey& key) const {
    if (known_zero(key) || !in_caps(key)) return Rational(0);
    auto it = table_.find(key);
    return it == table_.end() ? Rational(0) : it->second;
}

std::vector<PotentialKey> TruncatedPotential::keys() const {
    std::vector<PotentialKey> out;
    const auto alpha = alphabet(caps_.descendant, frame_.rank);
    for (int g = 0; g <= caps_.genus; ++g)
        for (int n = 1; n <= caps_.points; ++n) {
            std::vector<Insertion> cur;
            multisets(alpha, n, 0, cur, [&](const std::vector<Insertion>& m) { out.emplace_back(g, m); });
        }
    return out;
}

std::string TruncatedPotential::str() const {
    std::string s = "% rank " + std::to_string(frame_.rank) + "\n% eta";
    for (int i = 0; i < frame_.rank; ++i)
        for (int j = 0; j < frame_.rank; ++j) s += " " + frame_.eta(i, j).str();
    s += "\n% caps " + std::to_string(caps_.genus) + " " + std::to_string(caps_.points) + " " +
         std::to_string(caps_.descendant) + "\n% flags";
    if (tame_) s += " tame";
    if (ancestor_) s += " ancestor";
    s += "\n";
    for (const auto& [key, value] : table_) s += key.str() + "; " + value.str() + "\n";
    return s;
}

TruncatedPotential TruncatedPotential::parse(std::string_view text) {
    int rank = 1;
    std::vector<std::string> eta_words;
    std::optional<Caps> caps;
    bool tame = false, ancestor = false;
    std::vector<std::pair<int, std::string>> body;
    std::istringstream in{std::string(text)};
    int lineno = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] != '%') {
            body.emplace_back(lineno, line);
            continue;
        }
        const auto w = split_ws(line.substr(1));
        auto fail = [&](const std::string& why) {
            return std::invalid_argument("potential line " + std::to_string(lineno) + ": " + why);
        };
        if (w.empty()) throw fail("empty directive");
        if (w[0] == "rank" && w.size() == 2) {
            rank = parse_int(w[1]);
            if (rank < 1) throw fail("rank must be positive");
        } else if (w[0] == "eta") {
            eta_words.assign(w.begin() + 1, w.end());
        } else if (w[0] == "caps" && w.size() == 4) {
            caps = Caps{parse_int(w[1]), parse_int(w[2]), parse_int(w[3])};
        } else if (w[0] == "flags") {
            for (std::size_t i = 1; i < w.size(); ++i) {
                if (w[i] == "tame") tame = true;
                else if (w[i] == "ancestor") ancestor = true;
                else throw fail("unknown flag " + w[i]);
            }
        } else {
            throw fail("unknown directive");
        }
    }
    if (!caps) throw std::invalid_argument("potential: missing `% caps g n d` line");
    RationalMatrix eta = RationalMatrix::Identity(rank, rank);
    if (!eta_words.empty()) {
        if (static_cast<int>(eta_words.size()) != rank * rank) throw std::invalid_argument("potential: eta needs rank^2 entries");
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j) eta(i, j) = Rational::parse(eta_words[static_cast<std::size_t>(i * rank + j)]);
    }
    TruncatedPotential F(TheoryFrame(eta), *caps, tame, ancestor);
    for (const auto& [no, line] : body) {
        auto fail = [&](const std::string& why) {
            return std::invalid_argument("potential line " + std::to_string(no) + ": " + why);
        };
        const auto parts = split_char(line, ';');
        if (parts.size() != 3) throw fail("expected `g; (d,f)...; p/q`");
        const int g = parse_int(parts[0]);
        std::vector<Insertion> ins;
        const std::string& s = parts[1];
        std::size_t pos = 0;
        while (pos < s.size()) {
            if (s[pos] == ' ') {
                ++pos;
                continue;
            }
            if (s[pos] != '(') throw fail("expected '('");
            const auto close = s.find(')', pos);
            if (close == std::string::npos) throw fail("missing ')'");
            const auto pair = split_char(s.substr(pos + 1, close - pos - 1), ',');
            if (pair.size() != 2) throw fail("insertion must be (d,f)");
            ins.push_back({parse_int(pair[0]), parse_int(pair[1])});
            pos = close + 1;
        }
        PotentialKey key(g, ins);
        if (F.table().count(key)) throw fail("key repeated");
        try {
            F.set(key, Rational::parse(parts[2]));
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
    }
    return F;
}

// ---------------------------------------------------------------------------
// Correlator formulas

Rational r_action_correlator(const LieElement& r, const TruncatedPotential& F, const PotentialKey& key) {
    if (r.direction() != Direction::upper) throw std::invalid_argument("r-action needs an upper triangular element");
    require_frame(r, F);
    require_key(F, key);
    const int rank = F.frame().rank;
    const int g = key.genus;
    const auto& e = key.insertions;
    const int n = key.size();
    Rational total;
    for (int l = 1; l <= r.max_index(); ++l) {
        if (r.zero(l)) continue;
        const auto& R = r.matrix(l);
        const RationalMatrix up = r.raised(l);
        for (int nu = 0; nu < rank; ++nu)
            if (!R(nu, 0).is_zero()) total -= R(nu, 0) * F.get(g, with(e, {1 + l, nu}));
        for (int i = 0; i < n; ++i)
            for (int nu = 0; nu < rank; ++nu) {
                const Rational& c = R(nu, e[static_cast<std::size_t>(i)].field);
                if (c.is_zero()) continue;
                auto ins = e;
                ins[static_cast<std::size_t>(i)] = {e[static_cast<std::size_t>(i)].d + l, nu};
                total += c * F.get(g, ins);
            }
        for (int m = 0; m <= l - 1; ++m) {
            const int mm = l - 1 - m;
            const Rational sign = m % 2 == 0 ? Rational(-1) : Rational(1);
            for (int mu = 0; mu < rank; ++mu)
                for (int nu = 0; nu < rank; ++nu) {
                    if (up(mu, nu).is_zero()) continue;
                    const Rational w = sign * up(mu, nu) / Rational(2);
                    total += w * F.get(g - 1, with(with(e, {m, mu}), {mm, nu}));
                    for (int g1 = 0; g1 <= g; ++g1)
                        for (int mask = 0; mask < (1 << n); ++mask) {
                            std::vector<Insertion> I{{m, mu}}, J{{mm, nu}};
                            for (int i = 0; i < n; ++i)
                                ((mask >> i) & 1 ? I : J).push_back(e[static_cast<std::size_t>(i)]);
                            total += w * product(F, PotentialKey(g1, I), PotentialKey(g - g1, J));
                        }
                }
        }
    }
    return total;
}

namespace {

// Per-entry s_l substitutions.
Rational substitution_terms(const LieElement& s, const TruncatedPotential& F, const PotentialKey& key) {
    const int rank = F.frame().rank;
    const auto& e = key.insertions;
    Rational total;
    for (int l = 1; l <= s.max_index(); ++l) {
        if (s.zero(l)) continue;
        const auto& S = s.matrix(l);
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i].d - l < 0) continue;
            for (int nu = 0; nu < rank; ++nu) {
                const Rational& c = S(nu, e[i].field);
                if (c.is_zero()) continue;
                auto ins = e;
                ins[i] = {e[i].d - l, nu};
                total += c * F.get(key.genus, ins);
            }
        }
    }
    return total;
}

Rational two_point_constant(const LieElement& s, const PotentialKey& key) {
    const auto& a = key.insertions[0];
    const auto& b = key.insertions[1];
    const int l = a.d + b.d + 1;
    const Rational c = s.lowered(l)(a.field, b.field);
    return a.d % 2 == 0 ? c : -c;
}

}  // namespace

Rational s_action_correlator(const LieElement& s, const TruncatedPotential& F, const PotentialKey& key) {
    if (s.direction() != Direction::lower) throw std::invalid_argument("s-action needs a lower triangular element");
    require_frame(s, F);
    require_key(F, key);
    Rational total;
    if (!s.zero(1)) {
        const auto& S1 = s.matrix(1);
        for (int nu = 0; nu < F.frame().rank; ++nu)
            if (!S1(nu, 0).is_zero()) total -= S1(nu, 0) * F.get(key.genus, with(key.insertions, {0, nu}));
    }
    total += substitution_terms(s, F, key);
    if (key.genus == 0 && key.size() == 2) total += two_point_constant(s, key);
    if (key.genus == 0 && key.size() == 1) {
        const auto& a = key.insertions[0];
        total += s.lowered(a.d + 2)(0, a.field);
    }
    return total;
}

Rational v_action_correlator(const LieElement& s, const TruncatedPotential& F, const PotentialKey& key) {
    if (s.direction() != Direction::lower) throw std::invalid_argument("v-action needs a lower triangular element");
    require_frame(s, F);
    require_key(F, key);
    if (key.genus == 0 && key.size() == 1)
        throw OnePointGenusZero("v-action is not defined on genus-0 one-point correlators: " + key.str());
    Rational total = substitution_terms(s, F, key);
    if (key.genus == 0 && key.size() == 2) total += two_point_constant(s, key);
    return total;
}

ActionMode parse_action_mode(std::string_view text) {
    if (text == "r") return ActionMode::r;
    if (text == "s") return ActionMode::s;
    if (text == "v") return ActionMode::v;
    throw std::invalid_argument("mode must be r, s or v");
}

Rational action_correlator(ActionMode mode, const LieElement& x, const TruncatedPotential& F, const PotentialKey& key) {
    switch (mode) {
        case ActionMode::r: return r_action_correlator(x, F, key);
        case ActionMode::s: return s_action_correlator(x, F, key);
        case ActionMode::v: return v_action_correlator(x, F, key);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Operator route

namespace {

using Laurent = std::map<int, Rational>;  // hbar power -> coefficient
using Mono = std::vector<Insertion>;      // sorted multiset of variables t_d^mu

void accumulate(Laurent& acc, const Laurent& src, const Rational& c, int shift) {
    if (c.is_zero()) return;
    for (const auto& [p, v] : src) {
        Rational& slot = acc[p + shift];
        slot += c * v;
    }
}

Laurent multiply(const Laurent& a, const Laurent& b) {
    Laurent out;
    for (const auto& [p, x] : a)
        for (const auto& [q, y] : b) out[p + q] += x * y;
    return out;
}

int count(const Mono& m, const Insertion& v) { return static_cast<int>(std::count(m.begin(), m.end(), v)); }

Mono plus(Mono m, const Insertion& v) {
    m.insert(std::upper_bound(m.begin(), m.end(), v), v);
    return m;
}

Mono minus(Mono m, const Insertion& v) {
    m.erase(std::find(m.begin(), m.end(), v));
    return m;
}

std::vector<Insertion> distinct(const Mono& m) {
    std::vector<Insertion> d;
    for (const auto& v : m)
        if (d.empty() || d.back() != v) d.push_back(v);
    return d;
}

// Calls fn(sub, rest) for every sub-multiset of m.
void submultisets(const Mono& m, const std::function<void(const Mono&, const Mono&)>& fn) {
    const auto vars = distinct(m);
    std::vector<int> total(vars.size()), pick(vars.size(), 0);
    for (std::size_t i = 0; i < vars.size(); ++i) total[i] = count(m, vars[i]);
    while (true) {
        Mono sub, rest;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            sub.insert(sub.end(), static_cast<std::size_t>(pick[i]), vars[i]);
            rest.insert(rest.end(), static_cast<std::size_t>(total[i] - pick[i]), vars[i]);
        }
        fn(sub, rest);
        std::size_t i = 0;
        while (i < vars.size() && pick[i] == total[i]) pick[i++] = 0;
        if (i == vars.size()) break;
        ++pick[i];
    }
}

}  // namespace

struct OperatorSeries::Impl {
    ActionMode mode;
    const LieElement& x;
    const TruncatedPotential& F;
    int D;
    int rank;
    std::map<Mono, Laurent> zplus, zminus, w;

    Impl(ActionMode m, const LieElement& lie, const TruncatedPotential& pot)
        : mode(m), x(lie), F(pot), D(pot.caps().descendant), rank(pot.frame().rank) {}

    bool var_ok(const Insertion& v) const { return v.d >= 0 && v.d <= D; }

    Laurent f(const Mono& m) const {
        Laurent out;
        if (m.empty()) return out;
        const Rational den = multiplicity_factorial(m);
        for (int g = 0; g <= F.caps().genus; ++g) {
            const Rational v = F.truncated(PotentialKey(g, m));
            if (!v.is_zero()) out[g - 1] += v / den;
        }
        return out;
    }

    const Laurent& Z(const Mono& m, int sign) {
        auto& memo = sign > 0 ? zplus : zminus;
        auto it = memo.find(m);
        if (it != memo.end()) return it->second;
        Laurent out;
        if (m.empty()) {
            out[0] = Rational(1);
        } else {
            const Insertion v = m.front();
            const int cv = count(m, v);
            submultisets(m, [&](const Mono& sub, const Mono& rest) {
                const int c = count(sub, v);
                if (c == 0) return;
                const Laurent fs = f(sub);
                if (fs.empty()) return;
                const Laurent& zr = Z(rest, sign);
                accumulate(out, multiply(fs, zr), Rational(sign * c, cv), 0);
            });
        }
        for (auto i = out.begin(); i != out.end();) i = i->second.is_zero() ? out.erase(i) : std::next(i);
        return memo.emplace(m, std::move(out)).first->second;
    }

    // Coefficient of t^m in the operator applied to Z.
    const Laurent& W(const Mono& m) {
        auto it = w.find(m);
        if (it != w.end()) return it->second;
        Laurent acc;
        const auto vars = distinct(m);
        if (mode == ActionMode::r) {
            for (int l = 1; l <= x.max_index(); ++l) {
                if (x.zero(l)) continue;
                const auto& R = x.matrix(l);
                const RationalMatrix up = x.raised(l);
                for (int mu = 0; mu < rank; ++mu) {
                    const Insertion v{l + 1, mu};
                    if (R(mu, 0).is_zero() || !var_ok(v)) continue;
                    const Mono m2 = plus(m, v);
                    accumulate(acc, Z(m2, 1), -R(mu, 0) * Rational(count(m2, v)), 0);
                }
                for (const auto& src : vars)
                    for (int mu = 0; mu < rank; ++mu) {
                        const Insertion v{src.d + l, mu};
                        if (R(mu, src.field).is_zero() || !var_ok(v)) continue;
                        const Mono m2 = plus(minus(m, src), v);
                        accumulate(acc, Z(m2, 1), R(mu, src.field) * Rational(count(m2, v)), 0);
                    }
                for (int d1 = 0; d1 <= l - 1; ++d1) {
                    const int d2 = l - 1 - d1;
                    for (int mu1 = 0; mu1 < rank; ++mu1)
                        for (int mu2 = 0; mu2 < rank; ++mu2) {
                            const Insertion v1{d1, mu1}, v2{d2, mu2};
                            if (up(mu1, mu2).is_zero() || !var_ok(v1) || !var_ok(v2)) continue;
                            const Mono m2 = plus(plus(m, v1), v2);
                            const int k1 = count(m2, v1);
                            const int mult = v1 == v2 ? k1 * (k1 - 1) : k1 * count(m2, v2);
                            const Rational sign = d1 % 2 == 0 ? Rational(-1) : Rational(1);
                            accumulate(acc, Z(m2, 1), sign * up(mu1, mu2) * Rational(mult) / Rational(2), 1);
                        }
                }
            }
        } else {
            if (mode == ActionMode::s && !x.zero(1)) {
                const auto& S1 = x.matrix(1);
                for (int mu = 0; mu < rank; ++mu) {
                    if (S1(mu, 0).is_zero()) continue;
                    const Insertion v{0, mu};
                    const Mono m2 = plus(m, v);
                    accumulate(acc, Z(m2, 1), -S1(mu, 0) * Rational(count(m2, v)), 0);
                }
            }
            if (mode == ActionMode::s)
                for (const auto& v : vars) {
                    const Rational c = x.lowered(v.d + 2)(0, v.field);
                    accumulate(acc, Z(minus(m, v), 1), c, -1);
                }
            for (int l = 1; l <= x.max_index(); ++l) {
                if (x.zero(l)) continue;
                const auto& S = x.matrix(l);
                for (const auto& src : vars) {
                    if (src.d - l < 0) continue;
                    for (int mu = 0; mu < rank; ++mu) {
                        if (S(mu, src.field).is_zero()) continue;
                        const Insertion v{src.d - l, mu};
                        const Mono m2 = plus(minus(m, src), v);
                        accumulate(acc, Z(m2, 1), S(mu, src.field) * Rational(count(m2, v)), 0);
                    }
                }
            }
            for (const auto& v1 : vars) {
                const Mono m1 = minus(m, v1);
                for (const auto& v2 : distinct(m1)) {
                    const Rational c = x.lowered(v1.d + v2.d + 1)(v1.field, v2.field);
                    if (c.is_zero()) continue;
                    const Rational sign = v1.d % 2 == 0 ? Rational(1) : Rational(-1);
                    accumulate(acc, Z(minus(m1, v2), 1), sign * c / Rational(2), -1);
                }
            }
        }
        return w.emplace(m, std::move(acc)).first->second;
    }

    Rational coefficient(const PotentialKey& key) {
        for (const auto& v : key.insertions)
            if (!var_ok(v) || v.field < 0 || v.field >= rank) throw std::invalid_argument("key outside variable range");
        Laurent acc;
        submultisets(key.insertions, [&](const Mono& sub, const Mono& rest) {
            const Laurent& zi = Z(sub, -1);
            if (zi.empty()) return;
            const Laurent& wr = W(rest);
            if (wr.empty()) return;
            accumulate(acc, multiply(zi, wr), Rational(1), 0);
        });
        auto it = acc.find(key.genus - 1);
        if (it == acc.end()) return Rational(0);
        return it->second * multiplicity_factorial(key.insertions);
    }
};

OperatorSeries::OperatorSeries(ActionMode mode, const LieElement& x, const TruncatedPotential& F)
    : impl_(new Impl(mode, x, F)) {
    require_frame(x, F);
    const Direction want = mode == ActionMode::r ? Direction::upper : Direction::lower;
    if (x.direction() != want) {
        delete impl_;
        throw std::invalid_argument("Lie element direction does not match the mode");
    }
}

OperatorSeries::~OperatorSeries() { delete impl_; }

Rational OperatorSeries::coefficient(const PotentialKey& key) { return impl_->coefficient(key); }

FlowReport flow_check(ActionMode mode, const LieElement& x, const TruncatedPotential& F) {
    OperatorSeries series(mode, x, F);
    FlowReport report;
    for (const auto& key : F.keys()) {
        if (mode == ActionMode::v && key.genus == 0 && key.size() == 1) continue;
        Rational formula;
        try {
            formula = action_correlator(mode, x, F, key);
        } catch (const TruncationLeak&) {
            ++report.skipped;
            continue;
        }
        const Rational diff = abs(formula - series.coefficient(key));
        ++report.checked;
        if (diff > report.max_discrepancy || (!report.worst && !diff.is_zero())) {
            report.max_discrepancy = diff;
            report.worst = key;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Induced vectors for general potentials

Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.eps + b.eps}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.eps - b.eps}; }
Dual operator*(const Dual& a, const Dual& b) { return {a.value * b.value, a.value * b.eps + a.eps * b.value}; }
Dual operator*(const Rational& c, const Dual& a) { return {c * a.value, c * a.eps}; }

CorrelatorSource value_source(const TruncatedPotential& F) {
    return [&F](const PotentialKey& key) { return Dual{F.get(key), Rational(0)}; };
}

CorrelatorSource flow_source(ActionMode mode, const LieElement& x, const TruncatedPotential& F) {
    return [mode, &x, &F](const PotentialKey& key) {
        const Rational v = F.get(key);
        if (key.genus < 0) return Dual{v, Rational(0)};
        return Dual{v, action_correlator(mode, x, F, key)};
    };
}

CorrelatorSource point_source() {
    return [](const PotentialKey& key) {
        std::vector<int> ds;
        for (const auto& i : key.insertions) {
            if (i.field != 0) throw std::invalid_argument("point theory has a single field");
            ds.push_back(i.d);
        }
        return Dual{point_correlator(key.genus, ds), Rational(0)};
    };
}

namespace {

struct ChainPoint {
    int ancestor = 0;
    int descendant = 0;
    int field = 0;
};

bool is_zero(const Dual& d) { return d.value.is_zero() && d.eps.is_zero(); }

// Vertex contribution: ancestor psi powers are traded for descendant ones by
// psi-bar = psi - [bubble], the bubble carrying the point and a subset of the added points.
Dual chain(int genus, std::vector<ChainPoint> kept, const std::vector<Insertion>& added, const TheoryFrame& frame,
           const CorrelatorSource& source) {
    std::size_t p = 0;
    while (p < kept.size() && kept[p].ancestor == 0) ++p;
    if (p == kept.size()) {
        std::vector<Insertion> ins = added;
        for (const auto& k : kept) ins.push_back({k.descendant, k.field});
        return source(PotentialKey(genus, ins));
    }
    const ChainPoint pt = kept[p];
    auto first = kept;
    first[p] = {pt.ancestor - 1, pt.descendant + 1, pt.field};
    Dual total = chain(genus, first, added, frame, source);
    const int na = static_cast<int>(added.size());
    for (int mask = 0; mask < (1 << na); ++mask) {
        std::vector<Insertion> bubble{{pt.descendant, pt.field}}, rest;
        for (int i = 0; i < na; ++i) ((mask >> i) & 1 ? bubble : rest).push_back(added[static_cast<std::size_t>(i)]);
        for (int mu = 0; mu < frame.rank; ++mu)
            for (int nu = 0; nu < frame.rank; ++nu) {
                const Rational& c = frame.eta_inv(mu, nu);
                if (c.is_zero()) continue;
                const Dual b = source(PotentialKey(0, with(bubble, {0, mu})));
                if (is_zero(b)) continue;
                auto next = kept;
                next[p] = {pt.ancestor - 1, 0, nu};
                total = total - c * (b * chain(genus, next, rest, frame, source));
            }
    }
    return total;
}

Dual graph_entry(const DualGraph& G, const EntrySpec& entry, const TheoryFrame& frame, const CorrelatorSource& source) {
    const int V = static_cast<int>(G.vertices.size());
    const int A = static_cast<int>(entry.added.size());
    const int H = static_cast<int>(G.half_edges.size());
    auto lookup = [](const std::map<Marking, int>& m, Marking k) {
        auto it = m.find(k);
        return it == m.end() ? 0 : it->second;
    };
    Dual total;
    std::vector<int> where(static_cast<std::size_t>(A), 0);
    while (true) {
        std::vector<int> fields(static_cast<std::size_t>(H), 0);
        while (true) {
            Rational weight(1);
            for (const auto& e : G.edges) {
                weight *= frame.eta_inv(fields[static_cast<std::size_t>(e.first)], fields[static_cast<std::size_t>(e.second)]);
                if (weight.is_zero()) break;
            }
            if (!weight.is_zero()) {
                Dual prod{Rational(1), Rational(0)};
                for (int v = 0; v < V && !is_zero(prod); ++v) {
                    std::vector<ChainPoint> kept;
                    for (const auto& t : G.tails)
                        if (t.vertex == v)
                            kept.push_back({t.psi, lookup(entry.increments, t.marking), lookup(entry.fields, t.marking)});
                    for (int h = 0; h < H; ++h)
                        if (G.half_edges[static_cast<std::size_t>(h)].vertex == v)
                            kept.push_back({G.half_edges[static_cast<std::size_t>(h)].psi, 0, fields[static_cast<std::size_t>(h)]});
                    std::vector<Insertion> q;
                    for (int a = 0; a < A; ++a)
                        if (where[static_cast<std::size_t>(a)] == v) q.push_back(entry.added[static_cast<std::size_t>(a)]);
                    prod = prod * chain(G.vertices[static_cast<std::size_t>(v)].genus, kept, q, frame, source);
                }
                total = total + weight * prod;
            }
            int h = 0;
            while (h < H && fields[static_cast<std::size_t>(h)] == frame.rank - 1) fields[static_cast<std::size_t>(h++)] = 0;
            if (h == H) break;
            ++fields[static_cast<std::size_t>(h)];
        }
        int a = 0;
        while (a < A && where[static_cast<std::size_t>(a)] == V - 1) where[static_cast<std::size_t>(a++)] = 0;
        if (a == A) break;
        ++where[static_cast<std::size_t>(a)];
    }
    return total;
}

}  // namespace

Dual induced_entry_general(const GraphSum& L, const EntrySpec& entry, const TheoryFrame& frame,
                           const CorrelatorSource& source) {
    if (L.ambient().factors.size() != 1) throw std::invalid_argument("induced entries need a single-factor class");
    for (const auto& [m, f] : entry.fields)
        if (f < 0 || f >= frame.rank) throw std::invalid_argument("field out of range");
    for (const auto& a : entry.added)
        if (a.field < 0 || a.field >= frame.rank || a.d < 0) throw std::invalid_argument("bad added insertion");
    Dual total;
    for (const auto& [key, term] : L.terms()) {
        const DualGraph& G = term.factors[0].graph;
        if (G.has_kappa()) throw std::invalid_argument("general-rank induced entries need kappa-free graphs");
        if (!G.connected()) throw std::invalid_argument("general-rank induced entries need connected graphs");
        const Rational c = term.coefficient / Rational(static_cast<long>(term.automorphisms()));
        total = total + c * graph_entry(G, entry, frame, source);
    }
    return total;
}

EntryReport relation_flow_check(const GraphSum& L, ActionMode mode, const LieElement& x, const TruncatedPotential& F,
                                int max_added) {
    if (L.ambient().factors.size() != 1) throw std::invalid_argument("induced entries need a single-factor class");
    const auto markings = L.ambient().factors[0].markings;
    const int n = static_cast<int>(markings.size());
    const int rank = F.frame().rank;
    const int D = F.caps().descendant;
    const auto source = flow_source(mode, x, F);
    const auto alpha = alphabet(D, rank);
    EntryReport report;
    std::vector<int> fields(static_cast<std::size_t>(n), 0), inc(static_cast<std::size_t>(n), 0);
    auto run = [&](const std::vector<Insertion>& added) {
        EntrySpec spec;
        for (int i = 0; i < n; ++i) {
            spec.fields[markings[static_cast<std::size_t>(i)]] = fields[static_cast<std::size_t>(i)];
            spec.increments[markings[static_cast<std::size_t>(i)]] = inc[static_cast<std::size_t>(i)];
        }
        spec.added = added;
        try {
            const Dual v = induced_entry_general(L, spec, F.frame(), source);
            ++report.checked;
            report.max_value = std::max(report.max_value, abs(v.value));
            report.max_derivative = std::max(report.max_derivative, abs(v.eps));
        } catch (const TruncationLeak&) {
            ++report.skipped;
        }
    };
    while (true) {
        while (true) {
            for (int k = 0; k <= max_added; ++k) {
                std::vector<Insertion> cur;
                multisets(alpha, k, 0, cur, run);
            }
            int i = 0;
            while (i < n && inc[static_cast<std::size_t>(i)] == D) inc[static_cast<std::size_t>(i++)] = 0;
            if (i == n) break;
            ++inc[static_cast<std::size_t>(i)];
        }
        int i = 0;
        while (i < n && fields[static_cast<std::size_t>(i)] == rank - 1) fields[static_cast<std::size_t>(i++)] = 0;
        if (i == n) break;
        ++fields[static_cast<std::size_t>(i)];
    }
    return report;
}

PdeReport genus_one_pde_check(const TruncatedPotential& F, int max_d, int max_points) {
    const int rank = F.frame().rank;
    const auto& eta_inv = F.frame().eta_inv;
    const auto alpha = alphabet(F.caps().descendant, rank);
    PdeReport report;
    for (int d = 0; d <= max_d; ++d)
        for (int rho = 0; rho < rank; ++rho)
            for (int k = 0; k <= max_points; ++k) {
                std::vector<Insertion> cur;
                multisets(alpha, k, 0, cur, [&](const std::vector<Insertion>& m) {
                    try {
                        Rational res = F.get(1, with(m, {d + 1, rho}));
                        for (int mu = 0; mu < rank; ++mu)
                            for (int nu = 0; nu < rank; ++nu) {
                                const Rational& c = eta_inv(mu, nu);
                                if (c.is_zero()) continue;
                                for (int mask = 0; mask < (1 << k); ++mask) {
                                    std::vector<Insertion> I{{0, mu}}, J{{0, nu}, {d, rho}};
                                    for (int i = 0; i < k; ++i)
                                        ((mask >> i) & 1 ? I : J).push_back(m[static_cast<std::size_t>(i)]);
                                    res -= c * product(F, PotentialKey(1, I), PotentialKey(0, J));
                                }
                                res -= c / Rational(24) * F.get(0, with(with(with(m, {0, mu}), {0, nu}), {d, rho}));
                            }
                        ++report.checked;
                        report.max_residual = std::max(report.max_residual, abs(res));
                    } catch (const TruncationLeak&) {
                        ++report.skipped;
                    }
                });
            }
    return report;
}

GraphSum genus_one_relation() {
    GraphSum L(AmbientSpace::single(1, 1));
    DualGraph psi = DualGraph::smooth(1, {1});
    psi.tails[0].psi = 1;
    L.add(psi, Rational(1));
    DualGraph delta;
    delta.add_vertex(0);
    delta.add_edge(0, 0, 0, 0);
    delta.tails.push_back({0, 1, 0});
    L.add(delta, Rational(-1, 12));
    return L;
}

}  // namespace taut
