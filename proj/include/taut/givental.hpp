#ifndef TAUT_GIVENTAL_HPP
#define TAUT_GIVENTAL_HPP

#include "taut/graph_sum.hpp"
#include "taut/rational.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace taut {

// A correlator needed by a formula lies outside the caps of the table.
class TruncationLeak : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The v-action is not defined on genus-0 one-point correlators.
class OnePointGenusZero : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Vector space with basis e_0 .. e_{rank-1}; e_0 is the unit.
struct TheoryFrame {
    int rank = 1;
    RationalMatrix eta;
    RationalMatrix eta_inv;

    explicit TheoryFrame(RationalMatrix pairing);
    static TheoryFrame point();
};

enum class Direction { upper, lower };

// r(z) = sum r_l z^l (upper) or s(z^-1) = sum s_l z^-l (lower).
// matrix(l)(nu, mu) is the coefficient (r_l)^nu_mu: r_l(tau_{d,mu}) = sum_nu (r_l)^nu_mu tau_{d+l,nu}.
class LieElement {
public:
    LieElement(Direction direction, std::vector<RationalMatrix> coefficients, const TheoryFrame& frame);

    Direction direction() const { return direction_; }
    int max_index() const { return static_cast<int>(coefficients_.size()); }
    bool zero(int l) const;
    const RationalMatrix& matrix(int l) const;
    // (x_l)_{mu nu} = eta_{mu rho} (x_l)^rho_nu
    RationalMatrix lowered(int l) const;
    // (x_l)^{mu nu} = eta^{mu rho} (x_l)^nu_rho
    RationalMatrix raised(int l) const;

    std::string str() const;
    static LieElement parse(std::string_view text, const TheoryFrame& frame);

private:
    Direction direction_;
    std::vector<RationalMatrix> coefficients_;
    RationalMatrix eta_, eta_inv_;
};

struct Insertion {
    int d = 0;
    int field = 0;
    auto operator<=>(const Insertion&) const = default;
};

struct PotentialKey {
    int genus = 0;
    std::vector<Insertion> insertions;  // sorted

    PotentialKey() = default;
    PotentialKey(int g, std::vector<Insertion> ins);
    int size() const { return static_cast<int>(insertions.size()); }
    int descendant_sum() const;
    std::string str() const;
    auto operator<=>(const PotentialKey&) const = default;
};

struct Caps {
    int genus = 0;
    int points = 0;
    int descendant = 0;
};

// Finite table of correlators <tau_{d_1,mu_1} ... tau_{d_n,mu_n}>_g within caps.
// Unlisted keys inside the caps are zero.
class TruncatedPotential {
public:
    TruncatedPotential(TheoryFrame frame, Caps caps, bool tame, bool ancestor);

    // Witten-Kontsevich point potential.
    static TruncatedPotential point(Caps caps);
    // Direct sum of point potentials, summand mu rescaled by alpha_mu^{2-2g-sum d}.
    static TruncatedPotential rescaled_sum(TheoryFrame frame, const std::vector<Rational>& alpha, Caps caps);

    const TheoryFrame& frame() const { return frame_; }
    const Caps& caps() const { return caps_; }
    bool tame() const { return tame_; }
    bool ancestor() const { return ancestor_; }
    const std::map<PotentialKey, Rational>& table() const { return table_; }

    bool in_caps(const PotentialKey& key) const;
    // Zero by genus < 0, or by the tame / ancestor flags.
    bool known_zero(const PotentialKey& key) const;
    void set(const PotentialKey& key, const Rational& value);
    // Throws TruncationLeak outside the caps unless known_zero.
    Rational get(const PotentialKey& key) const;
    Rational get(int genus, std::vector<Insertion> insertions) const;
    // Value of the capped table, zero outside the caps.
    Rational truncated(const PotentialKey& key) const;

    // All keys with n >= 1 inside the caps, in a fixed order.
    std::vector<PotentialKey> keys() const;

    std::string str() const;
    static TruncatedPotential parse(std::string_view text);

private:
    TheoryFrame frame_;
    Caps caps_;
    bool tame_ = false;
    bool ancestor_ = false;
    std::map<PotentialKey, Rational> table_;
};

// Correlator-level formulas for the infinitesimal actions.
Rational r_action_correlator(const LieElement& r, const TruncatedPotential& F, const PotentialKey& key);
Rational s_action_correlator(const LieElement& s, const TruncatedPotential& F, const PotentialKey& key);
Rational v_action_correlator(const LieElement& s, const TruncatedPotential& F, const PotentialKey& key);

enum class ActionMode { r, s, v };
ActionMode parse_action_mode(std::string_view text);
Rational action_correlator(ActionMode mode, const LieElement& x, const TruncatedPotential& F, const PotentialKey& key);

// Coefficient of hbar^{g-1} t^m / m! in Z^{-1} X Z, Z = exp(sum hbar^{g-1} F_g) built from
// the capped table and X the differential operator r-hat, s-hat or v-hat.
class OperatorSeries {
public:
    OperatorSeries(ActionMode mode, const LieElement& x, const TruncatedPotential& F);
    ~OperatorSeries();
    OperatorSeries(const OperatorSeries&) = delete;
    OperatorSeries& operator=(const OperatorSeries&) = delete;

    Rational coefficient(const PotentialKey& key);

private:
    struct Impl;
    Impl* impl_;
};

struct FlowReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;  // keys whose formula leaks out of the caps
    Rational max_discrepancy;
    std::optional<PotentialKey> worst;
};

// Compares the operator route with the correlator formula on every key of F.
FlowReport flow_check(ActionMode mode, const LieElement& x, const TruncatedPotential& F);

// Value plus first-order variation.
struct Dual {
    Rational value;
    Rational eps;
};
Dual operator+(const Dual& a, const Dual& b);
Dual operator-(const Dual& a, const Dual& b);
Dual operator*(const Dual& a, const Dual& b);
Dual operator*(const Rational& c, const Dual& a);

using CorrelatorSource = std::function<Dual(const PotentialKey&)>;

CorrelatorSource value_source(const TruncatedPotential& F);
// Correlators of F with their derivative along the flow of x.
CorrelatorSource flow_source(ActionMode mode, const LieElement& x, const TruncatedPotential& F);
// Uncapped point theory.
CorrelatorSource point_source();

// Entry <p^*(L) prod psi_i^{d_i} ev_i^*(mu_i)> of the induced vector, for any potential.
struct EntrySpec {
    std::map<Marking, int> fields;      // field of each original marking, default 0
    std::map<Marking, int> increments;  // descendant psi powers on original markings
    std::vector<Insertion> added;
};

// L must be kappa-free on a single factor with connected graphs.
Dual induced_entry_general(const GraphSum& L, const EntrySpec& entry, const TheoryFrame& frame,
                           const CorrelatorSource& source);

struct EntryReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    Rational max_value;
    Rational max_derivative;
};

// All entries with added points up to `max_added` and descendant powers within the caps of F;
// entries that leak are skipped.
EntryReport relation_flow_check(const GraphSum& L, ActionMode mode, const LieElement& x, const TruncatedPotential& F,
                                int max_added);

// Residuals of the genus-one family
//   dF1/dt_{d+1}^rho - dF1/dt_0^mu eta^{mu nu} d2F0/dt_0^nu dt_d^rho - 1/24 eta^{mu nu} d3F0/dt_0^mu dt_0^nu dt_d^rho
// at every coefficient t^m with |m| <= max_points and d <= max_d.
struct PdeReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    Rational max_residual;
};
PdeReport genus_one_pde_check(const TruncatedPotential& F, int max_d, int max_points);

// psi_1 - (1/12) [irreducible boundary] on M_{1,1}.
GraphSum genus_one_relation();

}  // namespace taut

#endif
