#include "taut/corr.hpp"
#include "taut/eval.hpp"
#include "taut/givental.hpp"
#include "taut/graph.hpp"
#include "taut/graph_sum.hpp"
#include "taut/lee.hpp"
#include "taut/tau.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace taut;

// Bad input that is not a mathematical precondition (exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    bool decimal = false;
    int jobs = 1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

std::string number(const Rational& q, const Options& opt) {
    if (!opt.decimal) return q.str();
    std::ostringstream s;
    s << q.str() << "\t~" << std::setprecision(17) << q.to_double() << " (approximate)";
    return s.str();
}

std::vector<int> int_list(const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoi(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("expected a comma-separated list of integers, got '" + text + "'");
        }
    }
    return out;
}

Factor space(int genus, int markings) {
    if (genus < 0 || markings < 0) throw UsageError("genus and markings must be >= 0");
    return Factor(genus, standard_markings(markings));
}

std::string verdict_text(const Verdict& v) {
    if (v.vanishing()) return "GORENSTEIN-VANISHING\n";
    return "FAILS\nwitness\t" + v.witness->test.id() + "\nvalue\t" + v.witness->value.str() + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Tautological relations on moduli spaces of curves"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--decimal", opt.decimal, "Add an approximate decimal column (not authoritative)");
    app.add_option("--jobs", opt.jobs, "Worker threads for constraint rows")->check(CLI::PositiveNumber);

    int genus = 0, markings = 0, degree = 0, k = 1;
    std::string out_path, class_path, monomial, psi_text, kappa_text, csv_path, potential_path, lie_path, mode_text;
    std::string tau_ks = "1";
    bool no_verify = false;
    int max_added = 2;

    auto* enumerate = app.add_subcommand("enumerate", "List decorated graphs of a given degree");
    auto* intnum = app.add_subcommand("intnum", "Integral of psi and kappa classes over M_{g,n}");
    auto* pair_cmd = app.add_subcommand("pair", "Pair a class with a complementary monomial");
    auto* check_cmd = app.add_subcommand("check", "Decide Gorenstein vanishing of a class");
    auto* find = app.add_subcommand("find-relations", "Basis of relations in a given degree");
    auto* rank_cmd = app.add_subcommand("rank", "Generators, rank and nullity of the constraint matrix");
    auto* tau_cmd = app.add_subcommand("tau", "Apply tau_k to a class");
    auto* giv = app.add_subcommand("givental-check", "Cross-check infinitesimal actions on a potential");

    for (auto* c : {enumerate, find, rank_cmd}) {
        c->add_option("--genus", genus)->required();
        c->add_option("--markings", markings)->required();
        c->add_option("--degree", degree)->required();
    }
    enumerate->add_option("--out", out_path);
    intnum->add_option("--genus", genus)->required();
    intnum->add_option("--psi", psi_text, "Comma-separated psi exponents")->required();
    intnum->add_option("--kappa", kappa_text, "Comma-separated kappa multi-index");
    pair_cmd->add_option("--class", class_path)->required();
    pair_cmd->add_option("--monomial", monomial, "e.g. psi[1]^2*kappa[1,2] | 1")->required();
    check_cmd->add_option("--class", class_path)->required();
    check_cmd->add_option("--tau", tau_ks, "Comma-separated tau indices used by the recursion");
    find->add_option("--csv", csv_path, "Write the constraint matrix as CSV");
    find->add_flag("--no-verify", no_verify, "Skip the check of each returned relation");
    tau_cmd->add_option("--k", k)->required()->check(CLI::PositiveNumber);
    tau_cmd->add_option("--class", class_path)->required();
    giv->add_option("--potential", potential_path)->required();
    giv->add_option("--lie", lie_path)->required();
    giv->add_option("--mode", mode_text)->required()->check(CLI::IsMember({"r", "s", "v"}));
    giv->add_option("--class", class_path, "Also check flow invariance of the induced vector of this class");
    giv->add_option("--max-added", max_added, "Added points for induced-vector entries");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        std::ostringstream out;
        if (*enumerate) {
            const Factor f = space(genus, markings);
            const auto graphs = enumerate_graphs(f, degree);
            out << "# " << f.str() << " degree " << degree << ": " << graphs.size() << " graphs\n";
            for (const auto& g : graphs) out << "1\t" << g.key << "\n";
            write_output(out_path, out.str());
            return 0;
        }
        if (*intnum) {
            out << number(integral_psi_kappa(genus, int_list(psi_text), int_list(kappa_text)), opt) << "\n";
        } else if (*pair_cmd) {
            const GraphSum L = parse_graph_sum(read_file(class_path));
            const PsiKappaMonomial M = PsiKappaMonomial::parse(monomial);
            out << number(L.empty() ? Rational(0) : pair(L, M), opt) << "\n";
        } else if (*check_cmd) {
            const GraphSum L = parse_graph_sum(read_file(class_path));
            out << verdict_text(check_with_tau(L, int_list(tau_ks)));
        } else if (*find) {
            RelationOptions ro;
            ro.jobs = opt.jobs;
            ro.verify = !no_verify;
            const Factor f = space(genus, markings);
            const ConstraintMatrix m = constraint_matrix(f, degree, ro);
            const auto rels = relations_from(m, f);
            if (ro.verify)
                for (const auto& r : rels)
                    if (!check(r).vanishing()) throw std::logic_error("relation failed the check:\n" + r.str());
            if (!csv_path.empty()) write_output(csv_path, m.csv());
            out << "# " << f.str() << " degree " << degree << ": " << rels.size() << " relations\n";
            for (std::size_t i = 0; i < rels.size(); ++i) out << "\n# relation " << i + 1 << "\n" << rels[i].str();
        } else if (*rank_cmd) {
            RelationOptions ro;
            ro.jobs = opt.jobs;
            const RankReport r = gorenstein_rank(space(genus, markings), degree, ro);
            out << "generators=" << r.generators << " rank=" << r.rank << " nullity=" << r.nullity << "\n";
        } else if (*tau_cmd) {
            const GraphSum L = parse_graph_sum(read_file(class_path));
            for (const auto& [comp, sum] : tau(k, L)) out << "## " << comp.str() << "\n" << sum.str();
        } else if (*giv) {
            const TruncatedPotential F = TruncatedPotential::parse(read_file(potential_path));
            const LieElement x = LieElement::parse(read_file(lie_path), F.frame());
            const ActionMode mode = parse_action_mode(mode_text);
            const FlowReport r = flow_check(mode, x, F);
            out << "operator-vs-formula checked=" << r.checked << " skipped=" << r.skipped
                << " max-discrepancy=" << r.max_discrepancy.str() << "\n";
            if (r.worst) out << "worst\t" << r.worst->str() << "\n";
            if (!class_path.empty()) {
                const GraphSum L = parse_graph_sum(read_file(class_path));
                const EntryReport e = relation_flow_check(L, mode, x, F, max_added);
                out << "induced-vector checked=" << e.checked << " skipped=" << e.skipped
                    << " max-entry=" << e.max_value.str() << " max-derivative=" << e.max_derivative.str() << "\n";
            }
        }
        std::cout << out.str();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
