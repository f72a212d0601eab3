// Matrix-valued phase space: variable roster with parity and adjointness
// rules, state snapshots, constraint checks, unitary action, serialization.
#pragma once

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tracedyn/matrix.hpp"
#include "tracedyn/rng.hpp"

namespace tracedyn {

enum class Parity { Bosonic, Fermionic };

enum class AdjointRule {
    SelfAdjointPair,      // q = q^dag, p = p^dag (bosonic)
    PEqualsQDagger,       // p = q^dag (fermionic)
    GeneralizedDiagonal,  // p = a * q^dag with a real (diagonal A_sr = a_r * 1)
};

struct VariableSpec {
    std::string label;
    Parity parity = Parity::Bosonic;
    AdjointRule rule = AdjointRule::SelfAdjointPair;
    double general_scale = 1.0;  // the a_r of the generalized rule
};

struct Roster {
    int dim = 2;
    int grassmann_gens = 0;  // generator budget; 0 for purely bosonic rosters
    std::vector<VariableSpec> vars;

    bool has_fermions() const {
        for (const auto& v : vars)
            if (v.parity == Parity::Fermionic) return true;
        return false;
    }
    int index_of(const std::string& label) const {
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i].label == label) return int(i);
        throw ConfigError("unknown variable label: " + label);
    }
    double epsilon(int r) const { return vars[r].parity == Parity::Bosonic ? 1.0 : -1.0; }
};

// Generators consumed by fermionic variable r: one conjugate pair per matrix
// entry, laid out variable-major. Used by the canonical fermionic builders.
inline int fermionic_generators_needed(const Roster& roster) {
    int count = 0;
    for (const auto& v : roster.vars)
        if (v.parity == Parity::Fermionic) count += 2 * roster.dim * roster.dim;
    return count;
}

template <class S>
struct PhaseState {
    std::shared_ptr<const Roster> roster;
    std::vector<std::pair<Matrix<S>, Matrix<S>>> pairs;  // (q_r, p_r)
    double time = 0;

    const Matrix<S>& q(int r) const { return pairs[r].first; }
    const Matrix<S>& p(int r) const { return pairs[r].second; }
    Matrix<S>& q(int r) { return pairs[r].first; }
    Matrix<S>& p(int r) { return pairs[r].second; }
    int dim() const { return roster->dim; }
};

using CPhaseState = PhaseState<Complex>;
using GPhaseState = PhaseState<GrassmannElement>;

template <class S>
Matrix<S> adjoint(const Matrix<S>& m) {
    return m.adjoint();
}

struct ConstraintReport {
    std::vector<bool> ok;
    double max_violation = 0;
    bool all_ok() const {
        for (bool b : ok)
            if (!b) return false;
        return true;
    }
};

// Per-variable adjointness check; tolerance covers post-arithmetic drift.
template <class S>
ConstraintReport check_constraints(const PhaseState<S>& s, double tol = 1e-12) {
    ConstraintReport rep;
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
        const auto& spec = s.roster->vars[r];
        double viol = 0;
        if (spec.rule == AdjointRule::SelfAdjointPair) {
            viol = std::max((s.q(int(r)) - s.q(int(r)).adjoint()).fro_norm(),
                            (s.p(int(r)) - s.p(int(r)).adjoint()).fro_norm());
        } else {
            double a = spec.rule == AdjointRule::GeneralizedDiagonal ? spec.general_scale : 1.0;
            viol = (s.p(int(r)) - s.q(int(r)).adjoint() * a).fro_norm();
        }
        rep.ok.push_back(viol <= tol);
        rep.max_violation = std::max(rep.max_violation, viol);
    }
    return rep;
}

inline bool is_unitary(const CMatrix& u, double tol = 1e-10) {
    CMatrix d = u.adjoint() * u - CMatrix::identity(u.dim(), Complex{});
    return d.fro_norm() <= tol;
}

// Conjugates every variable: x -> U^dag x U. Trace polynomials are invariant.
template <class S>
PhaseState<S> apply_unitary(const PhaseState<S>& s, const CMatrix& u) {
    if (u.dim() != s.dim()) throw AlgebraMismatchError("unitary dimension mismatch");
    if (!is_unitary(u)) throw ConfigError("apply_unitary: matrix is not unitary");
    PhaseState<S> r = s;
    Matrix<S> uu(0, S{}), ud(0, S{});
    if constexpr (std::is_same_v<S, Complex>) {
        uu = u;
    } else {
        uu = promote(u, s.roster->grassmann_gens);
    }
    ud = uu.adjoint();
    for (auto& pr : r.pairs) {
        pr.first = ud * pr.first * uu;
        pr.second = ud * pr.second * uu;
    }
    return r;
}

// --- random state builders -------------------------------------------------

inline CMatrix random_self_adjoint(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(n, Complex{});
    for (int i = 0; i < n; ++i) {
        m(i, i) = Complex(scale * g(rng), 0.0);
        for (int j = i + 1; j < n; ++j) {
            Complex z(scale * g(rng) / std::sqrt(2.0), scale * g(rng) / std::sqrt(2.0));
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return m;
}

inline CMatrix random_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        Complex d = r(j, j);
        Complex ph = std::abs(d) > 0 ? d / std::abs(d) : Complex(1, 0);
        q.col(j) *= ph;
    }
    return from_eigen(q);
}

// Bosonic-only state with self-adjoint pairs.
inline CPhaseState random_bosonic_state(std::shared_ptr<const Roster> roster,
                                        std::mt19937_64& rng, double scale = 1.0) {
    CPhaseState s;
    s.roster = roster;
    for (const auto& v : roster->vars) {
        if (v.parity != Parity::Bosonic)
            throw ConfigError("random_bosonic_state: roster has fermionic variables");
        s.pairs.emplace_back(random_self_adjoint(roster->dim, rng, scale),
                             random_self_adjoint(roster->dim, rng, scale));
    }
    return s;
}

// Mixed state in the Grassmann algebra: bosonic pairs are body-only
// self-adjoint matrices, fermionic q entries are single generators with
// random complex coefficients and p follows the declared adjoint rule.
inline GPhaseState random_graded_state(std::shared_ptr<const Roster> roster,
                                       std::mt19937_64& rng, double scale = 1.0) {
    const int G = roster->grassmann_gens;
    if (G < fermionic_generators_needed(*roster))
        throw ConfigError("grassmann generator budget too small for roster");
    std::normal_distribution<double> g(0.0, 1.0);
    GPhaseState s;
    s.roster = roster;
    int next_gen = 0;
    for (const auto& v : roster->vars) {
        if (v.parity == Parity::Bosonic) {
            s.pairs.emplace_back(promote(random_self_adjoint(roster->dim, rng, scale), G),
                                 promote(random_self_adjoint(roster->dim, rng, scale), G));
            continue;
        }
        GMatrix q(roster->dim, GrassmannElement::scalar(0.0, G));
        for (int i = 0; i < roster->dim; ++i)
            for (int j = 0; j < roster->dim; ++j) {
                Complex c(scale * g(rng), scale * g(rng));
                q(i, j) = c * GrassmannElement::generator(next_gen, G);
                next_gen += 2;  // odd indices are reserved for the conjugates
            }
        double a = v.rule == AdjointRule::GeneralizedDiagonal ? v.general_scale : 1.0;
        s.pairs.emplace_back(q, q.adjoint() * a);
    }
    return s;
}

// Orthonormal basis of self-adjoint matrices under Re tr(A^dag B).
inline std::vector<CMatrix> self_adjoint_basis(int n) {
    std::vector<CMatrix> basis;
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < n; ++i) {
        CMatrix e(n, Complex{});
        e(i, i) = 1.0;
        basis.push_back(e);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            CMatrix re(n, Complex{});
            re(i, j) = s;
            re(j, i) = s;
            basis.push_back(re);
            CMatrix im(n, Complex{});
            im(i, j) = Complex(0, s);
            im(j, i) = Complex(0, -s);
            basis.push_back(im);
        }
    return basis;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json roster_to_json(const Roster& r) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : r.vars) {
        vars.push_back({{"label", v.label},
                        {"parity", v.parity == Parity::Bosonic ? "bosonic" : "fermionic"},
                        {"rule", v.rule == AdjointRule::SelfAdjointPair        ? "self_adjoint_pair"
                                 : v.rule == AdjointRule::PEqualsQDagger       ? "p_equals_q_dagger"
                                                                               : "generalized_diagonal"},
                        {"general_scale", v.general_scale}});
    }
    return {{"dim", r.dim}, {"grassmann_gens", r.grassmann_gens}, {"vars", vars}};
}

inline Roster roster_from_json(const nlohmann::json& j) {
    Roster r;
    r.dim = j.at("dim").get<int>();
    r.grassmann_gens = j.at("grassmann_gens").get<int>();
    for (const auto& v : j.at("vars")) {
        VariableSpec s;
        s.label = v.at("label").get<std::string>();
        s.parity = v.at("parity") == "bosonic" ? Parity::Bosonic : Parity::Fermionic;
        std::string rule = v.at("rule");
        s.rule = rule == "self_adjoint_pair"  ? AdjointRule::SelfAdjointPair
                 : rule == "p_equals_q_dagger" ? AdjointRule::PEqualsQDagger
                                               : AdjointRule::GeneralizedDiagonal;
        s.general_scale = v.at("general_scale").get<double>();
        r.vars.push_back(s);
    }
    return r;
}

inline nlohmann::json cmatrix_to_json(const CMatrix& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) {
            re.push_back(m(i, j).real());
            im.push_back(m(i, j).imag());
        }
    return {{"re", re}, {"im", im}};
}

inline CMatrix cmatrix_from_json(const nlohmann::json& j, int n) {
    CMatrix m(n, Complex{});
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            m(i, k) = Complex(re.at(std::size_t(i) * n + k).get<double>(),
                              im.at(std::size_t(i) * n + k).get<double>());
    return m;
}

inline nlohmann::json gmatrix_to_json(const GMatrix& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : m(i, j).terms())
                terms.push_back({t.mask, t.coeff.real(), t.coeff.imag()});
            entries.push_back(terms);
        }
    return {{"gens", m.dim() > 0 ? m.proto().generators() : 0}, {"entries", entries}};
}

inline GMatrix gmatrix_from_json(const nlohmann::json& j, int n) {
    int gens = j.at("gens").get<int>();
    GMatrix m(n, GrassmannElement::scalar(0.0, gens));
    const auto& entries = j.at("entries");
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            GrassmannElement e = GrassmannElement::scalar(0.0, gens);
            for (const auto& t : entries.at(std::size_t(i) * n + k)) {
                std::uint64_t mask = t.at(0).get<std::uint64_t>();
                Complex c(t.at(1).get<double>(), t.at(2).get<double>());
                GrassmannElement mono = GrassmannElement::scalar(c, gens);
                for (int g = 0; g < 64; ++g)
                    if (mask & (std::uint64_t(1) << g))
                        mono = mono * GrassmannElement::generator(g, gens);
                e += mono;
            }
            m(i, k) = e;
        }
    return m;
}

template <class S>
nlohmann::json state_to_json(const PhaseState<S>& s) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& pr : s.pairs) {
        if constexpr (std::is_same_v<S, Complex>) {
            vars.push_back({{"q", cmatrix_to_json(pr.first)}, {"p", cmatrix_to_json(pr.second)}});
        } else {
            vars.push_back({{"q", gmatrix_to_json(pr.first)}, {"p", gmatrix_to_json(pr.second)}});
        }
    }
    return {{"dim", s.roster->dim},
            {"time", s.time},
            {"roster", roster_to_json(*s.roster)},
            {"values", vars}};
}

template <class S>
PhaseState<S> state_from_json(const nlohmann::json& j) {
    PhaseState<S> s;
    auto roster = std::make_shared<Roster>(roster_from_json(j.at("roster")));
    s.roster = roster;
    s.time = j.at("time").get<double>();
    int n = j.at("dim").get<int>();
    for (const auto& v : j.at("values")) {
        if constexpr (std::is_same_v<S, Complex>) {
            s.pairs.emplace_back(cmatrix_from_json(v.at("q"), n), cmatrix_from_json(v.at("p"), n));
        } else {
            s.pairs.emplace_back(gmatrix_from_json(v.at("q"), n), gmatrix_from_json(v.at("p"), n));
        }
    }
    return s;
}

}  // namespace tracedyn
