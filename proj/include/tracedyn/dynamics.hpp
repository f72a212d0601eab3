// Equations of motion from a trace Hamiltonian, symplectic/RK4 integration,
// and the three conserved quantities: the trace Hamiltonian, the trace
// fermion number i*sum_F tr(q_r p_r), and the matrix charge
// sum_B [q_r,p_r] - sum_F {q_r,p_r}.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracedyn/trace_poly.hpp"

namespace tracedyn {

template <class S>
using TangentState = std::vector<std::pair<Matrix<S>, Matrix<S>>>;

// Precompiled derivative table: the symbolic structure does not change along
// a trajectory, only the matrices it is evaluated on.
struct EomTable {
    std::shared_ptr<const Roster> roster;
    std::vector<MatrixPolynomial> dq;  // dH/dq_r
    std::vector<MatrixPolynomial> dp;  // dH/dp_r
};

inline EomTable compile_eom(const TracePolynomial& h) {
    EomTable t;
    t.roster = h.roster();
    for (std::size_t r = 0; r < t.roster->vars.size(); ++r) {
        t.dq.push_back(trace_derivative(h, int(r), Letter::Kind::Q));
        t.dp.push_back(trace_derivative(h, int(r), Letter::Kind::P));
    }
    return t;
}

// qdot_r = eps_r dH/dp_r,  pdot_r = -dH/dq_r.
template <class S>
TangentState<S> eom_field(const EomTable& t, const PhaseState<S>& s, const ConstRegistry& reg) {
    TangentState<S> out;
    out.reserve(s.pairs.size());
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
        double eps = s.roster->epsilon(int(r));
        Matrix<S> qdot = matrix_eval(t.dp[r], s, reg) * eps;
        Matrix<S> pdot = matrix_eval(t.dq[r], s, reg) * Complex(-1.0, 0.0);
        out.emplace_back(std::move(qdot), std::move(pdot));
    }
    return out;
}

template <class S>
void axpy(PhaseState<S>& s, const TangentState<S>& v, double h) {
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
        s.q(int(r)) += v[r].first * h;
        s.p(int(r)) += v[r].second * h;
    }
}

// --- charges -----------------------------------------------------------------

template <class S>
S charge_H(const TracePolynomial& h, const PhaseState<S>& s, const ConstRegistry& reg) {
    return trace_eval(h, s, reg);
}

template <class S>
S charge_N(const PhaseState<S>& s) {
    S acc = detail::scalar_zero(s);
    for (std::size_t r = 0; r < s.pairs.size(); ++r)
        if (s.roster->vars[r].parity == Parity::Fermionic)
            acc += Complex(0.0, 1.0) * (s.q(int(r)) * s.p(int(r))).trace();
    return acc;
}

template <class S>
Matrix<S> charge_ctilde(const PhaseState<S>& s) {
    Matrix<S> acc(s.dim(), detail::scalar_zero(s));
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
        if (s.roster->vars[r].parity == Parity::Bosonic)
            acc += commutator(s.q(int(r)), s.p(int(r)));
        else
            acc -= anticommutator(s.q(int(r)), s.p(int(r)));
    }
    return acc;
}

template <class S>
double scalar_coeff_norm(const S& v) {
    if constexpr (std::is_same_v<S, Complex>)
        return std::abs(v);
    else
        return v.coeff_norm();
}

template <class S>
struct ChargeRecord {
    double time = 0;
    double H_trace = 0;       // real part of the scalar body
    Complex N_trace{};        // body (identically 0 for Grassmann fermion number)
    S H_full{};
    S N_full{};
    Matrix<S> ctilde;
    double ctilde_trace_norm = 0;
    double ctilde_anti_sa_violation = 0;
    double constraint_violation = 0;
};

template <class S>
ChargeRecord<S> make_charge_record(const TracePolynomial& h, const PhaseState<S>& s,
                                   const ConstRegistry& reg) {
    ChargeRecord<S> rec;
    rec.time = s.time;
    rec.H_full = charge_H(h, s, reg);
    rec.N_full = charge_N(s);
    rec.H_trace = ScalarOps<S>::body(rec.H_full).real();
    rec.N_trace = ScalarOps<S>::body(rec.N_full);
    rec.ctilde = charge_ctilde(s);
    rec.ctilde_trace_norm = scalar_coeff_norm(rec.ctilde.trace());
    rec.ctilde_anti_sa_violation = (rec.ctilde + rec.ctilde.adjoint()).fro_norm();
    rec.constraint_violation = check_constraints(s, 0.0).max_violation;
    return rec;
}

// --- integration ---------------------------------------------------------------

enum class Scheme { Leapfrog, Rk4 };
enum class TrajectoryStatus { Ok, NumericalFailure };

template <class S>
struct Trajectory {
    std::vector<ChargeRecord<S>> records;
    std::vector<PhaseState<S>> snapshots;
    PhaseState<S> final_state;
    TrajectoryStatus status = TrajectoryStatus::Ok;
    std::string message;
};

struct IntegrateOptions {
    Scheme scheme = Scheme::Rk4;
    double dt = 1e-3;
    double t_final = 10.0;
    int record_every = 10;
    bool keep_snapshots = false;
};

// H = (words in q and constants) + (words in p and constants), or nothing.
inline std::optional<std::pair<TracePolynomial, TracePolynomial>> split_separable(
    const TracePolynomial& h) {
    std::vector<TraceWord> qw, pw;
    for (const auto& w : h.words()) {
        bool has_q = false, has_p = false;
        for (const auto& l : w.letters) {
            has_q |= l.kind == Letter::Kind::Q;
            has_p |= l.kind == Letter::Kind::P;
        }
        if (has_q && has_p) return std::nullopt;
        (has_p ? pw : qw).push_back(w);
    }
    return std::make_pair(TracePolynomial(h.roster(), std::move(qw), h.degree_cap()),
                          TracePolynomial(h.roster(), std::move(pw), h.degree_cap()));
}

template <class S>
bool state_finite(const PhaseState<S>& s) {
    for (const auto& pr : s.pairs)
        if (!pr.first.is_finite() || !pr.second.is_finite()) return false;
    return true;
}

template <class S>
Trajectory<S> integrate(const TracePolynomial& h, const PhaseState<S>& s0,
                        const ConstRegistry& reg, const IntegrateOptions& opts) {
    Trajectory<S> traj;
    std::optional<std::pair<TracePolynomial, TracePolynomial>> split;
    EomTable table, kick_table, drift_table;
    if (opts.scheme == Scheme::Leapfrog) {
        split = split_separable(h);
        if (!split)
            throw ConfigError("leapfrog needs a separable Hamiltonian tr F(p) + tr G(q)");
        kick_table = compile_eom(split->first);    // q-part: updates p
        drift_table = compile_eom(split->second);  // p-part: updates q
    } else {
        table = compile_eom(h);
    }

    PhaseState<S> s = s0;
    PhaseState<S> last_good = s0;
    const long n_steps = std::lround(opts.t_final / opts.dt);
    auto record = [&](const PhaseState<S>& st) {
        traj.records.push_back(make_charge_record(h, st, reg));
        if (opts.keep_snapshots) traj.snapshots.push_back(st);
    };
    record(s);

    for (long step = 0; step < n_steps; ++step) {
        if (opts.scheme == Scheme::Rk4) {
            TangentState<S> k1 = eom_field(table, s, reg);
            PhaseState<S> s2 = s;
            axpy(s2, k1, opts.dt / 2);
            TangentState<S> k2 = eom_field(table, s2, reg);
            PhaseState<S> s3 = s;
            axpy(s3, k2, opts.dt / 2);
            TangentState<S> k3 = eom_field(table, s3, reg);
            PhaseState<S> s4 = s;
            axpy(s4, k3, opts.dt);
            TangentState<S> k4 = eom_field(table, s4, reg);
            axpy(s, k1, opts.dt / 6);
            axpy(s, k2, opts.dt / 3);
            axpy(s, k3, opts.dt / 3);
            axpy(s, k4, opts.dt / 6);
        } else {
            // kick-drift-kick
            TangentState<S> f = eom_field(kick_table, s, reg);
            for (std::size_t r = 0; r < s.pairs.size(); ++r)
                s.p(int(r)) += f[r].second * (opts.dt / 2);
            f = eom_field(drift_table, s, reg);
            for (std::size_t r = 0; r < s.pairs.size(); ++r)
                s.q(int(r)) += f[r].first * opts.dt;
            f = eom_field(kick_table, s, reg);
            for (std::size_t r = 0; r < s.pairs.size(); ++r)
                s.p(int(r)) += f[r].second * (opts.dt / 2);
        }
        s.time = s0.time + double(step + 1) * opts.dt;
        if ((step + 1) % opts.record_every == 0 || step + 1 == n_steps) {
            if (!state_finite(s)) {
                traj.status = TrajectoryStatus::NumericalFailure;
                traj.message = "non-finite state at t=" + format_double(s.time) +
                               "; returning last good snapshot";
                traj.final_state = last_good;
                return traj;
            }
            record(s);
            last_good = s;
        }
    }
    traj.final_state = s;
    return traj;
}

// One explicit Euler step of the canonical flow generated by W.
template <class S>
PhaseState<S> canonical_generator_flow(const TracePolynomial& w, const PhaseState<S>& s,
                                       const ConstRegistry& reg, double eps) {
    EomTable t = compile_eom(w);
    TangentState<S> f = eom_field(t, s, reg);
    PhaseState<S> r = s;
    axpy(r, f, eps);
    r.time = s.time;
    return r;
}

// --- Liouville ------------------------------------------------------------------

struct DivergenceReport {
    double divergence = 0;
    double field_scale = 0;  // max |coordinate| of the flow field at the point
};

// Numerical divergence of the phase-space flow over all independent real
// coordinates of a bosonic state (central differences).
inline DivergenceReport liouville_divergence(const TracePolynomial& h, const CPhaseState& s,
                                             const ConstRegistry& reg) {
    for (const auto& v : s.roster->vars)
        if (v.parity != Parity::Bosonic)
            throw ConfigError("liouville_divergence expects a bosonic-only roster");
    EomTable table = compile_eom(h);
    auto basis = self_adjoint_basis(s.dim());

    TangentState<Complex> f0 = eom_field(table, s, reg);
    double coord_scale = 0;
    for (const auto& pr : f0) {
        for (const auto& e : basis) {
            coord_scale = std::max(coord_scale, std::abs((e * pr.first).trace().real()));
            coord_scale = std::max(coord_scale, std::abs((e * pr.second).trace().real()));
        }
    }

    double state_scale = 1.0;
    for (const auto& pr : s.pairs)
        state_scale = std::max({state_scale, pr.first.fro_norm(), pr.second.fro_norm()});
    const double eps = 1e-4 * state_scale;

    DivergenceReport rep;
    rep.field_scale = coord_scale;
    for (std::size_t r = 0; r < s.pairs.size(); ++r) {
        for (int side = 0; side < 2; ++side) {
            for (const auto& e : basis) {
                CPhaseState sp = s, sm = s;
                auto& mp = side == 0 ? sp.q(int(r)) : sp.p(int(r));
                auto& mm = side == 0 ? sm.q(int(r)) : sm.p(int(r));
                mp += e * eps;
                mm -= e * eps;
                TangentState<Complex> fp = eom_field(table, sp, reg);
                TangentState<Complex> fm = eom_field(table, sm, reg);
                const CMatrix& dp = side == 0 ? fp[r].first : fp[r].second;
                const CMatrix& dm = side == 0 ? fm[r].first : fm[r].second;
                CMatrix diff = (dp - dm) * (1.0 / (2 * eps));
                rep.divergence += (e * diff).trace().real();
            }
        }
    }
    return rep;
}

// --- random Hamiltonian families ---------------------------------------------

struct RandomHamiltonianOptions {
    int n_bosonic_words = 3;
    int max_degree = 4;
    bool fermion_bilinear = true;    // include tr(q_f p_f)-type words
    bool fermion_coupling = false;   // dress fermion bilinears with bosonic letters
    double coeff_scale = 0.5;
};

// Self-adjoint random trace Hamiltonian; fermionic words keep one q and one
// p per word so the fermion-number phase symmetry is preserved.
inline TracePolynomial random_hamiltonian(std::shared_ptr<const Roster> roster,
                                          std::mt19937_64& rng,
                                          const RandomHamiltonianOptions& opts = {}) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<int> bos, fer;
    for (std::size_t r = 0; r < roster->vars.size(); ++r)
        (roster->vars[r].parity == Parity::Bosonic ? bos : fer).push_back(int(r));
    std::vector<TraceWord> words;

    auto rand_bos_letter = [&]() -> Letter {
        int slot = bos[std::size_t(rng() % bos.size())];
        return {rng() % 2 == 0 ? Letter::Kind::Q : Letter::Kind::P, slot};
    };

    if (!bos.empty()) {
        std::uniform_int_distribution<int> len_dist(2, opts.max_degree);
        for (int w = 0; w < opts.n_bosonic_words; ++w) {
            TraceWord tw;
            tw.coeff = Complex(opts.coeff_scale * u(rng), opts.coeff_scale * u(rng));
            int len = len_dist(rng);
            for (int i = 0; i < len; ++i) tw.letters.push_back(rand_bos_letter());
            words.push_back(std::move(tw));
        }
        // keep the walk bounded: add a positive quadratic piece per pair
        for (int slot : bos) {
            TraceWord kq{Complex(0.5, 0.0), {{Letter::Kind::Q, slot}, {Letter::Kind::Q, slot}}};
            TraceWord kp{Complex(0.5, 0.0), {{Letter::Kind::P, slot}, {Letter::Kind::P, slot}}};
            words.push_back(kq);
            words.push_back(kp);
        }
    }
    for (int slot : fer) {
        TraceWord biline{Complex(opts.coeff_scale * u(rng), opts.coeff_scale * u(rng)),
                         {{Letter::Kind::Q, slot}, {Letter::Kind::P, slot}}};
        if (opts.fermion_bilinear) words.push_back(biline);
        if (opts.fermion_coupling && !bos.empty()) {
            TraceWord cw;
            cw.coeff = Complex(opts.coeff_scale * u(rng), opts.coeff_scale * u(rng));
            cw.letters = {rand_bos_letter(), {Letter::Kind::Q, slot}, {Letter::Kind::P, slot}};
            if (int(cw.letters.size()) + 1 <= opts.max_degree && rng() % 2 == 0)
                cw.letters.insert(cw.letters.begin(), rand_bos_letter());
            words.push_back(std::move(cw));
        }
    }
    TracePolynomial p(roster, std::move(words));
    return make_self_adjoint(p);
}

}  // namespace tracedyn
