// Trace polynomials over the matrix variables: canonical word form with the
// graded-cyclic sign rule, numeric evaluation, the trace derivative, and the
// trace Poisson bracket (numeric and symbolic).
//
// The trace derivative of Tr A with respect to x is the matrix D with
// D_ij = d(Tr A)/d(x_ji). Fermionic letters use the left-derivative
// convention: the word is cycled so the differentiated letter leads, at the
// cost of the graded-cyclic sign.
#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "tracedyn/phase_space.hpp"

namespace tracedyn {

inline constexpr int kDefaultDegreeCap = 8;
inline constexpr int kIdentityTag = -1;

struct Letter {
    enum class Kind : std::uint8_t { Q, P, Const };
    Kind kind = Kind::Q;
    int index = 0;  // roster slot for Q/P, registry tag for Const

    friend bool operator==(const Letter& a, const Letter& b) {
        return a.kind == b.kind && a.index == b.index;
    }
    friend bool operator<(const Letter& a, const Letter& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.index < b.index;
    }
};

struct TraceWord {
    Complex coeff{};
    std::vector<Letter> letters;
};

class ConstRegistry {
public:
    int add(const CMatrix& m) {
        mats_.push_back(m);
        return int(mats_.size()) - 1;
    }
    const CMatrix& get(int tag) const {
        if (tag < 0 || tag >= int(mats_.size()))
            throw ConfigError("constant-matrix tag out of range: j" + std::to_string(tag));
        return mats_[std::size_t(tag)];
    }
    int size() const { return int(mats_.size()); }

private:
    std::vector<CMatrix> mats_;
};

inline int letter_parity(const Roster& roster, const Letter& l) {
    if (l.kind == Letter::Kind::Const) return 0;
    return roster.vars[std::size_t(l.index)].parity == Parity::Fermionic ? 1 : 0;
}

namespace detail {

// Rotation sign: moving the leading block [0,s) past [s,n) costs
// (-1)^{|pre| * |post|} under the graded-cyclic trace rule.
inline int rotation_sign(const Roster& roster, const std::vector<Letter>& letters, std::size_t s) {
    int pre = 0, post = 0;
    for (std::size_t i = 0; i < letters.size(); ++i)
        (i < s ? pre : post) += letter_parity(roster, letters[i]);
    return ((pre & 1) && (post & 1)) ? -1 : 1;
}

struct CanonicalWord {
    std::vector<Letter> letters;
    int sign = 1;
    bool vanishes = false;  // least rotation reachable with both signs
};

inline CanonicalWord canonical_rotation(const Roster& roster, const std::vector<Letter>& letters) {
    CanonicalWord best;
    best.letters = letters;
    best.sign = 1;
    if (letters.size() < 2) return best;
    const std::size_t n = letters.size();
    std::vector<Letter> cand(n);
    for (std::size_t s = 1; s < n; ++s) {
        for (std::size_t i = 0; i < n; ++i) cand[i] = letters[(s + i) % n];
        int sgn = rotation_sign(roster, letters, s);
        if (cand < best.letters) {
            best.letters = cand;
            best.sign = sgn;
        } else if (cand == best.letters && sgn != best.sign) {
            best.vanishes = true;
        }
    }
    return best;
}

inline void sort_merge_words(std::vector<TraceWord>& words) {
    std::sort(words.begin(), words.end(),
              [](const TraceWord& a, const TraceWord& b) { return a.letters < b.letters; });
    std::vector<TraceWord> merged;
    for (auto& w : words) {
        if (!merged.empty() && merged.back().letters == w.letters)
            merged.back().coeff += w.coeff;
        else
            merged.push_back(std::move(w));
    }
    std::erase_if(merged, [](const TraceWord& w) { return std::abs(w.coeff) <= kCoeffDropTol; });
    words = std::move(merged);
}

}  // namespace detail

class TracePolynomial {
public:
    TracePolynomial() = default;
    explicit TracePolynomial(std::shared_ptr<const Roster> roster, int degree_cap = kDefaultDegreeCap)
        : roster_(std::move(roster)), cap_(degree_cap) {}
    TracePolynomial(std::shared_ptr<const Roster> roster, std::vector<TraceWord> words,
                    int degree_cap = kDefaultDegreeCap)
        : roster_(std::move(roster)), cap_(degree_cap) {
        for (auto& w : words) add_word(std::move(w));
        canonicalize();
    }

    const std::shared_ptr<const Roster>& roster() const { return roster_; }
    const std::vector<TraceWord>& words() const { return words_; }
    int degree_cap() const { return cap_; }
    bool is_zero() const { return words_.empty(); }
    int degree() const {
        std::size_t d = 0;
        for (const auto& w : words_) d = std::max(d, w.letters.size());
        return int(d);
    }

    bool uses(int var, Letter::Kind kind) const {
        for (const auto& w : words_)
            for (const auto& l : w.letters)
                if (l.kind == kind && l.index == var) return true;
        return false;
    }

    friend TracePolynomial operator+(const TracePolynomial& a, const TracePolynomial& b) {
        TracePolynomial r(a.roster_ ? a.roster_ : b.roster_, std::max(a.cap_, b.cap_));
        r.words_ = a.words_;
        r.words_.insert(r.words_.end(), b.words_.begin(), b.words_.end());
        r.canonicalize();
        return r;
    }
    friend TracePolynomial operator-(const TracePolynomial& a, const TracePolynomial& b) {
        return a + (b * Complex(-1.0, 0.0));
    }
    friend TracePolynomial operator*(const TracePolynomial& a, Complex c) {
        TracePolynomial r = a;
        for (auto& w : r.words_) w.coeff *= c;
        std::erase_if(r.words_, [](const TraceWord& w) { return std::abs(w.coeff) <= kCoeffDropTol; });
        return r;
    }
    friend TracePolynomial operator*(Complex c, const TracePolynomial& a) { return a * c; }

    // Reverse every word and adjoint every letter; Tr of the result evaluates
    // to the (product-preserving) conjugate of Tr of the original.
    TracePolynomial adjoint_poly() const {
        TracePolynomial r(roster_, cap_);
        for (const auto& w : words_) {
            TraceWord aw;
            int odd = 0;
            Complex factor = std::conj(w.coeff);
            for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
                auto [l, f] = adjoint_letter(*it);
                aw.letters.push_back(l);
                factor *= f;
                odd += letter_parity(*roster_, *it);
            }
            if ((odd * (odd - 1) / 2) % 2 == 1) factor = -factor;
            aw.coeff = factor;
            r.add_word(std::move(aw));
        }
        r.canonicalize();
        return r;
    }

private:
    std::shared_ptr<const Roster> roster_;
    std::vector<TraceWord> words_;
    int cap_ = kDefaultDegreeCap;

    void add_word(TraceWord w) {
        if (int(w.letters.size()) > cap_)
            throw ConfigError("trace word exceeds degree cap " + std::to_string(cap_));
        words_.push_back(std::move(w));
    }

    void canonicalize() {
        std::vector<TraceWord> out;
        out.reserve(words_.size());
        for (auto& w : words_) {
            auto canon = detail::canonical_rotation(*roster_, w.letters);
            if (canon.vanishes) continue;
            TraceWord cw;
            cw.letters = std::move(canon.letters);
            cw.coeff = w.coeff * double(canon.sign);
            out.push_back(std::move(cw));
        }
        detail::sort_merge_words(out);
        words_ = std::move(out);
    }

    std::pair<Letter, Complex> adjoint_letter(const Letter& l) const {
        if (l.kind == Letter::Kind::Const) return {l, 1.0};  // registry constants must be self-adjoint
        const auto& v = roster_->vars[std::size_t(l.index)];
        if (v.parity == Parity::Bosonic) return {l, 1.0};
        double a = v.rule == AdjointRule::GeneralizedDiagonal ? v.general_scale : 1.0;
        if (l.kind == Letter::Kind::Q) return {{Letter::Kind::P, l.index}, 1.0 / a};
        return {{Letter::Kind::Q, l.index}, a};
    }
};

inline TracePolynomial make_self_adjoint(const TracePolynomial& p) {
    return (p + p.adjoint_poly()) * Complex(0.5, 0.0);
}

// Matrix polynomial: same word structure without the outer trace. Words are
// not cyclic-equivalent here; only exact duplicates merge. The empty word is
// the identity matrix.
class MatrixPolynomial {
public:
    MatrixPolynomial() = default;
    explicit MatrixPolynomial(std::shared_ptr<const Roster> roster) : roster_(std::move(roster)) {}
    MatrixPolynomial(std::shared_ptr<const Roster> roster, std::vector<TraceWord> words)
        : roster_(std::move(roster)), words_(std::move(words)) {
        detail::sort_merge_words(words_);
    }

    const std::shared_ptr<const Roster>& roster() const { return roster_; }
    const std::vector<TraceWord>& words() const { return words_; }
    bool is_zero() const { return words_.empty(); }

    void append(TraceWord w) { words_.push_back(std::move(w)); }
    void merge() { detail::sort_merge_words(words_); }

    friend MatrixPolynomial operator+(const MatrixPolynomial& a, const MatrixPolynomial& b) {
        MatrixPolynomial r(a.roster_ ? a.roster_ : b.roster_);
        r.words_ = a.words_;
        r.words_.insert(r.words_.end(), b.words_.begin(), b.words_.end());
        r.merge();
        return r;
    }
    friend MatrixPolynomial operator*(const MatrixPolynomial& a, Complex c) {
        MatrixPolynomial r = a;
        for (auto& w : r.words_) w.coeff *= c;
        std::erase_if(r.words_, [](const TraceWord& w) { return std::abs(w.coeff) <= kCoeffDropTol; });
        return r;
    }

private:
    std::shared_ptr<const Roster> roster_;
    std::vector<TraceWord> words_;
};

// --- evaluation --------------------------------------------------------------

namespace detail {

template <class S>
S scalar_zero(const PhaseState<S>& s) {
    if constexpr (std::is_same_v<S, Complex>) {
        (void)s;
        return Complex(0.0, 0.0);
    } else {
        return GrassmannElement::scalar(0.0, s.roster->grassmann_gens);
    }
}

template <class S>
Matrix<S> letter_matrix(const Letter& l, const PhaseState<S>& s, const ConstRegistry& reg) {
    if (l.kind == Letter::Kind::Const) {
        CMatrix c = l.index == kIdentityTag ? CMatrix::identity(s.dim(), Complex{}) : reg.get(l.index);
        if (c.dim() != s.dim()) throw AlgebraMismatchError("constant matrix dimension mismatch");
        if constexpr (std::is_same_v<S, Complex>)
            return c;
        else
            return promote(c, s.roster->grassmann_gens);
    }
    if (l.index < 0 || l.index >= int(s.pairs.size()))
        throw ConfigError("variable index out of range in trace word");
    if constexpr (std::is_same_v<S, Complex>) {
        if (s.roster->vars[std::size_t(l.index)].parity == Parity::Fermionic)
            throw AlgebraMismatchError("fermionic letter needs a Grassmann-valued state");
    }
    return l.kind == Letter::Kind::Q ? s.q(l.index) : s.p(l.index);
}

template <class S>
Matrix<S> word_matrix(const std::vector<Letter>& letters, const PhaseState<S>& s,
                      const ConstRegistry& reg) {
    if (letters.empty()) {
        if constexpr (std::is_same_v<S, Complex>)
            return CMatrix::identity(s.dim(), Complex{});
        else
            return Matrix<S>::identity(s.dim(),
                                       GrassmannElement::scalar(0.0, s.roster->grassmann_gens));
    }
    Matrix<S> prod = letter_matrix(letters[0], s, reg);
    for (std::size_t i = 1; i < letters.size(); ++i) prod = prod * letter_matrix(letters[i], s, reg);
    return prod;
}

}  // namespace detail

template <class S>
S trace_eval(const TracePolynomial& p, const PhaseState<S>& s, const ConstRegistry& reg) {
    S acc = detail::scalar_zero(s);
    for (const auto& w : p.words()) acc += w.coeff * detail::word_matrix(w.letters, s, reg).trace();
    return acc;
}

template <class S>
Matrix<S> matrix_eval(const MatrixPolynomial& p, const PhaseState<S>& s, const ConstRegistry& reg) {
    Matrix<S> acc(s.dim(), detail::scalar_zero(s));
    for (const auto& w : p.words()) acc += detail::word_matrix(w.letters, s, reg) * w.coeff;
    return acc;
}

// --- trace derivative ---------------------------------------------------------

inline MatrixPolynomial trace_derivative(const TracePolynomial& p, int var, Letter::Kind kind) {
    MatrixPolynomial d(p.roster());
    const Roster& roster = *p.roster();
    for (const auto& w : p.words()) {
        const auto& L = w.letters;
        for (std::size_t k = 0; k < L.size(); ++k) {
            if (!(L[k].kind == kind && L[k].index == var)) continue;
            int sgn = detail::rotation_sign(roster, L, k);
            TraceWord dw;
            dw.coeff = w.coeff * double(sgn);
            dw.letters.insert(dw.letters.end(), L.begin() + k + 1, L.end());
            dw.letters.insert(dw.letters.end(), L.begin(), L.begin() + k);
            d.append(std::move(dw));
        }
    }
    d.merge();
    return d;
}

// --- Poisson bracket ----------------------------------------------------------

template <class S>
S poisson_bracket(const TracePolynomial& a, const TracePolynomial& b, const PhaseState<S>& s,
                  const ConstRegistry& reg) {
    S acc = detail::scalar_zero(s);
    const Roster& roster = *s.roster;
    for (std::size_t r = 0; r < roster.vars.size(); ++r) {
        const int ri = int(r);
        const bool a_q = a.uses(ri, Letter::Kind::Q), a_p = a.uses(ri, Letter::Kind::P);
        const bool b_q = b.uses(ri, Letter::Kind::Q), b_p = b.uses(ri, Letter::Kind::P);
        if (!((a_q && b_p) || (b_q && a_p))) continue;
        const double eps = roster.epsilon(ri);
        if (a_q && b_p) {
            auto da = matrix_eval(trace_derivative(a, ri, Letter::Kind::Q), s, reg);
            auto db = matrix_eval(trace_derivative(b, ri, Letter::Kind::P), s, reg);
            acc += Complex(eps, 0.0) * (da * db).trace();
        }
        if (b_q && a_p) {
            auto db = matrix_eval(trace_derivative(b, ri, Letter::Kind::Q), s, reg);
            auto da = matrix_eval(trace_derivative(a, ri, Letter::Kind::P), s, reg);
            acc += Complex(-eps, 0.0) * (db * da).trace();
        }
    }
    return acc;
}

inline TracePolynomial poisson_bracket_symbolic(const TracePolynomial& a, const TracePolynomial& b,
                                                int degree_cap = kDefaultDegreeCap) {
    const Roster& roster = *a.roster();
    std::vector<TraceWord> words;
    for (std::size_t r = 0; r < roster.vars.size(); ++r) {
        const int ri = int(r);
        const double eps = roster.epsilon(ri);
        auto concat = [&](const MatrixPolynomial& u, const MatrixPolynomial& v, double sign) {
            for (const auto& wu : u.words())
                for (const auto& wv : v.words()) {
                    TraceWord w;
                    w.coeff = wu.coeff * wv.coeff * sign * eps;
                    w.letters = wu.letters;
                    w.letters.insert(w.letters.end(), wv.letters.begin(), wv.letters.end());
                    words.push_back(std::move(w));
                }
        };
        if (a.uses(ri, Letter::Kind::Q) && b.uses(ri, Letter::Kind::P))
            concat(trace_derivative(a, ri, Letter::Kind::Q), trace_derivative(b, ri, Letter::Kind::P),
                   1.0);
        if (b.uses(ri, Letter::Kind::Q) && a.uses(ri, Letter::Kind::P))
            concat(trace_derivative(b, ri, Letter::Kind::Q), trace_derivative(a, ri, Letter::Kind::P),
                   -1.0);
    }
    return TracePolynomial(a.roster(), std::move(words), degree_cap);
}

template <class S>
double jacobi_residual(const TracePolynomial& a, const TracePolynomial& b, const TracePolynomial& c,
                       const PhaseState<S>& s, const ConstRegistry& reg) {
    auto bc = poisson_bracket_symbolic(b, c);
    auto ca = poisson_bracket_symbolic(c, a);
    auto ab = poisson_bracket_symbolic(a, b);
    S total = poisson_bracket(a, bc, s, reg);
    total += poisson_bracket(b, ca, s, reg);
    total += poisson_bracket(c, ab, s, reg);
    if constexpr (std::is_same_v<S, Complex>)
        return std::abs(total);
    else
        return total.coeff_norm();
}

// --- textual grammar ----------------------------------------------------------
//
//   poly   := ['-'] term { ('+'|'-') term }
//   term   := [coeff '*'] word
//   coeff  := number | '(' number ',' number ')'
//   word   := 'tr' '(' letter { letter } ')'
//   letter := 'q'INT | 'p'INT | 'j'INT | '1'
//
// qK / pK refer to roster variable with label K (1-based position), jK to a
// registry constant, and '1' to the identity matrix.

namespace detail {

struct PolyParser {
    const std::string& text;
    const Roster& roster;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("polynomial parse error at offset " + std::to_string(pos) + ": " + msg);
    }
    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    double number() {
        skip_ws();
        std::size_t start = pos;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
        double v = 0;
        auto res = std::from_chars(text.data() + start, text.data() + pos, v);
        if (res.ec != std::errc() || res.ptr != text.data() + pos || start == pos)
            fail("expected a number");
        return v;
    }
    Complex coeff() {
        skip_ws();
        if (eat('(')) {
            double re = number();
            if (!eat(',')) fail("expected ',' in complex coefficient");
            double im = number();
            if (!eat(')')) fail("expected ')' after complex coefficient");
            return Complex(re, im);
        }
        return Complex(number(), 0.0);
    }
    int integer() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (start == pos) fail("expected an index");
        return std::stoi(text.substr(start, pos - start));
    }
    std::vector<Letter> word() {
        skip_ws();
        if (text.compare(pos, 2, "tr") != 0) fail("expected 'tr('");
        pos += 2;
        if (!eat('(')) fail("expected '(' after tr");
        std::vector<Letter> letters;
        while (true) {
            skip_ws();
            if (pos >= text.size()) fail("unterminated tr(...)");
            char c = text[pos];
            if (c == ')') {
                ++pos;
                break;
            }
            if (c == '1') {
                ++pos;
                letters.push_back({Letter::Kind::Const, kIdentityTag});
            } else if (c == 'q' || c == 'p' || c == 'j') {
                ++pos;
                int idx = integer();
                if (c == 'j') {
                    letters.push_back({Letter::Kind::Const, idx});
                } else {
                    int slot = roster.index_of(std::to_string(idx));
                    letters.push_back({c == 'q' ? Letter::Kind::Q : Letter::Kind::P, slot});
                }
            } else {
                fail(std::string("unexpected symbol '") + c + "' in word");
            }
        }
        if (letters.empty()) fail("empty tr()");
        return letters;
    }
};

}  // namespace detail

inline TracePolynomial parse_trace_polynomial(const std::string& text,
                                              std::shared_ptr<const Roster> roster,
                                              int degree_cap = kDefaultDegreeCap) {
    detail::PolyParser p{text, *roster};
    std::vector<TraceWord> words;
    double lead = p.eat('-') ? -1.0 : 1.0;
    while (true) {
        p.skip_ws();
        TraceWord w;
        std::size_t save = p.pos;
        bool have_coeff = false;
        char c = p.pos < text.size() ? text[p.pos] : '\0';
        if (c == '(' || std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            // '1' could open a coefficient or be shorthand inside a word; a
            // bare term never starts with a digit unless it is a coefficient.
            w.coeff = p.coeff();
            have_coeff = true;
            if (!p.eat('*')) {
                p.pos = save;
                have_coeff = false;
            }
        }
        if (!have_coeff) w.coeff = Complex(1.0, 0.0);
        w.coeff *= lead;
        w.letters = p.word();
        words.push_back(std::move(w));
        p.skip_ws();
        if (p.pos >= text.size()) break;
        if (p.eat('+'))
            lead = 1.0;
        else if (p.eat('-'))
            lead = -1.0;
        else
            p.fail("expected '+' or '-' between terms");
    }
    return TracePolynomial(std::move(roster), std::move(words), degree_cap);
}

inline std::string print_letter(const Roster& roster, const Letter& l) {
    if (l.kind == Letter::Kind::Const)
        return l.index == kIdentityTag ? "1" : "j" + std::to_string(l.index);
    const std::string& label = roster.vars[std::size_t(l.index)].label;
    return (l.kind == Letter::Kind::Q ? "q" : "p") + label;
}

inline std::string print_trace_polynomial(const TracePolynomial& p) {
    if (p.words().empty()) return "0 * tr(1)";
    const Roster& roster = *p.roster();
    std::string out;
    bool first = true;
    for (const auto& w : p.words()) {
        Complex c = w.coeff;
        std::string sign = " + ";
        if (c.imag() == 0.0 && c.real() < 0) {
            sign = " - ";
            c = -c;
        }
        if (first) {
            if (sign == " - ") out += "-";
            first = false;
        } else {
            out += sign;
        }
        out += format_complex(c) + " * tr(";
        for (std::size_t i = 0; i < w.letters.size(); ++i) {
            if (i) out += " ";
            out += print_letter(roster, w.letters[i]);
        }
        out += ")";
    }
    return out;
}

}  // namespace tracedyn
