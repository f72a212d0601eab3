#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tracedyn/grassmann.hpp"

using namespace tracedyn;
using Cx = Complex;

namespace {

GrassmannElement gen(int i, int g = 8) { return GrassmannElement::generator(i, g); }

// Random element with dyadic coefficients so ring identities hold exactly in
// floating point.
GrassmannElement random_element(std::mt19937_64& rng, int gens, int max_terms = 6) {
    GrassmannElement x = GrassmannElement::scalar(0.0, gens);
    std::uniform_int_distribution<int> coeff(-4, 4);
    std::uniform_int_distribution<int> n_terms(1, max_terms);
    int k = n_terms(rng);
    for (int t = 0; t < k; ++t) {
        std::uint64_t mask = rng() & ((std::uint64_t(1) << gens) - 1);
        GrassmannElement mono =
            GrassmannElement::scalar(Cx(coeff(rng) * 0.5, coeff(rng) * 0.5), gens);
        for (int i = 0; i < gens; ++i)
            if (mask & (std::uint64_t(1) << i)) mono = mono * gen(i, gens);
        x += mono;
    }
    return x;
}

GrassmannElement random_homogeneous(std::mt19937_64& rng, int gens, int parity) {
    for (int tries = 0; tries < 200; ++tries) {
        auto x = random_element(rng, gens, 4);
        auto part = parity == 0 ? x.even_part() : x.odd_part();
        if (!part.is_zero()) return part;
    }
    return parity == 0 ? GrassmannElement::scalar(1.0, gens) : gen(0, gens);
}

}  // namespace

TEST_CASE("generator products anticommute and square to zero") {
    auto t1 = gen(0), t2 = gen(2);
    auto t12 = t1 * t2;
    CHECK(t12.terms().size() == 1);
    CHECK(t12.terms()[0].mask == 0b101);
    CHECK(t12.terms()[0].coeff == Cx(1, 0));
    CHECK((t2 * t1) == -t12);
    CHECK((t1 * t1).is_zero());
}

TEST_CASE("distributive expansion: (1+2a)(3b) = 3b + 6ab") {
    auto a = gen(0), b = gen(2);
    auto lhs = (GrassmannElement::scalar(1.0, 8) + 2.0 * a) * (3.0 * b);
    auto expect = 3.0 * b + 6.0 * (a * b);
    CHECK(lhs == expect);
}

TEST_CASE("conjugation examples") {
    // conj(i a) = -i a*, with a* the paired generator
    auto a = gen(0);
    auto c = g_conj(Cx(0, 1) * a);
    CHECK(c == Cx(0, -1) * gen(1));
    // conj(a b) = b* a* = -a* b*
    auto ab = gen(0) * gen(2);
    CHECK(g_conj(ab) == -(gen(1) * gen(3)));
}

TEST_CASE("conjugation is an involution") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 50; ++it) {
        auto x = random_element(rng, 8);
        CHECK(g_conj(g_conj(x)) == x);
        CHECK(x.conj_product_preserving().conj_product_preserving() == x);
    }
}

TEST_CASE("grade classification") {
    CHECK(grade(GrassmannElement::scalar(1.0, 4)) == Grade::Even);
    CHECK(grade(gen(0, 4)) == Grade::Odd);
    CHECK(grade(GrassmannElement::scalar(1.0, 4) + gen(0, 4)) == Grade::Mixed);
    std::mt19937_64 rng(3);
    auto x = random_element(rng, 8);
    CHECK(x.even_part() + x.odd_part() == x);
}

TEST_CASE("berezin rules") {
    auto t1 = gen(0, 4);
    CHECK(t1.berezin({0}) == GrassmannElement::scalar(1.0, 4));
    CHECK(GrassmannElement::scalar(1.0, 4).berezin({0}).is_zero());
    // int dtheta2 dtheta1 (a + b theta1 theta2) = b
    Cx a(2.5, 0), b(-1.0, 3.0);
    auto x = GrassmannElement::scalar(a, 4) + b * (gen(0, 4) * gen(1, 4));
    CHECK(x.berezin({0, 1}) == GrassmannElement::scalar(b, 4));
}

TEST_CASE("berezin is linear and kills terms missing a generator") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 30; ++it) {
        auto x = random_element(rng, 6);
        auto y = random_element(rng, 6);
        CHECK((x + y).berezin({2}) == x.berezin({2}) + y.berezin({2}));
    }
    auto no_theta0 = gen(2, 4) * gen(3, 4);
    CHECK(no_theta0.berezin({0}).is_zero());
}

TEST_CASE("associativity and distributivity are exact on dyadic coefficients") {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 60; ++it) {
        auto x = random_element(rng, 6, 4);
        auto y = random_element(rng, 6, 4);
        auto z = random_element(rng, 6, 4);
        CHECK((x * y) * z == x * (y * z));
        CHECK(x * (y + z) == x * y + x * z);
    }
}

TEST_CASE("graded sign coherence for homogeneous elements") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 40; ++it) {
        int px = int(rng() % 2), py = int(rng() % 2);
        auto x = random_homogeneous(rng, 6, px);
        auto y = random_homogeneous(rng, 6, py);
        auto lhs = x * y;
        auto rhs = y * x;
        if (px == 1 && py == 1) rhs = -rhs;
        CHECK(lhs == rhs);
    }
}

TEST_CASE("reversing conjugation anti-distributes over products") {
    std::mt19937_64 rng(29);
    for (int it = 0; it < 40; ++it) {
        auto x = random_element(rng, 6, 4);
        auto y = random_element(rng, 6, 4);
        CHECK(g_conj(x * y) == g_conj(y) * g_conj(x));
    }
}

TEST_CASE("product-preserving conjugation distributes in order") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 40; ++it) {
        auto x = random_element(rng, 6, 4);
        auto y = random_element(rng, 6, 4);
        CHECK((x * y).conj_product_preserving() ==
              x.conj_product_preserving() * y.conj_product_preserving());
    }
}

TEST_CASE("generator budget mismatch fails fast") {
    auto x = gen(0, 4) * gen(1, 4);
    auto y = gen(0, 6) * gen(2, 6);
    CHECK_THROWS_AS((void)(x * y), AlgebraMismatchError);
    CHECK_THROWS_AS((void)(x + y), AlgebraMismatchError);
    // pure scalars are compatible with any budget
    CHECK((GrassmannElement::scalar(2.0) * y) == 2.0 * y);
}

TEST_CASE("tiny coefficients are dropped") {
    auto x = GrassmannElement::scalar(1.0, 2) + gen(0, 2);
    auto y = x * 1e-20;
    CHECK(y.is_zero());
}

TEST_CASE("exp of an even element terminates and matches the series") {
    auto s = gen(0, 4) * gen(1, 4);
    auto e = grassmann_exp(Cx(2.0, 0.0) * s);
    CHECK(e == GrassmannElement::scalar(1.0, 4) + 2.0 * s);
    auto c = grassmann_exp(GrassmannElement::scalar(Cx(0.0, M_PI), 4));
    CHECK(std::abs(c.body() - Cx(-1.0, 0.0)) < 1e-12);
    CHECK_THROWS_AS(grassmann_exp(gen(0, 4)), AlgebraMismatchError);
}
