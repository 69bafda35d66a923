#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "voacx/genus1.hpp"

using namespace voacx;

namespace {

const FockVector vac = FockVector::vacuum();
const FockVector a = HeisenbergVoa::a_state();
const FockVector aa(Partition{1, 1});

double max_dev(const ComplexSeries& x, const ComplexSeries& y) { return *series_compare(x, y); }

} // namespace

TEST_CASE("partition function and trivial insertions")
{
    const std::vector<double> p{1, 1, 2, 3, 5, 7, 11, 15, 22, 30};
    const auto z = genus1_trace({}, 10, 11);
    CHECK(z.q_shift == rat(-1, 24));
    for (int k = 0; k < 10; ++k) CHECK(z.series.coeff(k) == Complex(p[static_cast<std::size_t>(k)]));
    CHECK(max_dev(genus1_partition(10).series, z.series) == 0.0);

    const auto one_a = genus1_trace({{a, Complex(0.2, 0.3)}}, 8, 12);
    for (int k = 0; k < 8; ++k) CHECK(one_a.series.coeff(k) == Complex(0));
    const auto one_vac = genus1_trace({{vac, Complex(0.2, 0.3)}}, 8, 12);
    CHECK(max_dev(one_vac.series, genus1_partition(8).series) == 0.0);
    CHECK_THROWS_AS(genus1_trace({}, 8, 8), DomainError);
}

TEST_CASE("zero-mode classification")
{
    auto f = classify_zero_mode(HeisenbergVoa::omega_tilde(), 8);
    REQUIRE(f);
    CHECK(f->alpha == 1);
    CHECK(f->beta == rat(-1, 24));
    auto fa = classify_zero_mode(a, 8);
    REQUIRE(fa);
    CHECK(fa->alpha == 0);
    CHECK(fa->beta == 0);
    CHECK_FALSE(classify_zero_mode(FockVector(Partition{2, 1}) + FockVector(Partition{1, 1, 1}), 8).has_value());
    CHECK_THROWS_AS(genus1_D1_form(FockVector(Partition{1, 1, 1, 1}), 8), UnsupportedError);
}

TEST_CASE("one-point function of the shifted conformal vector")
{
    // Tr o(omega~) q^{L(0)} = sum_k (k - 1/24) p(k) q^k
    const auto t = genus1_trace({{HeisenbergVoa::omega_tilde(), Complex(0.1, 0.2)}}, 8, 9);
    const auto r = genus1_reduce({{HeisenbergVoa::omega_tilde(), Complex(0.1, 0.2)}}, 8);
    const auto z = genus1_partition(8);
    for (int k = 0; k < 8; ++k) {
        const Complex expected = (k - 1.0 / 24.0) * z.series.coeff(k);
        CHECK(std::abs(t.series.coeff(k) - expected) < 1e-12);
        CHECK(std::abs(r.series.coeff(k) - expected) < 1e-12);
    }
}

TEST_CASE("two-point functions against the trace, exact nomes")
{
    // With rational nomes both sides are exact; the only difference is the trace's
    // truncation of intermediate weights, of size about (p2/p1)^(cutoff - q_order + 1).
    const Rational p1(1), p2 = rat(1, 1000);
    const std::vector<FockVector> pool{vac, a, aa};
    for (const auto& u : pool) {
        for (const auto& v : pool) {
            const InsertionList<Rational> ins{{u, p1}, {v, p2}};
            const auto t = genus1_trace_nomes(ins, 8, 12);
            const auto r = genus1_reduce_nomes(ins, 8);
            CHECK(*series_compare(t.series, r.series) < 1e-9);
            const InsertionList<Rational> swapped{{v, p2}, {u, p1}};
            CHECK(genus1_reduce_nomes(swapped, 8).series == r.series);
        }
    }
    // F(a, a) = P_2 Z(q), exactly
    const auto faa = genus1_reduce_nomes(InsertionList<Rational>{{a, p1}, {a, p2}}, 8);
    CHECK(faa.series == pm_q_series(2, p1 / p2, 8, true) * genus1_partition_t<Rational>(8).series);
}

TEST_CASE("two-point functions at complex points")
{
    const Complex z1(0.3, 0.5), z2(-1.7, -0.2);
    for (const auto& u : {vac, a, aa}) {
        for (const auto& v : {vac, a, aa}) {
            const InsertionList<Complex> ins{{u, z1}, {v, z2}};
            const auto t = genus1_trace(ins, 8, 24);
            const auto r = genus1_reduce(ins, 8);
            const double scale = std::max(1.0, std::abs(r.series.coeff(7)));
            CHECK(max_dev(t.series, r.series) < 1e-9 * scale);
            CHECK(max_dev(genus1_reduce({{v, z2}, {u, z1}}, 8).series, r.series) < 1e-12 * scale);
        }
    }
}

TEST_CASE("three-point functions against the trace")
{
    const Complex z1(0.4, 0.1), z2(-5.5, 0.6), z3(-11.2, -0.3);
    const std::vector<std::vector<FockVector>> cases{{a, a, aa}, {aa, a, a}, {HeisenbergVoa::omega_tilde(), a, a}, {a, vac, a}};
    for (const auto& c : cases) {
        const InsertionList<Complex> ins{{c[0], z1}, {c[1], z2}, {c[2], z3}};
        const auto t = genus1_trace(ins, 6, 12);
        const auto r = genus1_reduce(ins, 6);
        const double scale = std::max(1.0, std::abs(t.series.coeff(5)));
        CHECK(max_dev(t.series, r.series) < 1e-8 * scale);
    }
}

TEST_CASE("square-bracket zero modes sum to zero across slots")
{
    // sum_k F(.. v[0] v_k ..) = 0, so a constant added to P_1 never changes the reduction.
    const Complex z2(0.2, 0.1), z3(-4.0, 0.5);
    const auto& V = heisenberg();
    for (const auto& v : {aa, HeisenbergVoa::omega_tilde(), FockVector(Partition{2})}) {
        const auto s1 = genus1_reduce({{V.apply_square_bracket(v, 0, a), z2}, {a, z3}}, 6).series;
        const auto s2 = genus1_reduce({{a, z2}, {V.apply_square_bracket(v, 0, a), z3}}, 6).series;
        CHECK(max_dev(s1 + s2, ComplexSeries("q", 6)) < 1e-10);
    }
}
