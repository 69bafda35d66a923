#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "voacx/genus0.hpp"

using namespace voacx;

namespace {

const FockVector vac = FockVector::vacuum();
const FockVector a = HeisenbergVoa::a_state();
const FockVector aa(Partition{1, 1});

InsertionList<Rational> make(const std::vector<FockVector>& states, const std::vector<Rational>& points)
{
    InsertionList<Rational> out;
    for (std::size_t i = 0; i < states.size(); ++i) out.push_back({states[i], points[i]});
    return out;
}

} // namespace

TEST_CASE("small correlators")
{
    CHECK(genus0_npoint(InsertionList<Rational>{}, vac, vac) == 1);
    CHECK(genus0_npoint(InsertionList<Rational>{}, FockVector(Partition{1}), FockVector(Partition{2})) == 0);
    CHECK(genus0_npoint(make({a}, {rat(1, 3)}), vac, vac) == 0);
    const Rational z1 = rat(3, 2), z2 = rat(-1, 3);
    CHECK(genus0_npoint(make({a, a}, {z1, z2}), vac, vac) == 1 / ((z1 - z2) * (z1 - z2)));
    // Virasoro two-point function: <omega omega> = (c/2)/(z1-z2)^4 and aa = 2 omega.
    CHECK(genus0_npoint(make({aa, aa}, {z1, z2}), vac, vac) == 2 / ipow(z1 - z2, 4));
    // <omega omega omega> = c / (z12 z13 z23)^2.
    const Rational z3 = rat(2, 7);
    const Rational d = (z1 - z2) * (z1 - z3) * (z2 - z3);
    CHECK(genus0_npoint(make({aa, aa, aa}, {z1, z2, z3}), vac, vac) == 8 / (d * d));
    CHECK(genus0_reduce(make({aa, aa, aa}, {z1, z2, z3}), vac, vac) == 8 / (d * d));
    CHECK(genus0_npoint(make({vac, a, a}, {rat(7), z1, z2}), vac, vac) == 1 / ((z1 - z2) * (z1 - z2)));
    CHECK_THROWS_AS(genus0_npoint(make({a, a}, {z1, z1}), vac, vac), SingularError);
}

TEST_CASE("oracle rational form")
{
    const auto r = genus0_rational({a, a}, vac, vac);
    CHECK(r.degree == 0);
    CHECK(r.numerator.size() == 1);
    CHECK(r.numerator.at({0, 0}) == 1);
    // One-point function with non-vacuum ends: <{1}'|Y(a,z)|vac> = 1 and <vac'|Y(a,z)|{1}> = z^-2.
    CHECK(genus0_npoint(make({a}, {rat(5)}), FockVector(Partition{1}), vac) == 1);
    CHECK(genus0_npoint(make({a}, {rat(5)}), vac, FockVector(Partition{1})) == rat(1, 25));
}

TEST_CASE("transpose of modes")
{
    const FockVector phi(Partition{2, 1}, rat(3, 2));
    for (int n = -2; n <= 3; ++n) {
        const auto t = transpose_mode(a, n, phi);
        for (const auto& p : fock_basis(6)) CHECK(pair_dual(t, FockVector(p)) == pair_dual(phi, heisenberg().mode(a, n, FockVector(p))));
    }
}

TEST_CASE("reduction equals the mode-expansion oracle")
{
    const std::vector<FockVector> pool{vac, a, aa};
    const std::vector<Rational> pts{rat(5, 2), rat(-4, 3), rat(2, 7)};
    int checked = 0;
    for (std::size_t n = 0; n <= 3; ++n) {
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
            std::vector<FockVector> states;
            std::vector<Rational> z;
            for (std::size_t i = 0; i < n; ++i) {
                states.push_back(pool[idx[i]]);
                z.push_back(pts[i]);
            }
            const auto ins = make(states, z);
            CHECK(genus0_reduce(ins, vac, vac) == genus0_npoint(ins, vac, vac));
            ++checked;
            std::size_t i = 0;
            while (i < n && ++idx[i] == pool.size()) idx[i++] = 0;
            if (i == n) break;
        }
    }
    CHECK(checked == 1 + 3 + 9 + 27);
}

TEST_CASE("reduction with non-vacuum boundaries and mixed weights")
{
    const FockVector wt(HeisenbergVoa::omega_tilde());
    const FockVector mixed = a + rat(2, 3) * FockVector(Partition{2}) - vac;
    const std::vector<Rational> pts{rat(3), rat(-1, 2), rat(5, 4)};
    const std::vector<std::pair<FockVector, FockVector>> ends{
        {FockVector(Partition{1}), vac},
        {vac, FockVector(Partition{2})},
        {FockVector(Partition{1, 1}), FockVector(Partition{1})},
        {FockVector(Partition{2}) + FockVector(Partition{1, 1}), FockVector(Partition{1})},
    };
    for (const auto& [out, in] : ends) {
        for (const auto& states : std::vector<std::vector<FockVector>>{{a}, {a, wt}, {mixed, a}, {a, aa, a}, {wt, mixed}}) {
            const auto ins = make(states, std::vector<Rational>(pts.begin(), pts.begin() + static_cast<long>(states.size())));
            CHECK(genus0_reduce(ins, out, in) == genus0_npoint(ins, out, in));
        }
    }
}

TEST_CASE("complex points")
{
    InsertionList<Complex> ins{{a, Complex(1.0, 0.5)}, {aa, Complex(-0.3, 0.2)}, {a, Complex(0.4, -1.1)}};
    const Complex r = genus0_reduce(ins, vac, vac);
    const Complex o = genus0_npoint(ins, vac, vac);
    CHECK(std::abs(r - o) < 1e-12 * std::abs(o));
}

TEST_CASE("vacuum insertion terms")
{
    const InsertionList<Rational> rest = make({a, a}, {rat(1), rat(2)});
    const Insertion<Rational> x{vac, rat(3)};
    CHECK(genus0_D2_terms(x, rest, vac, vac).empty());
    const auto d1 = genus0_D1_terms(x, rest, vac, vac);
    REQUIRE(d1.size() == 1);
    CHECK(d1[0].coeff == 1);
}
