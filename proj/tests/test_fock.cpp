#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "voacx/fock.hpp"

#include <random>

using namespace voacx;

namespace {

const HeisenbergVoa& V = heisenberg();

// Partition numbers from the Euler product, independently of the enumeration.
std::vector<long> partition_numbers(int n)
{
    std::vector<long> p(static_cast<std::size_t>(n + 1), 0);
    p[0] = 1;
    for (int part = 1; part <= n; ++part)
        for (int w = part; w <= n; ++w) p[static_cast<std::size_t>(w)] += p[static_cast<std::size_t>(w - part)];
    return p;
}

FockVector a_mode(int n, const FockVector& v) { return HeisenbergVoa::heisenberg_mode(n, v); }

// v(k) w from the Borcherds iterate formula, peeling one a(-n) at a time.
FockVector oracle_mode(const Partition& v, int k, const FockVector& w);

FockVector oracle_basis_mode(const Partition& v, int k, const Partition& w)
{
    static std::map<std::tuple<Partition, int, Partition>, FockVector> memo;
    auto key = std::tuple{v, k, w};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    FockVector out;
    const int ww = partition_weight(w);
    if (v.empty()) {
        if (k == -1) out = FockVector(w);
    } else if (ww + partition_weight(v) - k - 1 >= 0) {
        const int m = -v.front();
        const Partition rest(v.begin() + 1, v.end());
        const int bw = partition_weight(rest);
        const FockVector fw(w);
        for (int i = 0; i <= std::max(ww + bw - 1 - k, ww); ++i) {
            const Rational c = ((i % 2) ? Rational(-1) : Rational(1)) * binomial(static_cast<long long>(m), i);
            FockVector t1 = a_mode(m - i, oracle_mode(rest, k + i, fw));
            FockVector t2 = oracle_mode(rest, m + k - i, a_mode(i, fw));
            t1 *= c;
            t2 *= c * ((m % 2) ? Rational(-1) : Rational(1));
            out += t1;
            out -= t2;
        }
    }
    memo.emplace(key, out);
    return out;
}

FockVector oracle_mode(const Partition& v, int k, const FockVector& w)
{
    FockVector out;
    for (const auto& [p, c] : w.terms()) out += c * oracle_basis_mode(v, k, p);
    return out;
}

FockVector random_vector(std::mt19937& gen, int max_weight)
{
    const auto basis = fock_basis(max_weight + 1);
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    std::uniform_int_distribution<int> c(-3, 3);
    FockVector v;
    for (int i = 0; i < 3; ++i) v.add(basis[pick(gen)], Rational(c(gen)));
    return v;
}

// Laurent-series coefficient extraction helpers for the square-bracket oracle.
RationalSeries exp_series(int scale, int trunc)
{
    RationalSeries s("z", trunc);
    Rational term(1);
    for (int k = 0; k < trunc; ++k) {
        s.set(k, term);
        term *= Rational(scale) / Rational(k + 1);
    }
    return s;
}

} // namespace

TEST_CASE("basis enumeration")
{
    CHECK(fock_basis(0).empty());
    CHECK(fock_basis(1) == std::vector<Partition>{Partition{}});
    CHECK(fock_basis(5).size() == 12);
    const auto p = partition_numbers(14);
    long total = 0;
    for (int w = 0; w < 15; ++w) {
        CHECK(partitions_of(w).size() == static_cast<std::size_t>(p[static_cast<std::size_t>(w)]));
        total += p[static_cast<std::size_t>(w)];
    }
    CHECK(fock_basis(15).size() == static_cast<std::size_t>(total));
    const auto b = fock_basis(6);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(partition_weight(b[i - 1]) <= partition_weight(b[i]));
}

TEST_CASE("heisenberg generators")
{
    CHECK(a_mode(1, HeisenbergVoa::a_state()) == FockVector::vacuum());
    CHECK(a_mode(2, FockVector::vacuum()).empty());
    CHECK(a_mode(-1, FockVector::vacuum()) == FockVector(Partition{1}));
    CHECK(a_mode(0, FockVector(Partition{2, 1})).empty());
    for (const auto& p : fock_basis(7)) {
        const FockVector v(p);
        for (int m = -4; m <= 4; ++m) {
            for (int n = -4; n <= 4; ++n) {
                FockVector lhs = a_mode(m, a_mode(n, v)) - a_mode(n, a_mode(m, v));
                FockVector rhs = (m + n == 0) ? Rational(m) * v : FockVector();
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("cutoff tracking")
{
    FockVector v(Partition{2}, Rational(1), 4);
    auto up = a_mode(-3, v);
    CHECK(up.cutoff() == 7);
    auto lowered = up.truncated(4);
    CHECK(lowered.empty());
    CHECK(lowered.cutoff() == 4);
}

TEST_CASE("vertex matrix elements")
{
    auto s = V.vertex_matrix_element(FockVector::vacuum(), {}, {});
    CHECK(s == RationalSeries::constant("z", Rational(1)));
    auto t = V.vertex_matrix_element(HeisenbergVoa::a_state(), {1}, {});
    CHECK(t == RationalSeries::constant("z", Rational(1)));
    auto u = V.vertex_matrix_element(HeisenbergVoa::a_state(), {}, {1});
    CHECK(u == RationalSeries::monomial("z", -2, Rational(1)));
}

TEST_CASE("modes agree with the Borcherds iterate oracle")
{
    for (const auto& v : fock_basis(5)) {
        for (const auto& w : fock_basis(4)) {
            const FockVector fw(w);
            for (int k = -3; k <= 6; ++k) {
                CAPTURE(partition_string(v));
                CAPTURE(partition_string(w));
                CAPTURE(k);
                CHECK(V.mode(FockVector(v), k, fw) == oracle_mode(v, k, fw));
            }
        }
    }
}

TEST_CASE("grading of modes")
{
    for (const auto& v : fock_basis(5))
        for (const auto& w : fock_basis(5))
            for (int n = -3; n <= 5; ++n) {
                auto r = V.mode(FockVector(v), n, FockVector(w));
                if (!r.empty()) CHECK(r.weight() == partition_weight(w) + partition_weight(v) - n - 1);
            }
}

TEST_CASE("zero modes")
{
    for (const auto& p : fock_basis(6)) {
        const FockVector w(p);
        CHECK(V.apply_zero_mode(HeisenbergVoa::a_state(), w).empty());
        CHECK(V.apply_zero_mode(HeisenbergVoa::omega(), w) == Rational(partition_weight(p)) * w);
        CHECK(V.apply_zero_mode(FockVector::vacuum(), w) == w);
    }
}

TEST_CASE("virasoro modes")
{
    CHECK(HeisenbergVoa::virasoro_mode(0, FockVector(Partition{2, 1})) == Rational(3) * FockVector(Partition{2, 1}));
    const auto vac = FockVector::vacuum();
    auto L = [](int m, const FockVector& v) { return HeisenbergVoa::virasoro_mode(m, v); };
    CHECK((L(1, L(-1, vac)) - L(-1, L(1, vac))).empty());
    CHECK(L(2, L(-2, vac)) - L(-2, L(2, vac)) == rat(1, 2) * vac);
    // Sugawara form equals omega(m+1).
    for (const auto& p : fock_basis(7))
        for (int m = -3; m <= 4; ++m) CHECK(L(m, FockVector(p)) == V.mode(HeisenbergVoa::omega(), m + 1, FockVector(p)));
    // Virasoro relations with c = 1.
    for (const auto& p : fock_basis(6)) {
        const FockVector v(p);
        for (int m = -4; m <= 4; ++m) {
            for (int n = -4; n <= 4; ++n) {
                FockVector lhs = L(m, L(n, v)) - L(n, L(m, v));
                FockVector rhs = Rational(m - n) * L(m + n, v);
                if (m + n == 0) rhs += rat(m * m * m - m, 12) * v;
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("commutator formula")
{
    std::mt19937 gen(3);
    for (int trial = 0; trial < 12; ++trial) {
        const auto u = random_vector(gen, 3).homogeneous_components().begin()->second;
        const auto v = random_vector(gen, 3);
        const auto w = random_vector(gen, 3);
        for (int k = -2; k <= 3; ++k) {
            for (int n = -3; n <= 4; ++n) {
                // [u(k), v(n)] = sum_j binom(k, j) (u(j)v)(k+n-j)
                FockVector lhs = V.mode(u, k, V.mode(v, n, w)) - V.mode(v, n, V.mode(u, k, w));
                FockVector rhs;
                for (int j = 0; j <= 8; ++j) {
                    FockVector t = V.mode(V.mode(u, j, v), k + n - j, w);
                    t *= binomial(static_cast<long long>(k), j);
                    rhs += t;
                }
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("translation property")
{
    for (const auto& v : fock_basis(5)) {
        const FockVector fv(v);
        const FockVector dv = HeisenbergVoa::virasoro_mode(-1, fv);
        for (const auto& w : fock_basis(4))
            for (int n = -3; n <= 5; ++n) CHECK(V.mode(dv, n, FockVector(w)) == Rational(-n) * V.mode(fv, n - 1, FockVector(w)));
    }
}

TEST_CASE("square bracket modes")
{
    const auto a = HeisenbergVoa::a_state();
    for (const auto& p : fock_basis(5)) {
        const FockVector w(p);
        CHECK(V.apply_square_bracket(a, 0, w) == V.mode(a, 0, w));
        for (int m = 0; m < 3; ++m)
            CHECK(V.apply_square_bracket(FockVector::vacuum(), m, w) == V.mode(FockVector::vacuum(), m, w));
    }
    CHECK(HeisenbergVoa::bracket_coefficients(1, 2) == std::vector<Rational>{0, rat(-1, 2), rat(1, 2)});
    CHECK(V.apply_square_bracket(a, 1, a) == FockVector::vacuum());
    CHECK_THROWS_AS(V.square_bracket_mode(a, -1), DomainError);

    // Y[v,z] = Y(e^{z wt v} v, e^z - 1), compared coefficient-wise on matrix elements.
    const int trunc = 12;
    RationalSeries ez1 = exp_series(1, trunc + 2) - RationalSeries::constant("z", Rational(1));
    for (const auto& vp : fock_basis(4)) {
        const FockVector v(vp);
        const int wt = partition_weight(vp);
        for (const auto& up : fock_basis(4)) {
            for (const auto& wp : fock_basis(4)) {
                RationalSeries total("z", trunc - 6, -8);
                for (int i = -1; i <= partition_weight(wp) + wt; ++i) {
                    const Rational c = V.mode(v, i, FockVector(wp)).coeff(up);
                    if (c == 0) continue;
                    RationalSeries pw = RationalSeries::constant("z", Rational(1), trunc);
                    RationalSeries base = ez1.truncated(trunc);
                    if (i + 1 > 0) {
                        RationalSeries inv = series_invert(base);
                        for (int r = 0; r < i + 1; ++r) pw = pw * inv;
                    } else {
                        for (int r = 0; r < -(i + 1); ++r) pw = pw * base;
                    }
                    total += (pw * exp_series(wt, trunc)).scaled(c);
                }
                for (int m = 0; m < 4; ++m) {
                    const Rational expected = total.coeff(-m - 1);
                    CHECK(V.apply_square_bracket(v, m, FockVector(wp)).coeff(up) == expected);
                }
            }
        }
    }
}

TEST_CASE("bilinear form")
{
    CHECK(V.bilinear_form(FockVector::vacuum(), FockVector::vacuum()) == 1);
    CHECK(V.bilinear_form(FockVector(Partition{1}), FockVector(Partition{2})) == 0);
    CHECK(V.bilinear_form(FockVector(Partition{1}), FockVector(Partition{1})) == -1);
    // Closed form on the partition basis: prod_n (-alpha^{-n} n)^{m_n} m_n!.
    for (const Rational alpha : {Rational(1), rat(2, 3)}) {
        const auto basis = fock_basis(7);
        for (const auto& p : basis) {
            for (const auto& q : basis) {
                Rational expected(0);
                if (p == q) {
                    expected = 1;
                    std::map<int, int> mult;
                    for (int part : p) ++mult[part];
                    for (auto [n, m] : mult) expected *= ipow(-ipow(alpha, -n) * n, m) * factorial(m);
                }
                CHECK(V.bilinear_form(FockVector(p), FockVector(q), alpha) == expected);
            }
        }
    }
}

TEST_CASE("adjoint modes")
{
    const auto a = HeisenbergVoa::a_state();
    const auto w = FockVector(Partition{2, 1});
    CHECK(V.adjoint_mode(a, 0)(w) == Rational(-1) * V.mode(a, 0, w));
    for (int n = -3; n <= 3; ++n) CHECK(V.adjoint_mode(a, n)(w) == Rational(-1) * V.mode(a, -n, w));
    CHECK(V.adjoint_mode(HeisenbergVoa::omega(), 1)(w) == V.mode(HeisenbergVoa::omega(), 1, w));
    CHECK_THROWS_AS(V.adjoint_mode(FockVector(Partition{2}), 0), DomainError);
    for (const Rational alpha : {Rational(1), rat(-3, 2)}) {
        const auto basis = fock_basis(6);
        for (int n = -4; n <= 4; ++n)
            for (const auto& p : basis)
                for (const auto& q : basis) {
                    const FockVector x(p), y(q);
                    CHECK(V.bilinear_form(V.mode(a, n, x), y, alpha) == V.bilinear_form(x, V.adjoint_mode(a, n, alpha)(y), alpha));
                }
    }
}

TEST_CASE("state parsing")
{
    CHECK(parse_state("vacuum") == FockVector::vacuum());
    CHECK(parse_state("1,2") == FockVector(Partition{2, 1}));
    CHECK(parse_state("omega") == HeisenbergVoa::omega());
    CHECK_THROWS_AS(parse_state("x"), DomainError);
    CHECK_THROWS_AS(parse_state("0"), DomainError);
}
