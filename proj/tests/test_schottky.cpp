#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "voacx/genus1.hpp"
#include "voacx/schottky.hpp"

#include <numbers>

using namespace voacx;

namespace {

const FockVector vac = FockVector::vacuum();
const FockVector a = HeisenbergVoa::a_state();

ComplexSeries laurent(std::initializer_list<std::pair<int, Complex>> terms)
{
    int lo = 0;
    for (const auto& t : terms) lo = std::min(lo, t.first);
    ComplexSeries s("x", kExact, lo);
    for (const auto& [e, c] : terms) s.set(e, c);
    return s;
}

// Taylor coefficient [dx^m dy^n] g(x0 + dx, y0 + dy) from a trapezoid rule on two circles.
template <class G>
Complex cauchy_coefficient(G g, Complex x0, Complex y0, int m, int n, double r)
{
    const int N = 64;
    Complex s(0);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double ti = 2 * std::numbers::pi * i / N, tj = 2 * std::numbers::pi * j / N;
            const Complex ex = std::polar(1.0, ti), ey = std::polar(1.0, tj);
            s += g(x0 + r * ex, y0 + r * ey) * std::pow(ex, -m) * std::pow(ey, -n);
        }
    return s / double(N * N) / std::pow(r, m + n);
}

SchottkyData g1_data(Complex rho, int M = 4, int K = 10)
{
    SchottkyData sd;
    sd.genus = 1;
    sd.rho = {rho};
    sd.w = {Complex(-1.0, 0.2), Complex(1.3, -0.1)};
    sd.mode_cutoff = M;
    sd.neumann_order = K;
    return sd;
}

SchottkyData g2_data(Complex rho1, Complex rho2, int p = 1, int M = 4, int K = 10)
{
    SchottkyData sd;
    sd.genus = 2;
    sd.rho = {rho1, rho2};
    sd.w = {Complex(-1.0, 0.2), Complex(1.3, -0.1), Complex(0.1, 2.1), Complex(0.3, -2.4)};
    sd.p = p;
    sd.mode_cutoff = M;
    sd.neumann_order = K;
    return sd;
}

} // namespace

TEST_CASE("psi0")
{
    const Complex x(2), y(1);
    CHECK(std::abs(psi0(1, x, y, {}) - Complex(1)) < 1e-15);
    CHECK(std::abs(psi0(3, Complex(0.3, 1), Complex(-2, 0.5), {}) - 1.0 / (Complex(0.3, 1) - Complex(-2, 0.5))) < 1e-15);
    const std::vector<ComplexSeries> f{laurent({{-1, 1.0}})};
    CHECK(std::abs(psi0(1, x, y, f) - Complex(1.5)) < 1e-15);

    const int p = 2;
    const std::vector<ComplexSeries> f2{laurent({{-1, 1.0}, {2, 0.5}}), laurent({{0, Complex(0, 1)}}), laurent({{-2, 3.0}})};
    const Complex u(0.7, -0.4), v(-1.1, 0.9);
    Complex cross(0);
    for (int l = 0; l <= 2; ++l)
        cross += laurent_derivative(f2[l], 0, u) * std::pow(v, l) + laurent_derivative(f2[l], 0, v) * std::pow(u, l);
    CHECK(std::abs(psi0(p, u, v, f2) + psi0(p, v, u, f2) - cross) < 1e-13);
    CHECK_THROWS_AS(psi0(1, x, x, {}), SingularError);
}

TEST_CASE("R matrix entries against Cauchy-integral derivatives")
{
    SUBCASE("genus one, p = 1, f = 0")
    {
        const auto sd = g1_data(Complex(0.04, 0.01), 2, 4);
        const auto forms = build_R(sd);
        for (int A : sd.handle_labels())
            for (int B : sd.handle_labels())
                for (int m = 0; m < 2; ++m)
                    for (int n = 0; n < 2; ++n) {
                        const Complex got = forms.R(sd.index(A, m), sd.index(B, n));
                        if (A == -B) {
                            CHECK(got == Complex(0));
                            continue;
                        }
                        const Complex d = cauchy_coefficient([](Complex x, Complex y) { return 1.0 / (x - y); },
                                                             sd.w_at(-A), sd.w_at(B), m, n, 0.3);
                        const Complex expected = -sd.rho_half_power(A, m + 1) * sd.rho_half_power(B, n) * d;
                        CHECK(std::abs(got - expected) < 1e-12);
                    }
    }
    SUBCASE("genus two, p = 2, nonzero f")
    {
        auto sd = g2_data(Complex(0.02, 0.01), Complex(0.03, -0.02), 2, 5, 6);
        sd.f = {laurent({{-1, 1.0}, {1, 0.5}}), laurent({{0, Complex(0, 1)}, {-2, 0.2}}), laurent({{2, -0.3}})};
        const auto forms = build_R(sd);
        auto f_sum = [&](Complex x, Complex y) {
            Complex s(0);
            for (int l = 0; l <= 2; ++l) s += laurent_derivative(sd.f[l], 0, x) * std::pow(y, l);
            return s;
        };
        for (int A : sd.handle_labels())
            for (int B : sd.handle_labels())
                for (int m = 0; m < 3; ++m)
                    for (int n = 0; n < 3; ++n) {
                        const Complex got = forms.R(sd.index(A, m), sd.index(B, n));
                        Complex d;
                        if (A == -B) {
                            // E_m^n(y): the regular part, with x and y expanded around the same point
                            d = cauchy_coefficient(f_sum, sd.w_at(-A), sd.w_at(B), m, n, 0.3);
                            CHECK(std::abs(got - sd.rho_half_power(A, m + n + 1) * d) < 1e-11);
                        } else {
                            d = cauchy_coefficient([&](Complex x, Complex y) { return 1.0 / (x - y) + f_sum(x, y); },
                                                   sd.w_at(-A), sd.w_at(B), m, n, 0.3);
                            CHECK(std::abs(got - sd.rho_half_power(A, m + 1) * sd.rho_half_power(B, n) * d) < 1e-11);
                        }
                    }
    }
}

TEST_CASE("R matrix limits")
{
    const auto zero = build_R(g2_data(Complex(0), Complex(0)));
    CHECK(zero.R.norm() == 0.0);
    CHECK((zero.neumann.inverse - Eigen::MatrixXcd::Identity(zero.R.rows(), zero.R.rows())).norm() == 0.0);
    const auto forms = build_R(g2_data(Complex(0.1, 0.02), Complex(0.05)));
    const auto& sd = forms.sd;
    for (int A : sd.handle_labels())
        for (int m = 0; m < sd.mode_cutoff; ++m)
            for (int n = 0; n < sd.mode_cutoff; ++n) CHECK(forms.R(sd.index(A, m), sd.index(-A, n)) == Complex(0));
    // Delta shifts the mode label by 2p - 1.
    CHECK(forms.Delta(sd.index(1, 1), sd.index(1, 0)) == Complex(1));
    CHECK(forms.Delta.sum() == Complex(2 * sd.genus * (sd.mode_cutoff - 1)));
    auto clash = g2_data(Complex(0.1), Complex(0.1));
    clash.w[3] = clash.w[0];
    CHECK_THROWS_AS(build_R(clash), DomainError);
}

TEST_CASE("Neumann inverse")
{
    for (const auto& sd : {g1_data(Complex(0.01), 6, 1), g2_data(Complex(0.01), Complex(0.01), 1, 6, 1)}) {
        auto forms = build_R(sd);
        const auto n = forms.Rt.rows();
        const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
        CHECK((neumann_inverse(forms, 0).inverse - I).norm() == 0.0);
        CHECK((neumann_inverse(forms, 1).inverse - I - forms.Rt).norm() < 1e-15);
        double last = 1e300;
        for (int K = 0; K <= 8; ++K) {
            const auto nr = neumann_inverse(forms, K);
            const double residual = ((I - forms.Rt) * nr.inverse - I).norm();
            // Telescoping: the residual is exactly R~^{K+1}, up to a rounding floor.
            CHECK(residual <= nr.error_estimate * (1 + 1e-6) + 1e-14);
            CHECK_FALSE(nr.flagged);
            if (residual < 1e-14) break;
            CHECK(residual < last);
            last = residual;
        }
    }
    // Large rho: the powers of R~ grow and the result is flagged.
    auto big = build_R(g1_data(Complex(40.0), 6, 6));
    CHECK(big.neumann.flagged);
}

TEST_CASE("psi_p")
{
    const Complex x(0.4, 0.7), y(-0.3, -0.9);
    SUBCASE("dense-matrix oracle")
    {
        for (const auto& sd : {g1_data(Complex(0.02, 0.01), 6, 30), g2_data(Complex(0.02), Complex(0.01, 0.01), 1, 6, 30)}) {
            const auto forms = build_R(sd);
            const auto n = forms.Rt.rows();
            const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
            const Eigen::MatrixXcd inv = (I - forms.R * forms.Delta).partialPivLu().inverse();
            const Complex direct = 1.0 / (x - y) + (p_vector(forms, x) * forms.Delta * inv * q_vector(forms, y))(0, 0);
            CHECK(std::abs(psi_p(forms, x, y) - direct) < 1e-13);
            CHECK(std::abs(psi_p(forms, x, y) - psi0(1, x, y, {})) > 1e-6); // the correction is visible
        }
    }
    SUBCASE("small rho reduces to psi0")
    {
        auto sd = g2_data(Complex(1e-7), Complex(2e-7, 1e-7), 2, 6, 8);
        sd.f = {laurent({{-1, 1.0}}), ComplexSeries("x", kExact, 0), laurent({{1, 0.5}})};
        const auto forms = build_R(sd);
        REQUIRE(forms.Rt.norm() < 1e-6);
        CHECK(std::abs(psi_p(forms, x, y) - psi0(2, x, y, sd.f)) < 1e-10);
    }
    SUBCASE("degeneration rho_2 = 0")
    {
        const auto f2 = build_R(g2_data(Complex(0.03, 0.01), Complex(0), 1, 6, 12));
        auto s1 = g1_data(Complex(0.03, 0.01), 6, 12);
        const auto f1 = build_R(s1);
        CHECK(std::abs(psi_p(f2, x, y) - psi_p(f1, x, y)) < 1e-15);
        CHECK(std::abs(psi_p(f2, x, y, 2) - psi_p(f1, x, y, 2)) < 1e-14);
        CHECK((theta(f2, 1, x) - theta(f1, 1, x)).norm() < 1e-14);
    }
    SUBCASE("y-derivatives against the Cauchy oracle")
    {
        const auto forms = build_R(g1_data(Complex(0.02, 0.01), 6, 30));
        for (int j = 1; j <= 3; ++j) {
            const Complex d = cauchy_coefficient([&](Complex, Complex yy) { return psi_p(forms, x, yy); }, x, y, 0, j, 0.2);
            CHECK(std::abs(psi_p(forms, x, y, j) - d) < 1e-10);
        }
    }
    CHECK_THROWS_AS(psi_p(build_R(g1_data(Complex(0.01))), Complex(-1.0, 0.2), y), SingularError);
    CHECK(psi_degree(3).dx == 3);
    CHECK(psi_degree(3).dy == -2);
}

TEST_CASE("theta and chi")
{
    auto sd = g2_data(Complex(0.02, 0.01), Complex(0.015), 2, 6, 12);
    sd.f = {laurent({{-1, 1.0}}), laurent({{0, 0.5}}), laurent({{-2, 0.25}})};
    const auto forms = build_R(sd);
    const Complex x(0.4, 0.7);
    const auto c = chi(forms, x);
    CHECK(c.rows() == 4);
    CHECK(c.cols() == 3);
    // theta_a(x; l) = chi_a(x; l) + (-1)^p rho_a^{p-1-l} chi_{-a}(x; 2p-2-l)
    for (int A = 1; A <= 2; ++A) {
        const auto t = theta(forms, A, x);
        for (int l = 0; l <= 2; ++l) {
            const Complex expected = c(2 * (A - 1) + 1, l) + std::pow(sd.rho_at(A), 1 - l) * c(2 * (A - 1), 2 - l);
            CHECK(std::abs(t(l) - expected) < 1e-12 * std::max(1.0, std::abs(expected)));
        }
    }
    // chi reduces to rho^{-l/2} p(x) when R vanishes.
    const auto zero = build_R(g1_data(Complex(1e-30), 4, 4));
    const auto c0 = chi(zero, x);
    CHECK(std::abs(c0(1, 0) - psi0(1, x, zero.sd.w_at(1), {})) < 1e-12);
}

TEST_CASE("rho sewing of sphere correlators")
{
    SewingData<Rational> at_inf; // puncture pair (infinity, 0)
    SUBCASE("partition: graded trace")
    {
        const auto s = rho_sew(SewnCorrelator<Rational>{}, at_inf, 9).to_series();
        const auto z = genus1_partition_t<Rational>(9).series;
        CHECK(s == z);
        const std::vector<int> p{1, 1, 2, 3, 5, 7, 11, 15, 22};
        for (int k = 0; k < 9; ++k) CHECK(s.coeff(k) == Rational(p[static_cast<std::size_t>(k)]));
    }
    SUBCASE("one-point function of a vanishes")
    {
        SewnCorrelator<Rational> F{{{a, rat(1, 3)}}};
        for (const auto& [k, c] : rho_sew(F, at_inf, 8).coeffs) CHECK(c == 0);
    }
    SUBCASE("two-point functions against the genus-one trace")
    {
        // sum_k rho^k Tr_k Y(v1,z1) Y(v2,z2) is the trace with q = rho and nomes z_i, up to z_i^{wt}.
        const Rational z1(1), z2 = rat(1, 1000);
        const FockVector aa(Partition{1, 1});
        for (const auto& u : {vac, a, aa})
            for (const auto& v : {vac, a, aa}) {
                SewnCorrelator<Rational> F{{{u, z1}, {v, z2}}};
                const auto s = rho_sew(F, at_inf, 8).to_series("q");
                const auto t = genus1_trace_nomes(InsertionList<Rational>{{u, z1}, {v, z2}}, 8, 12).series;
                const Rational scale = ipow(z1, u.weight()) * ipow(z2, v.weight());
                CHECK(*series_compare(s.scaled(scale), t) < 1e-9);
            }
    }
    SUBCASE("vacuum term and linearity")
    {
        const Rational z1(3), z2(-2);
        SewnCorrelator<Rational> F{{{a, z1}, {a, z2}}};
        CHECK(rho_sew(F, at_inf, 6).coeff({0}) == genus0_reduce(F.insertions, vac, vac));
        SewnCorrelator<Rational> G{{{a + rat(2, 3) * vac, z1}, {a, z2}}};
        SewnCorrelator<Rational> H{{{vac, z1}, {a, z2}}};
        const auto sg = rho_sew(G, at_inf, 6), sf = rho_sew(F, at_inf, 6), sh = rho_sew(H, at_inf, 6);
        for (int k = 0; k < 6; ++k) CHECK(sg.coeff({k}) == sf.coeff({k}) + rat(2, 3) * sh.coeff({k}));
    }
    SUBCASE("finite punctures agree with the genus-one partition")
    {
        SewingData<Rational> sd;
        sd.zeta1 = Rational(-1);
        sd.zeta2 = rat(3, 2);
        const auto s = rho_sew(SewnCorrelator<Rational>{}, sd, 6);
        CHECK(s == genus_g_partition<Rational>({Rational(-1), rat(3, 2)}, {6}));
        CHECK(s.coeff({0}) == 1);
    }
    SUBCASE("validation")
    {
        SewingData<Rational> bad;
        bad.zeta1 = Rational(1);
        bad.zeta2 = Rational(1);
        CHECK_THROWS_AS(rho_sew(SewnCorrelator<Rational>{}, bad, 4), DomainError);
        CHECK_THROWS_AS(rho_sew(SewnCorrelator<Rational>{}, at_inf, 40), DomainError);
        SewingData<Complex> far;
        far.rho = Complex(2.0);
        CHECK_THROWS_AS(rho_sew(SewnCorrelator<Complex>{}, far, 4), DomainError);
        SewnCorrelator<Rational> clash{{{a, Rational(0)}}};
        CHECK_THROWS_AS(rho_sew(clash, at_inf, 4), DomainError);
    }
}

TEST_CASE("genus-two partition degenerates to genus one")
{
    const std::vector<Rational> w{Rational(-1), Rational(1), Rational(-4), Rational(5)};
    const auto z2 = genus_g_partition<Rational>(w, {5, 5});
    const auto z1 = genus_g_partition<Rational>({w[0], w[1]}, {5});
    CHECK(z2.at_zero(1) == z1);
    CHECK(z2.coeff({0, 0}) == 1);
    CHECK(genus_g_partition<Rational>({w[0], w[1]}, {1}).coeff({0}) == 1);
    // Sewing a second handle onto the genus-one object is the same sum.
    SewingData<Rational> h1, h2;
    h1.zeta1 = w[0];
    h1.zeta2 = w[1];
    h1.rho_order = 5;
    h2.zeta1 = w[2];
    h2.zeta2 = w[3];
    CHECK(rho_sew(sew_handle(SewnCorrelator<Rational>{}, h1), h2, 5) == z2);
    CHECK_THROWS_AS(genus_g_partition<Rational>({w[0], w[0]}, {3}), DomainError);
}
