// voacx: command-line front end.  All results go to stdout as JSON, logs and usage to stderr.
// Exit codes: 0 success, 2 invalid input, 3 a check marked `expect = zero` failed.

#include "cli_support.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace voacx;
using namespace voacx::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitCheckFailed = 3;

struct Run {
    Config cfg;
    json result = json::object();
    int exit_code = kExitOk;
};

// ---------------------------------------------------------------------------
// Config readers

template <class T>
std::vector<T> scalars(const Config& c, const std::string& key, const std::string& fallback = "")
{
    std::vector<T> out;
    for (const auto& s : split_list(c.get(key, fallback))) out.push_back(parse_scalar<T>(s));
    return out;
}

std::vector<FockVector> states(const Config& c, const std::string& key)
{
    std::vector<FockVector> out;
    for (const auto& s : split_list(c.get(key, ""))) {
        try {
            out.push_back(parse_state(s));
        } catch (const std::exception& e) {
            throw ConfigError("bad state '" + s + "' in " + key + ": " + e.what());
        }
    }
    return out;
}

FockVector one_state(const Config& c, const std::string& key, const std::string& fallback)
{
    const std::string s = c.get(key, fallback);
    try {
        return parse_state(s);
    } catch (const std::exception& e) {
        throw ConfigError("bad state '" + s + "' in " + key + ": " + e.what());
    }
}

/// `states` and `points` of a section, first entry leftmost.
template <class T>
InsertionList<T> insertions(const Config& c, const std::string& sec)
{
    const auto v = states(c, sec + ".states");
    const auto z = scalars<T>(c, sec + ".points");
    if (v.size() != z.size())
        throw ConfigError(sec + ": " + std::to_string(v.size()) + " states but " + std::to_string(z.size()) + " points");
    InsertionList<T> ins;
    for (std::size_t i = 0; i < v.size(); ++i) ins.push_back({v[i], z[i]});
    return ins;
}

/// "state@point"
template <class T>
std::optional<Insertion<T>> insertion_at(const Config& c, const std::string& key)
{
    const std::string s = c.get(key, "");
    if (s.empty()) return std::nullopt;
    const auto at = s.find('@');
    if (at == std::string::npos) throw ConfigError(key + " must read state@point, got '" + s + "'");
    try {
        return Insertion<T>{parse_state(trim(s.substr(0, at))), parse_scalar<T>(s.substr(at + 1))};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad insertion '" + s + "': " + e.what());
    }
}

/// "rho, zeta1, zeta2[, order]" with zeta1 = inf for the puncture at infinity.
template <class T>
SewingData<T> parse_handle(const std::string& text, int default_order)
{
    const auto f = split_list(text, ',');
    if (f.size() < 3 || f.size() > 4) throw ConfigError("handle '" + text + "' must read rho, zeta1, zeta2[, order]");
    SewingData<T> sd;
    sd.rho = parse_scalar<T>(f[0]);
    if (f[1] != "inf") sd.zeta1 = parse_scalar<T>(f[1]);
    sd.zeta2 = parse_scalar<T>(f[2]);
    sd.rho_order = default_order;
    if (f.size() == 4) {
        try {
            sd.rho_order = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw ConfigError("bad handle order in '" + text + "'");
        }
    }
    sd.validate();
    return sd;
}

template <class T>
std::optional<SewingData<T>> handle_at(const Config& c, const std::string& key, int default_order)
{
    const std::string s = c.get(key, "");
    if (s.empty()) return std::nullopt;
    return parse_handle<T>(s, default_order);
}

/// Handles from the Schottky keys: rho (g entries), w (2g entries w_-1, w_1, w_-2, w_2, ...),
/// rho_order (one entry or g entries).
template <class T>
std::vector<SewingData<T>> schottky_handles(const Config& c, const std::string& sec, int genus)
{
    const auto rho = scalars<T>(c, sec + ".rho");
    const auto w = split_list(c.get(sec + ".w", ""));
    const auto ord = split_list(c.get(sec + ".rho_order", std::to_string(c.get_int("truncation.rho_order", 4))));
    if (static_cast<int>(rho.size()) != genus || static_cast<int>(w.size()) != 2 * genus)
        throw ConfigError(sec + ": genus " + std::to_string(genus) + " needs " + std::to_string(genus) + " rho and " +
                          std::to_string(2 * genus) + " w entries");
    if (ord.size() != 1 && static_cast<int>(ord.size()) != genus)
        throw ConfigError(sec + ".rho_order needs one entry or one per handle");
    std::vector<SewingData<T>> hs;
    for (int a = 0; a < genus; ++a) {
        const std::string o = ord[ord.size() == 1 ? 0 : static_cast<std::size_t>(a)];
        hs.push_back(parse_handle<T>("0," + w[2 * a] + "," + w[2 * a + 1] + "," + o, 0));
        hs.back().rho = rho[static_cast<std::size_t>(a)];
        hs.back().validate();
    }
    return hs;
}

/// f_coeffs = l, e, c; ... sets the x^e coefficient of f_l to c.
std::vector<ComplexSeries> f_coeffs(const Config& c, const std::string& key)
{
    std::vector<ComplexSeries> f;
    for (const auto& item : split_list(c.get(key, ""))) {
        const auto t = split_list(item, ',');
        if (t.size() != 3) throw ConfigError(key + " entries must read l, exponent, coefficient");
        int l = 0, e = 0;
        try {
            l = std::stoi(t[0]);
            e = std::stoi(t[1]);
        } catch (const std::exception&) {
            throw ConfigError("bad entry '" + item + "' in " + key);
        }
        if (l < 0) throw ConfigError(key + ": negative index l");
        while (static_cast<int>(f.size()) <= l) f.emplace_back("x", kExact, 0);
        f[static_cast<std::size_t>(l)].add_to(e, parse_complex(t[2]));
    }
    return f;
}

GenusGOptions genus_g_options(const Config& c)
{
    GenusGOptions o;
    o.mode_cutoff = c.get_int("truncation.mode_cutoff", 12);
    o.neumann_order = c.get_int("truncation.neumann_order", 30);
    o.f = f_coeffs(c, "schottky.f_coeffs");
    return o;
}

/// A chain element: model = sphere | torus | schottky.  Torus points are nomes p = e^z.
template <class T>
ChainElement<T> element(const Config& c, const std::string& sec)
{
    const std::string model = c.get(sec + ".model", "sphere");
    InsertionList<T> ins = insertions<T>(c, sec);
    if (model == "torus") return torus_element(std::move(ins), c.get_int("truncation.q_order", 8));
    if (model == "sphere") {
        return sphere_element(std::move(ins), one_state(c, sec + ".out", "vacuum"), one_state(c, sec + ".in", "vacuum"));
    }
    if (model == "schottky") {
        std::vector<SewingData<T>> hs;
        const int order = c.get_int("truncation.rho_order", 4);
        for (const auto& h : split_list(c.get(sec + ".handles", ""))) hs.push_back(parse_handle<T>(h, order));
        return sewn_element(std::move(ins), std::move(hs));
    }
    throw ConfigError(sec + ".model must be sphere, torus or schottky");
}

template <class T>
json element_json(const ChainElement<T>& F)
{
    json j;
    j["model"] = F.model == Model::torus ? "torus" : (F.handles.empty() ? "sphere" : "schottky");
    j["genus"] = F.genus();
    j["n"] = F.n();
    json ins = json::array();
    for (const auto& x : F.insertions) ins.push_back({{"state", x.state.str()}, {"point", scalar_json(x.point)}});
    j["insertions"] = ins;
    std::vector<std::string> names;
    if (F.model == Model::torus) names = {"q"};
    for (std::size_t a = 0; a < F.handles.size(); ++a) names.push_back("rho" + std::to_string(a + 1));
    j["value"] = rho_json(F.value, names, F.at_moduli);
    if (F.model == Model::torus) j["value"]["q_shift"] = "-1/24";
    return j;
}

std::vector<std::string> nome_names(std::size_t g, const std::string& first = "rho")
{
    std::vector<std::string> n;
    for (std::size_t a = 0; a < g; ++a) n.push_back(first + std::to_string(a + 1));
    return n;
}

json elliptic_json(const EllipticValue& v, double tol)
{
    return {{"value", scalar_json(v.value)},
            {"truncation", {{"terms", v.terms}, {"method", v.method}, {"error_estimate", v.error_estimate}, {"tolerance", tol}}},
            {"flagged", v.flagged}};
}

bool exact_mode(const Config& c, bool fallback = true) { return c.get_bool("tolerance.exact", fallback); }

// ---------------------------------------------------------------------------
// Elliptic and genus-zero special functions

int require_int(const Config& c, const std::string& key)
{
    if (!c.has(key)) throw ConfigError("missing config key '" + key + "'");
    return c.get_int(key, 0);
}

template <class F>
void with_scalar(Run& r, bool exact, F&& f)
{
    r.result["scalar"] = exact ? "exact rational" : "complex double";
    if (exact)
        f(Rational{});
    else
        f(Complex{});
}

void eval_eisenstein(Run& r)
{
    const Config& c = r.cfg;
    const int k = require_int(c, "experiment.k");
    const int order = c.get_int("truncation.q_order", 20);
    if (order < 0) throw ConfigError("q_order must be nonnegative");
    r.result["series"] = series_json(eisenstein(k, order));
}

void eval_weierstrass(Run& r)
{
    const Config& c = r.cfg;
    const int k = require_int(c, "experiment.k");
    const ModularPoint mp(parse_complex(c.require("experiment.tau")), c.get_int("truncation.q_order", 20));
    const int z_terms = c.get_int("truncation.z_terms", 40);
    const double tol = c.get_double("tolerance.float_tol", 1e-10);
    if (c.has("experiment.z")) {
        const Complex z = parse_complex(c.get("experiment.z", ""));
        const std::string method = c.get("experiment.method", "series");
        if (method != "series" && method != "global") throw ConfigError("experiment.method must be series or global");
        const EllipticValue v = method == "global" ? weierstrass_p_global(k, z, mp, tol) : weierstrass_p(k, z, mp, z_terms, tol);
        r.result["value"] = elliptic_json(v, tol);
    } else {
        r.result["series"] = series_json(weierstrass_p_series(k, mp, z_terms));
        r.result["series"]["q_order"] = mp.q_order;
    }
}

void eval_pm(Run& r)
{
    const Config& c = r.cfg;
    const int m = require_int(c, "experiment.m");
    if (c.has("experiment.z")) {
        const ModularPoint mp(parse_complex(c.require("experiment.tau")), c.get_int("truncation.q_order", 20));
        const double tol = c.get_double("tolerance.float_tol", 1e-14);
        r.result["value"] = elliptic_json(pm_genus1(m, parse_complex(c.get("experiment.z", "")), mp, tol), tol);
        return;
    }
    const std::string x = c.require("experiment.x");
    const int order = c.get_int("truncation.q_order", 8);
    const bool laurent = c.get_bool("experiment.laurent_compatible", true);
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        r.result["series"] = series_json(pm_q_series(m, parse_scalar<T>(x), order, laurent));
    });
}

void eval_f0(Run& r)
{
    const Config& c = r.cfg;
    const int n = require_int(c, "experiment.n");
    const int m = require_int(c, "experiment.m");
    const F0Kernel K = f0_kernel(n, m);
    json num = json::array();
    for (const auto& [e, v] : K.numerator) num.push_back({e.first, e.second, v.str()});
    r.result["kernel"] = {{"n", n}, {"m", m}, {"formula", K.str()}, {"numerator", num},
                          {"denominator", "z^" + std::to_string(n) + " (z-w)^" + std::to_string(m + 1)}};
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        if (c.has("experiment.z") || c.has("experiment.w")) {
            const T z = parse_scalar<T>(c.require("experiment.z")), w = parse_scalar<T>(c.require("experiment.w"));
            r.result["value"] = {{"value", scalar_json(f0_eval(n, m, z, w))}, {"truncation", "exact kernel"}};
        }
    });
    const int order = c.get_int("truncation.iota_order", 6);
    if (order > 0) {
        const IotaExpansion I = f0_iota(n, m, order);
        json co = json::array();
        for (const auto& [e, v] : I.coeffs) co.push_back({e.first, e.second, v.str()});
        r.result["iota"] = {{"domain", "|z| > |w|"}, {"truncation", order}, {"coeffs", co}};
    }
}

// ---------------------------------------------------------------------------
// Correlators

void npoint(Run& r)
{
    const Config& c = r.cfg;
    const int genus = require_int(c, "experiment.genus");
    const std::string method = c.get("experiment.method", "reduction");
    if (method != "oracle" && method != "reduction") throw ConfigError("experiment.method must be oracle or reduction");
    const bool oracle = method == "oracle";
    const std::string model = c.get("experiment.model", genus == 1 ? "torus" : (genus == 0 ? "sphere" : "schottky"));

    if (genus == 0 || (genus == 1 && model == "torus")) {
        with_scalar(r, exact_mode(c), [&](auto tag) {
            using T = decltype(tag);
            const InsertionList<T> ins = insertions<T>(c, "experiment");
            if (genus == 0) {
                const FockVector out = one_state(c, "experiment.out", "vacuum"), in = one_state(c, "experiment.in", "vacuum");
                const T v = oracle ? genus0_npoint(ins, out, in) : genus0_reduce(ins, out, in);
                r.result["value"] = {{"value", scalar_json(v)}, {"truncation", "exact matrix element"}};
                return;
            }
            const int q_order = c.get_int("truncation.q_order", 8);
            const int cutoff = c.get_int("truncation.weight_cutoff", 12);
            const Genus1ValueT<T> v = oracle ? genus1_trace_nomes(ins, q_order, cutoff) : genus1_reduce_nomes(ins, q_order);
            json s = series_json(v.series);
            s["q_shift"] = v.q_shift.str();
            if (oracle) s["weight_cutoff"] = v.weight_cutoff;
            s["error_estimate"] = v.error_estimate;
            r.result["value"] = s;
        });
        return;
    }
    if (model != "schottky") throw ConfigError("genus " + std::to_string(genus) + " needs model = schottky");
    // Sewn surfaces are compared numerically at the moduli.
    with_scalar(r, false, [&](auto) {
        const auto hs = schottky_handles<Complex>(c, "schottky", genus);
        const InsertionList<Complex> ins = insertions<Complex>(c, "experiment");
        Complex v;
        if (oracle) {
            SewnCorrelator<Complex> S;
            S.insertions = ins;
            S.handles = hs;
            std::vector<Complex> rho;
            for (const auto& h : hs) rho.push_back(h.rho);
            v = evaluate(S).value(rho);
        } else {
            const GenusGOptions o = genus_g_options(c);
            ChainElement<Complex> F = sewn_element<Complex>({}, hs);
            for (auto it = ins.rbegin(); it != ins.rend(); ++it) F = apply_Dn(*it, F, o);
            v = F.scalar();
        }
        json orders = json::array();
        for (const auto& h : hs) orders.push_back(h.rho_order);
        json tr = {{"rho_order", orders}};
        if (!oracle) tr["mode_cutoff"] = c.get_int("truncation.mode_cutoff", 12), tr["neumann_order"] = c.get_int("truncation.neumann_order", 30);
        r.result["value"] = {{"value", scalar_json(v)}, {"truncation", tr}};
    });
}

void sew(Run& r)
{
    const Config& c = r.cfg;
    const int genus = require_int(c, "schottky.genus");
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        SewnCorrelator<T> S;
        S.insertions = insertions<T>(c, "experiment");
        S.handles = schottky_handles<T>(c, "schottky", genus);
        const RhoSeries<T> v = evaluate(S);
        r.result["series"] = rho_json(v, nome_names(S.handles.size()));
        std::vector<T> rho;
        for (const auto& h : S.handles) rho.push_back(h.rho);
        r.result["at_moduli"] = {{"value", scalar_json(v.value(rho))}, {"truncation", "partial sum of the series above"}};
    });
}

void partition(Run& r)
{
    const Config& c = r.cfg;
    const int genus = require_int(c, "experiment.genus");
    const std::string model = c.get("experiment.model", genus == 1 ? "torus" : "schottky");
    if (model == "torus") {
        if (genus != 1) throw ConfigError("the torus model has genus 1");
        json s = series_json(genus1_partition_t<Rational>(c.get_int("truncation.q_order", 8)).series);
        s["q_shift"] = "-1/24";
        r.result["series"] = s;
        r.result["scalar"] = "exact rational";
        return;
    }
    if (model != "schottky") throw ConfigError("experiment.model must be torus or schottky");
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        const auto w = scalars<T>(c, "schottky.w");
        const auto ord = split_list(c.get("schottky.rho_order", std::to_string(c.get_int("truncation.rho_order", 4))));
        std::vector<int> orders;
        for (int a = 0; a < genus; ++a) {
            try {
                orders.push_back(std::stoi(ord.at(ord.size() == 1 ? 0 : static_cast<std::size_t>(a))));
            } catch (const std::exception&) {
                throw ConfigError("schottky.rho_order needs one integer or one per handle");
            }
        }
        const RhoSeries<T> v = genus_g_partition<T>(w, orders);
        r.result["series"] = rho_json(v, nome_names(static_cast<std::size_t>(genus)));
        if (c.has("schottky.rho")) {
            const auto rho = scalars<T>(c, "schottky.rho");
            if (static_cast<int>(rho.size()) != genus) throw ConfigError("schottky.rho needs one entry per handle");
            r.result["at_moduli"] = {{"value", scalar_json(v.value(rho))}, {"truncation", "partial sum of the series above"}};
        }
    });
}

void reduce(Run& r)
{
    const Config& c = r.cfg;
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        const ChainElement<T> F = element<T>(c, "experiment");
        const ZeroPointFactorization<T> z = reduce_to_zero_point(F);
        std::vector<std::string> names = F.model == Model::torus ? std::vector<std::string>{"q"} : nome_names(F.handles.size());
        r.result["element"] = element_json(F);
        r.result["P"] = rho_json(z.P, names);
        r.result["zero_point"] = rho_json(z.zero_point, names);
        r.result["steps"] = z.steps;
        const RhoSeries<T> back = recombine(z);
        const double res = back.orders.empty() && !F.value.orders.empty()
                               ? abs_value(back.coeff({}) - F.value.value(F.moduli()))
                               : rho_residual(back, F.value);
        r.result["round_trip_residual"] = res;
    });
}

// ---------------------------------------------------------------------------
// Chain complex

ChainCondition parse_condition(const std::string& s)
{
    if (s == "n") return ChainCondition::n;
    if (s == "g") return ChainCondition::g;
    if (s == "gn") return ChainCondition::gn;
    if (s == "total") return ChainCondition::total;
    throw ConfigError("condition must be n, g, gn or total, got '" + s + "'");
}

void check_complex(Run& r)
{
    const Config& c = r.cfg;
    const auto secs = c.sections("case.");
    if (secs.empty()) throw ConfigError("no [case.NAME] sections in the config");
    const bool exact = exact_mode(c);
    const double tol = c.get_double("tolerance.float_tol", 1e-9);
    with_scalar(r, exact, [&](auto tag) {
        using T = decltype(tag);
        std::vector<ConditionCase<T>> suite;
        std::vector<std::string> expect;
        const int order = c.get_int("truncation.rho_order", 4);
        for (const auto& s : secs) {
            ConditionCase<T> k;
            k.label = s.substr(5);
            k.condition = parse_condition(c.require(s + ".condition"));
            k.F = element<T>(c, s);
            k.x = insertion_at<T>(c, s + ".x");
            k.x2 = insertion_at<T>(c, s + ".x2");
            k.rho_order = c.get_int(s + ".rho_order", order);
            k.h = handle_at<T>(c, s + ".h", k.rho_order);
            k.h2 = handle_at<T>(c, s + ".h2", k.rho_order);
            const std::string e = c.get(s + ".expect", "zero");
            if (e != "zero" && e != "report") throw ConfigError(s + ".expect must be zero or report");
            expect.push_back(e);
            suite.push_back(std::move(k));
        }
        const auto res = check_chain_conditions(suite, tol, genus_g_options(c));
        json rows = json::array();
        int failed = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            const auto& q = res[i];
            const bool pass = q.error.empty() && (exact ? q.exact_zero : q.within_tolerance);
            json j = {{"label", q.label},
                      {"condition", condition_name(q.condition)},
                      {"candidate_set", condition_set(q.condition)},
                      {"residual", std::isnan(q.residual) ? json(nullptr) : json(q.residual)},
                      {"exact_zero", q.exact_zero},
                      {"raw_norm", q.raw_norm},
                      {"within_tolerance", q.within_tolerance},
                      {"expect", expect[i]},
                      {"truncation", {{"rho_order", suite[i].rho_order}, {"q_order", suite[i].F.q_order}}}};
            if (!q.error.empty()) j["error"] = q.error;
            if (expect[i] == "zero") {
                j["passed"] = pass;
                failed += !pass;
            }
            rows.push_back(j);
        }
        r.result["tolerance"] = exact ? json("exact") : json(tol);
        r.result["residuals"] = rows;
        r.result["failed"] = failed;
        if (failed) r.exit_code = kExitCheckFailed;
    });
}

void connection(Run& r)
{
    const Config& c = r.cfg;
    const double tol = c.get_double("tolerance.float_tol", 1e-9);
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        ConnectionOperator<T> op;
        op.sewing = parse_scalar<T>(c.get("operator.sewing", "1"));
        op.reduction = parse_scalar<T>(c.get("operator.reduction", "1"));
        op.sum_from_one = c.get_bool("operator.sum_from_one", true);
        op.rho_order = c.get_int("truncation.rho_order", 4);
        const ChainElement<T> phi = element<T>(c, "phi");
        ConnectionSlot<T> psi;
        psi.genus = c.get_int("psi.genus", phi.genus());
        psi.x = insertion_at<T>(c, "psi.x");
        psi.sewing = handle_at<T>(c, "psi.h", op.rho_order);
        const auto rep = connection_functional(op, psi, phi, tol, genus_g_options(c));
        std::vector<std::string> names = phi.model == Model::torus ? std::vector<std::string>{"q"} : nome_names(phi.handles.size());
        if (psi.sewing) names.push_back("rho" + std::to_string(phi.handles.size() + 1));
        const bool numeric = rep.G_value.orders.empty() && !phi.value.orders.empty();
        r.result["phi"] = element_json(phi);
        r.result["G"] = rho_json(rep.G_value, names, numeric);
        r.result["components"] = {{"F(psi).G(phi)", rho_json(rep.components[0], names, numeric)},
                                  {"F(phi).G(psi)", rho_json(rep.components[1], names, numeric)},
                                  {"G(F(psi).phi)", rho_json(rep.components[2], names, numeric)}};
        r.result["identification"] = rep.identification_used;
        r.result["residual"] = rep.residual;
        r.result["vanishes"] = rep.vanishes;
        const std::string expect = c.get("operator.expect", "report");
        if (expect != "vanish" && expect != "report") throw ConfigError("operator.expect must be vanish or report");
        if (expect == "vanish" && !rep.vanishes) r.exit_code = kExitCheckFailed;
    });
}

void cohomology(Run& r)
{
    const Config& c = r.cfg;
    const int cutoff = c.get_int("truncation.weight_cutoff", 4);
    if (cutoff < 1) throw ConfigError("weight_cutoff must be positive");
    CohomologyOptions o;
    o.rank_tol = c.get_double("tolerance.rank_tol", o.rank_tol);
    o.gap = c.get_double("tolerance.gap", o.gap);
    o.complex_tol = c.get_double("tolerance.complex_tol", o.complex_tol);
    std::vector<Eigen::MatrixXcd> d;
    with_scalar(r, exact_mode(c), [&](auto tag) {
        using T = decltype(tag);
        const auto pts = scalars<T>(c, "probe.points", "1; 3");
        if (pts.empty()) throw ConfigError("probe.points needs at least one point");
        for (const auto& m : probe_differentials(fock_probe<T>(cutoff, pts))) d.push_back(to_complex_matrix(m));
    });
    json rows = json::array();
    bool indeterminate = false;
    for (const auto& q : cohomology_ranks(d, o)) {
        const auto& M = d[static_cast<std::size_t>(q.m)];
        indeterminate = indeterminate || q.indeterminate;
        rows.push_back({{"m", q.m},
                        {"domain_dim", q.domain_dim},
                        {"codomain_dim", M.rows()},
                        {"rank", q.rank},
                        {"kernel_dim", q.kernel_dim},
                        {"image_prev", q.image_prev},
                        {"h_dim", q.h_dim},
                        {"rank_nullity", q.rank + q.kernel_dim == q.domain_dim},
                        {"indeterminate", q.indeterminate},
                        {"is_complex", q.is_complex},
                        {"composition_residual", q.composition_residual},
                        {"singular_values", q.singular_values}});
    }
    r.result["truncation"] = {{"weight_cutoff", cutoff},
                              {"max_n", static_cast<int>(d.size()) - 1},
                              {"rank_tol", o.rank_tol},
                              {"gap", o.gap},
                              {"note", "the top differential maps into the truncated-away degree"}};
    r.result["degrees"] = rows;
    r.result["indeterminate"] = indeterminate;
}

// ---------------------------------------------------------------------------

struct Command {
    std::string name, help;
    void (*run)(Run&);
    std::vector<std::pair<std::string, std::string>> flags; // --flag -> config key
};

const std::vector<Command>& commands()
{
    static const std::vector<Command> cmds = {
        {"eval-eisenstein", "q-expansion of the Eisenstein series E_k", eval_eisenstein,
         {{"k", "experiment.k"}, {"order", "truncation.q_order"}}},
        {"eval-weierstrass", "Weierstrass functions P_k as a z-series or a value", eval_weierstrass,
         {{"k", "experiment.k"}, {"tau", "experiment.tau"}, {"z", "experiment.z"}, {"order", "truncation.q_order"},
          {"method", "experiment.method"}}},
        {"eval-pm", "P_m as a q-series in x = e^z, or its value at (z, tau)", eval_pm,
         {{"m", "experiment.m"}, {"x", "experiment.x"}, {"z", "experiment.z"}, {"tau", "experiment.tau"},
          {"order", "truncation.q_order"}}},
        {"eval-f0", "genus-zero kernel f_{n,m} and its expansion for |z| > |w|", eval_f0,
         {{"n", "experiment.n"}, {"m", "experiment.m"}, {"z", "experiment.z"}, {"w", "experiment.w"},
          {"order", "truncation.iota_order"}}},
        {"npoint", "n-point function by reduction or by the direct oracle", npoint,
         {{"genus", "experiment.genus"}, {"order", "truncation.q_order"}}},
        {"sew", "rho-expansion of a correlator on a sewn sphere", sew, {{"genus", "schottky.genus"}}},
        {"partition", "partition function at genus 1 or 2", partition,
         {{"genus", "experiment.genus"}, {"order", "truncation.q_order"}}},
        {"reduce", "factor F = P_n F_0 through the zero-point function", reduce, {}},
        {"check-complex", "residuals of the chain conditions", check_complex, {}},
        {"connection", "the connection functional and its components", connection, {}},
        {"cohomology", "ranks and cohomology of the truncated probe complex", cohomology,
         {{"cutoff", "truncation.weight_cutoff"}}},
    };
    return cmds;
}

json error_json(const std::string& cmd, const std::string& type, const std::string& msg, const Config* cfg)
{
    json j = {{"command", cmd}, {"error", {{"type", type}, {"message", msg}}}};
    if (cfg) j["config"] = cfg->echo_json();
    return j;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"voacx: VOA correlation functions, reduction differentials and chain-complex checks"};
    app.require_subcommand(1);

    struct Bound {
        const Command* cmd;
        CLI::App* sub;
        std::string config;
        std::vector<std::string> sets;
        std::map<std::string, std::string> values;
        bool oracle = false, reduction = false;
    };
    std::vector<Bound> bound(commands().size());
    for (std::size_t i = 0; i < commands().size(); ++i) {
        const Command& cmd = commands()[i];
        Bound& b = bound[i];
        b.cmd = &cmd;
        b.sub = app.add_subcommand(cmd.name, cmd.help);
        b.sub->add_option("--config", b.config, "INI experiment config")->check(CLI::ExistingFile);
        b.sub->add_option("--set", b.sets, "override a config key: section.key=value");
        for (const auto& [flag, key] : cmd.flags) b.sub->add_option("--" + flag, b.values[key], "sets " + key);
        if (cmd.name == "npoint") {
            auto* o = b.sub->add_flag("--oracle", b.oracle, "direct matrix element or trace");
            b.sub->add_flag("--reduction", b.reduction, "recursive reduction (default)")->excludes(o);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cerr << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitInvalid;
    }

    for (auto& b : bound) {
        if (!b.sub->parsed()) continue;
        Run run;
        try {
            if (!b.config.empty()) run.cfg.load(b.config);
            for (const auto& s : b.sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos || s.find('.') > eq) throw ConfigError("--set needs section.key=value, got '" + s + "'");
                run.cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
            }
            for (const auto& [key, v] : b.values)
                if (b.sub->count("--" + std::find_if(b.cmd->flags.begin(), b.cmd->flags.end(), [&](const auto& f) {
                                           return f.second == key;
                                       })->first))
                    run.cfg.set(key, v);
            if (b.oracle) run.cfg.set("experiment.method", "oracle");
            if (b.reduction) run.cfg.set("experiment.method", "reduction");
            b.cmd->run(run);
        } catch (const std::invalid_argument& e) {
            std::cout << error_json(b.cmd->name, "validation", e.what(), &run.cfg).dump(2) << "\n";
            return kExitInvalid;
        } catch (const std::domain_error& e) {
            std::cout << error_json(b.cmd->name, "singular", e.what(), &run.cfg).dump(2) << "\n";
            return kExitInvalid;
        } catch (const std::runtime_error& e) {
            std::cout << error_json(b.cmd->name, "unsupported", e.what(), &run.cfg).dump(2) << "\n";
            return kExitInvalid;
        }
        json out = {{"command", b.cmd->name}, {"config", run.cfg.echo_json()}, {"result", run.result}};
        out["exit_code"] = run.exit_code;
        std::cout << out.dump(2) << "\n";
        return run.exit_code;
    }
    return kExitInvalid;
}
