#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "json.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <sys/wait.h>

using json = nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args)
{
    const std::string cmd = std::string(VOACX_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string cfg(const std::string& name) { return std::string(VOACX_CONFIGS) + "/" + name; }

double rational_value(const json& v)
{
    if (v.is_number()) return v.get<double>();
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

} // namespace

TEST_CASE("odd Eisenstein series is the zero series")
{
    const auto r = run("eval-eisenstein --k 3 --order 10");
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["result"]["series"]["coeffs"].empty());
    CHECK(j["result"]["series"]["truncation"] == 10);
    CHECK(j["config"]["resolved"]["experiment.k"] == "3");
}

TEST_CASE("vacuum chain conditions vanish exactly")
{
    const auto r = run("check-complex --config " + cfg("vacuum.cfg"));
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j["result"]["residuals"].size() == 5);
    for (const auto& row : j["result"]["residuals"]) {
        CHECK(row["residual"] == 0.0);
        CHECK(row["exact_zero"] == true);
    }
}

TEST_CASE("genus-one two-point: reduction against the trace through q^7")
{
    const auto o = run("npoint --genus 1 --oracle --config " + cfg("twopoint-a.cfg"));
    const auto d = run("npoint --genus 1 --reduction --config " + cfg("twopoint-a.cfg"));
    REQUIRE(o.code == 0);
    REQUIRE(d.code == 0);
    const json a = json::parse(o.out)["result"]["value"], b = json::parse(d.out)["result"]["value"];
    CHECK(a["truncation"] == 8);
    CHECK(b["truncation"] == 8);
    REQUIRE(a["coeffs"].size() == b["coeffs"].size());
    for (std::size_t i = 0; i < a["coeffs"].size(); ++i) {
        CHECK(a["coeffs"][i][0] == b["coeffs"][i][0]);
        const double x = rational_value(a["coeffs"][i][1]), y = rational_value(b["coeffs"][i][1]);
        CHECK(std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)));
    }
}

TEST_CASE("exit codes")
{
    const auto bad_flag = run("eval-eisenstein --k 3 --nonsense 1");
    CHECK(bad_flag.code == 2);
    CHECK(bad_flag.out.empty());

    const auto missing = run("eval-eisenstein --order 4");
    CHECK(missing.code == 2);
    CHECK(json::parse(missing.out)["error"]["type"] == "validation");

    const auto singular = run("npoint --genus 0 --set \"experiment.states=a;a\" --set \"experiment.points=3;3\"");
    CHECK(singular.code == 2);
    CHECK(json::parse(singular.out).contains("error"));

    // exact scalars cannot carry a genus-g reduction, so an expected-zero case fails
    const auto failed = run("check-complex --config " + cfg("vacuum.cfg") + " --set case.gn-sphere.x=a@3");
    CHECK(failed.code == 3);
    CHECK(json::parse(failed.out)["result"]["failed"] == 1);
}

TEST_CASE("reports are deterministic")
{
    const std::string args = "check-complex --config " + cfg("vacuum.cfg");
    CHECK(run(args).out == run(args).out);
    const std::string p = "partition --genus 2 --set \"schottky.w=2;3;-2;-3\" --set schottky.rho_order=3";
    CHECK(run(p).out == run(p).out);
}
