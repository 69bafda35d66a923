#pragma once

#include "voacx/complex.hpp"

#include "json.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace voacx::cli {

using json = nlohmann::ordered_json;

/// Validation failure in the command line or the config; exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

/// Lists in configs are separated by ';' (partitions use ',').
inline std::vector<std::string> split_list(const std::string& s, char sep = ';')
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Integers, "p/q", and finite decimals such as "0.25" or "1e-3", all exact.
inline Rational parse_rational(const std::string& text)
{
    const std::string s = trim(text);
    if (s.empty()) throw ConfigError("empty number");
    if (s.find('i') != std::string::npos) throw ConfigError("'" + s + "' is not real; exact mode needs rationals");
    try {
        if (const auto slash = s.find('/'); slash != std::string::npos) {
            const Rational d(trim(s.substr(slash + 1)));
            if (d == 0) throw ConfigError("zero denominator in '" + s + "'");
            return Rational(trim(s.substr(0, slash))) / d;
        }
        std::string mant = s;
        long long exp10 = 0;
        if (const auto e = s.find_first_of("eE"); e != std::string::npos) {
            mant = s.substr(0, e);
            exp10 = std::stoll(s.substr(e + 1));
        }
        if (const auto dot = mant.find('.'); dot != std::string::npos) {
            exp10 -= static_cast<long long>(mant.size() - dot - 1);
            mant.erase(dot, 1);
        }
        if (mant.empty() || mant == "-" || mant == "+") throw ConfigError("malformed number '" + s + "'");
        if (mant[0] == '+') mant.erase(0, 1);
        Rational r{Integer(mant)};
        const Rational ten(10);
        for (long long k = 0; k < std::llabs(exp10); ++k) r = exp10 > 0 ? r * ten : r / ten;
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("malformed number '" + s + "'");
    }
}

/// "x", "x+yi", "x-yi", "yi", "i".
inline Complex parse_complex(const std::string& text)
{
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ConfigError("empty number");
    if (s.back() != 'i') return {to_double(parse_rational(s)), 0.0};
    s.pop_back();
    // split at the last sign that is not part of an exponent
    std::size_t cut = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            cut = k;
            break;
        }
    auto imag = [](std::string t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return to_double(parse_rational(t));
    };
    if (cut == std::string::npos) return {0.0, imag(s)};
    return {to_double(parse_rational(s.substr(0, cut))), imag(s.substr(cut))};
}

template <class T>
T parse_scalar(const std::string& s)
{
    if constexpr (std::is_same_v<T, Rational>)
        return parse_rational(s);
    else
        return parse_complex(s);
}

inline json scalar_json(const Rational& r) { return r.str(); }
inline json scalar_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

inline json re_im(const Rational& r) { return json::array({r.str(), "0"}); }
inline json re_im(const Complex& c) { return json::array({c.real(), c.imag()}); }

/// {variable, min_exponent, truncation, coeffs: [[e, re, im], ...]}
template <class T>
json series_json(const TruncatedSeries<T>& s)
{
    json j;
    j["variable"] = s.tag();
    j["min_exponent"] = s.min_exponent();
    j["truncation"] = s.exact() ? json("exact") : json(s.truncation());
    json c = json::array();
    for (const auto& [e, v] : s.terms()) {
        json row = json::array({e});
        for (auto& x : re_im(v)) row.push_back(x);
        c.push_back(row);
    }
    j["coeffs"] = c;
    return j;
}

/// One nome: the series schema.  Several: {variables, truncation: [...], coeffs: [[[k...], re, im]]}.
/// No nome: {value, truncation: "exact" | "at_moduli"}.
template <class T>
json rho_json(const RhoSeries<T>& s, const std::vector<std::string>& names, bool at_moduli = false)
{
    if (s.orders.empty()) {
        json j;
        j["value"] = scalar_json(s.coeff({}));
        j["truncation"] = at_moduli ? "evaluated at the handle moduli" : (std::is_same_v<T, Rational> ? "exact" : "float");
        return j;
    }
    if (s.orders.size() == 1) {
        TruncatedSeries<T> t(names.empty() ? "rho" : names[0], s.orders[0], 0);
        for (const auto& [k, c] : s.coeffs) t.add_to(k[0], c);
        return series_json(t);
    }
    json j;
    j["variables"] = names;
    j["truncation"] = s.orders;
    json c = json::array();
    for (const auto& [k, v] : s.coeffs) {
        json row = json::array({k});
        for (auto& x : re_im(v)) row.push_back(x);
        c.push_back(row);
    }
    j["coeffs"] = c;
    return j;
}

/// Flat INI config.  Every key read is echoed with its resolved value; overrides from flags
/// take precedence over the file.
class Config {
public:
    void load(const std::string& path)
    {
        try {
            boost::property_tree::ini_parser::read_ini(path, tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(std::string("cannot read config: ") + e.what());
        }
        path_ = path;
    }

    void set(const std::string& key, const std::string& value) { overrides_[key] = value; }

    bool has(const std::string& key) const { return overrides_.count(key) || lookup(key).has_value(); }

    std::string get(const std::string& key, const std::string& fallback) const
    {
        std::string v = fallback;
        if (auto it = overrides_.find(key); it != overrides_.end())
            v = it->second;
        else if (auto o = lookup(key))
            v = trim(*o);
        echo(key, v);
        return v;
    }

    std::string require(const std::string& key) const
    {
        if (!has(key)) throw ConfigError("missing config key '" + key + "'");
        return get(key, "");
    }

    int get_int(const std::string& key, int fallback) const
    {
        const std::string v = get(key, std::to_string(fallback));
        try {
            std::size_t pos = 0;
            const int r = std::stoi(v, &pos);
            if (pos != v.size()) throw ConfigError("");
            return r;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' needs an integer, got '" + v + "'");
        }
    }

    double get_double(const std::string& key, double fallback) const
    {
        std::ostringstream os;
        os << fallback;
        const std::string v = get(key, os.str());
        return to_double(parse_rational(v));
    }

    bool get_bool(const std::string& key, bool fallback) const
    {
        const std::string v = get(key, fallback ? "true" : "false");
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("key '" + key + "' needs a boolean, got '" + v + "'");
    }

    /// Section names with the given prefix, in file order.
    std::vector<std::string> sections(const std::string& prefix) const
    {
        std::vector<std::string> out;
        for (const auto& [name, sub] : tree_)
            if (name.rfind(prefix, 0) == 0 && !sub.empty()) out.push_back(name);
        return out;
    }

    json echo_json() const
    {
        json j;
        if (!path_.empty()) j["file"] = path_;
        json keys = json::object();
        for (const auto& [k, v] : echoed_) keys[k] = v;
        j["resolved"] = keys;
        return j;
    }

private:
    // "section.key", with the section name itself allowed to contain dots
    std::optional<std::string> lookup(const std::string& key) const
    {
        using path = boost::property_tree::ptree::path_type;
        const auto dot = key.rfind('.');
        const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
        const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
        const auto* node = &tree_;
        if (!sec.empty()) {
            auto it = tree_.find(sec);
            if (it == tree_.not_found()) return std::nullopt;
            node = &it->second;
        }
        if (auto o = node->get_optional<std::string>(path(name, '\0'))) return *o;
        return std::nullopt;
    }

    void echo(const std::string& key, const std::string& v) const { echoed_[key] = v; }

    boost::property_tree::ptree tree_;
    std::map<std::string, std::string> overrides_;
    mutable std::map<std::string, std::string> echoed_;
    std::string path_;
};

} // namespace voacx::cli
