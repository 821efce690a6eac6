#ifndef MOMENTLIMIT_IO_HPP
#define MOMENTLIMIT_IO_HPP

///
/// \file io.hpp
///
/// JSON encodings of functionals, quadratic modules, measures and reports,
/// and the on-disk family bundle (one JSON file per index plus a manifest).
///
/// Variable ids appear as decimal strings when used as object keys:
///   {"type":"gaussian","variances":{"1":1.0}}
///   {"variables":[1,2],"atoms":[{"point":{"1":-1.0,"2":0.0},"weight":0.5}]}
///

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "asymptotics.hpp"
#include "parse.hpp"

namespace momentlimit
{

using json = nlohmann::json;

namespace detail
{

[[noreturn]] inline void bad_descriptor(const std::string& msg)
{
    throw error(errc::parse_error, msg);
}

inline var_id parse_var_id(const std::string& key)
{
    unsigned long v = 0;
    auto res = std::from_chars(key.data(), key.data() + key.size(), v);
    if (res.ec != std::errc{} || res.ptr != key.data() + key.size() || v == 0)
        bad_descriptor("variable id must be a positive integer, got '" + key + "'");
    return static_cast<var_id>(v);
}

inline double number(const json& j, const std::string& what)
{
    if (!j.is_number()) bad_descriptor(what + " must be a number");
    return j.get<double>();
}

inline const json& member(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) bad_descriptor(std::string("missing field '") + key + "'");
    return j.at(key);
}

inline std::map<var_id, double> id_map(const json& j, const std::string& what)
{
    if (!j.is_object()) bad_descriptor(what + " must be an object keyed by variable id");
    std::map<var_id, double> out;
    for (const auto& [k, v] : j.items()) out[parse_var_id(k)] = number(v, what);
    return out;
}

inline json id_map_to_json(const std::map<var_id, double>& m)
{
    json j = json::object();
    for (const auto& [i, v] : m) j[std::to_string(i)] = v;
    return j;
}

inline UnivariateLaw law_from_json(const json& j)
{
    const std::string kind = member(j, "law").get<std::string>();
    if (kind == "gaussian") return UnivariateLaw::gaussian(number(member(j, "variance"), "variance"));
    if (kind == "uniform") return UnivariateLaw::uniform(number(member(j, "radius"), "radius"));
    if (kind == "dirac") return UnivariateLaw::dirac(number(member(j, "location"), "location"));
    bad_descriptor("unknown law '" + kind + "'");
}

inline json law_to_json(const UnivariateLaw& l)
{
    switch (l.type)
    {
    case UnivariateLaw::kind::gaussian: return {{"law", "gaussian"}, {"variance", l.parameter}};
    case UnivariateLaw::kind::uniform: return {{"law", "uniform"}, {"radius", l.parameter}};
    case UnivariateLaw::kind::dirac: return {{"law", "dirac"}, {"location", l.parameter}};
    }
    return {};
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw error(errc::invalid_argument, "cannot write " + tmp);
        os << content;
        if (!os) throw error(errc::invalid_argument, "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

//------------------------------------------------------------------------------
// Small values
//------------------------------------------------------------------------------

inline json to_json(const VariableSet& f)
{
    json j = json::array();
    for (var_id i : f) j.push_back(i);
    return j;
}

inline VariableSet variable_set_from_json(const json& j)
{
    if (!j.is_array()) detail::bad_descriptor("variable set must be an array of ids");
    std::vector<var_id> ids;
    for (const auto& v : j)
    {
        if (!v.is_number_integer() || v.get<long long>() <= 0)
            detail::bad_descriptor("variable ids must be positive integers");
        ids.push_back(v.get<var_id>());
    }
    return VariableSet(std::move(ids));
}

inline json to_json(const MultiIndex& m)
{
    json j = json::object();
    for (const auto& [i, e] : m.entries()) j[std::to_string(i)] = e;
    return j;
}

inline MultiIndex multi_index_from_json(const json& j)
{
    if (!j.is_object()) detail::bad_descriptor("index must be an object keyed by variable id");
    std::vector<MultiIndex::entry> e;
    for (const auto& [k, v] : j.items())
    {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            detail::bad_descriptor("exponents must be non-negative integers");
        e.emplace_back(detail::parse_var_id(k), v.get<unsigned>());
    }
    return MultiIndex(std::move(e));
}

inline json to_json(const Point& x)
{
    json j = json::object();
    for (const auto& [i, v] : x) j[std::to_string(i)] = v;
    return j;
}

//------------------------------------------------------------------------------
// Measures
//------------------------------------------------------------------------------

inline json to_json(const AtomicMeasure& mu)
{
    json atoms = json::array();
    for (const auto& a : mu.atoms()) atoms.push_back({{"point", to_json(a.point)}, {"weight", a.weight}});
    return {{"variables", to_json(mu.variables())}, {"atoms", std::move(atoms)}};
}

inline std::vector<Atom> atoms_from_json(const json& j)
{
    if (!j.is_array() || j.empty()) detail::bad_descriptor("atoms must be a non-empty array");
    std::vector<Atom> atoms;
    for (const auto& a : j)
    {
        Atom at;
        at.point = detail::id_map(detail::member(a, "point"), "atom point");
        at.weight = detail::number(detail::member(a, "weight"), "atom weight");
        atoms.push_back(std::move(at));
    }
    return atoms;
}

inline AtomicMeasure atomic_measure_from_json(const json& j)
{
    auto atoms = atoms_from_json(detail::member(j, "atoms"));
    VariableSet vars;
    if (j.contains("variables"))
        vars = variable_set_from_json(j.at("variables"));
    else
        for (const auto& [i, v] : atoms.front().point) vars = vars.union_with({i});
    return AtomicMeasure(std::move(vars), std::move(atoms));
}

inline json to_json(const ProductLaw& law)
{
    json factors = json::object();
    for (const auto& [i, f] : law.factors) factors[std::to_string(i)] = detail::law_to_json(f);
    json j = {{"type", "product"}, {"factors", std::move(factors)}};
    if (law.fallback) j["default"] = detail::law_to_json(*law.fallback);
    return j;
}

inline json to_json(const Marginal& mu)
{
    if (const auto* a = std::get_if<AtomicMeasure>(&mu)) return to_json(*a);
    const auto& p = std::get<ProductMarginal>(mu);
    return {{"variables", to_json(p.variables())}, {"closed_form", to_json(p.law())}};
}

//------------------------------------------------------------------------------
// Functionals and modules
//------------------------------------------------------------------------------

inline MomentFunctional functional_from_json(const json& j)
{
    const std::string type = detail::member(j, "type").get<std::string>();
    auto fallback = [&](const char* key) -> std::optional<double> {
        if (j.contains(key)) return detail::number(j.at(key), key);
        return std::nullopt;
    };
    if (type == "gaussian")
        return MomentFunctional::gaussian_product(
            j.contains("variances") ? detail::id_map(j.at("variances"), "variances")
                                    : std::map<var_id, double>{},
            fallback("default_variance"));
    if (type == "uniform_box")
        return MomentFunctional::uniform_box_product(
            j.contains("radii") ? detail::id_map(j.at("radii"), "radii") : std::map<var_id, double>{},
            fallback("default_radius"));
    if (type == "dirac")
        return MomentFunctional::dirac_product(
            j.contains("point") ? detail::id_map(j.at("point"), "point") : Point{});
    if (type == "atomic") return MomentFunctional::atomic(atomic_measure_from_json(j));
    if (type == "product")
    {
        ProductLaw law;
        if (j.contains("factors"))
            for (const auto& [k, v] : j.at("factors").items())
                law.factors[detail::parse_var_id(k)] = detail::law_from_json(v);
        if (j.contains("default")) law.fallback = detail::law_from_json(j.at("default"));
        return MomentFunctional::product(std::move(law));
    }
    if (type == "table")
    {
        MomentTable t;
        const json& md = detail::member(j, "max_degree");
        if (!md.is_number_integer() || md.get<long long>() < 0)
            detail::bad_descriptor("max_degree must be a non-negative integer");
        t.max_degree = md.get<unsigned>();
        for (const auto& e : detail::member(j, "moments"))
        {
            const MultiIndex m = multi_index_from_json(detail::member(e, "index"));
            if (e.contains("value"))
                t.values[m] = detail::number(e.at("value"), "moment value");
            else
                t.log_values[m] = detail::number(detail::member(e, "log_value"), "log_value");
        }
        return MomentFunctional::table(std::move(t));
    }
    detail::bad_descriptor("unknown functional type '" + type + "'");
}

inline json to_json(const MomentFunctional& l)
{
    return std::visit(
        [](const auto& src) -> json {
            using T = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<T, ProductLaw>)
                return to_json(src);
            else if constexpr (std::is_same_v<T, AtomicMeasure>)
            {
                json j = to_json(src);
                j["type"] = "atomic";
                return j;
            }
            else
            {
                // sorted for reproducible output
                std::vector<std::pair<MultiIndex, json>> rows;
                for (const auto& [m, v] : src.values) rows.emplace_back(m, json{{"index", to_json(m)}, {"value", v}});
                for (const auto& [m, v] : src.log_values)
                    rows.emplace_back(m, json{{"index", to_json(m)}, {"log_value", v}});
                std::sort(rows.begin(), rows.end(),
                          [](const auto& a, const auto& b) { return GradedLexLess{}(a.first, b.first); });
                json moments = json::array();
                for (auto& r : rows) moments.push_back(std::move(r.second));
                return {{"type", "table"}, {"max_degree", src.max_degree}, {"moments", std::move(moments)}};
            }
        },
        l.source());
}

/// {"generators": ["1 - x1^2", ...]} or a bare array of strings.
inline QuadraticModule module_from_json(const json& j)
{
    const json& gens = j.is_array() ? j : (j.contains("generators") ? j.at("generators") : json::array());
    if (!gens.is_array()) detail::bad_descriptor("generators must be an array of strings");
    QuadraticModule q;
    for (const auto& g : gens)
    {
        if (!g.is_string()) detail::bad_descriptor("generators must be polynomial strings");
        q.generators.push_back(parse_polynomial(g.get<std::string>()));
    }
    return q;
}

inline json to_json(const QuadraticModule& q)
{
    json gens = json::array();
    for (const auto& g : q.generators) gens.push_back(g.to_string());
    return {{"generators", std::move(gens)}};
}

//------------------------------------------------------------------------------
// Reports
//------------------------------------------------------------------------------

inline json to_json(const PsdReport& r)
{
    return {{"min_eigenvalue", r.min_eigenvalue},
            {"matrix_norm", r.matrix_norm},
            {"verdict", to_string(r.verdict)},
            {"tolerance_used", r.tolerance_used}};
}

inline json to_json(const FlatnessReport& r)
{
    return {{"order", r.order},
            {"rank_n", r.rank_n},
            {"rank_n_minus_1", r.rank_n_minus_1},
            {"is_flat", r.is_flat},
            {"rank_tolerance", r.rank_tolerance}};
}

inline json to_json(const ExactnessReport& r)
{
    json pairs = json::array();
    for (const auto& [a, b] : r.pairs_checked) pairs.push_back({to_json(a), to_json(b)});
    json j = {{"pairs_checked", std::move(pairs)},
              {"max_discrepancy", r.max_discrepancy},
              {"verdict", r.exact ? "exact" : "not_exact"},
              {"tolerance", r.tolerance}};
    if (r.worst_pair) j["worst_pair"] = {to_json(r.worst_pair->first), to_json(r.worst_pair->second)};
    return j;
}

inline json to_json(const CarlemanReport& r)
{
    json j = {{"variable", r.variable},
              {"terms_used", r.terms_used},
              {"partial_sum", r.partial_sum},
              {"verdict", to_string(r.verdict)}};
    j["closed_form_tag"] = r.closed_form_tag ? json(*r.closed_form_tag) : json(nullptr);
    return j;
}

inline json to_json(const ArchimedeanReport& r)
{
    json growth = json::object();
    for (const auto& [i, ok] : r.growth_check) growth[std::to_string(i)] = ok;
    json first = json::object();
    for (const auto& [i, n] : r.first_violation) first[std::to_string(i)] = n;
    return {{"per_variable_bound", detail::id_map_to_json(r.per_variable_bound)},
            {"verdict", to_string(r.verdict)},
            {"growth_check", std::move(growth)},
            {"max_growth_ratio", detail::id_map_to_json(r.max_growth_ratio)},
            {"first_violation", std::move(first)}};
}

inline json to_json(const SplitReport& r)
{
    json carl = json::object();
    for (const auto& [i, c] : r.carleman) carl[std::to_string(i)] = to_json(c);
    json errs = json::object();
    for (const auto& [i, e] : r.carleman_errors) errs[std::to_string(i)] = e;
    return {{"archimedean_part", to_json(r.archimedean_part)},
            {"carleman_part", to_json(r.carleman_part)},
            {"uncovered", to_json(r.uncovered)},
            {"hypothesis_satisfied", r.hypothesis_satisfied},
            {"archimedean", to_json(r.archimedean)},
            {"carleman", std::move(carl)},
            {"carleman_errors", std::move(errs)}};
}

inline json to_json(const TightnessCertificate& c)
{
    json mass = json::array();
    for (const auto& [f, m] : c.per_index_mass) mass.push_back({{"index", to_json(f)}, {"mass", m}});
    json j = {{"epsilon", c.epsilon},
              {"radius_schedule", detail::id_map_to_json(c.radius_schedule)},
              {"per_index_mass", std::move(mass)},
              {"verdict", c.certified ? "certified" : "failed"}};
    if (c.worst_index) j["worst_index"] = to_json(*c.worst_index);
    return j;
}

inline json to_json(const AuditReport& r)
{
    json j = {{"trials", r.trials}, {"max_discrepancy", r.max_discrepancy}};
    if (r.worst_pair)
    {
        j["worst_pair"] = {to_json(r.worst_pair->first), to_json(r.worst_pair->second)};
        j["worst_predicate"] = r.worst_predicate;
    }
    return j;
}

//------------------------------------------------------------------------------
// Family bundle
//------------------------------------------------------------------------------

/// "1_2_7", or "empty" for the empty index.
inline std::string bundle_file_stem(const VariableSet& f)
{
    if (f.empty()) return "empty";
    std::string s;
    for (var_id i : f) s += (s.empty() ? "" : "_") + std::to_string(i);
    return s;
}

inline void write_family_bundle(const std::filesystem::path& dir, const SealedFamily& fam)
{
    std::filesystem::create_directories(dir);
    json index_list = json::array();
    json files = json::array();
    for (const auto& f : fam.index_list())
    {
        const std::string name = bundle_file_stem(f) + ".json";
        json entry = to_json(fam.at(f));
        if (auto d = fam.family().certified_degree(f)) entry["certified_degree"] = *d;
        detail::write_atomically(dir / name, entry.dump(2) + "\n");
        index_list.push_back(to_json(f));
        files.push_back(name);
    }
    const json manifest = {{"index_list", std::move(index_list)},
                           {"files", std::move(files)},
                           {"exactness", to_json(fam.exactness())}};
    detail::write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw error(errc::parse_error, "cannot open " + path.string());
    try
    {
        return json::parse(is);
    }
    catch (const json::exception& e)
    {
        throw error(errc::parse_error, path.string() + ": " + e.what());
    }
}

/// Reads a bundle back as an unsealed family.
inline ProjectiveFamily read_family_bundle(const std::filesystem::path& dir)
{
    const json manifest = read_json_file(dir / "manifest.json");
    ProjectiveFamily fam;
    for (const auto& name : detail::member(manifest, "files"))
    {
        const json entry = read_json_file(dir / name.get<std::string>());
        std::optional<unsigned> degree;
        if (entry.contains("certified_degree")) degree = entry.at("certified_degree").get<unsigned>();
        if (entry.contains("closed_form"))
        {
            const auto l = functional_from_json(entry.at("closed_form"));
            if (!l.product_law()) detail::bad_descriptor("closed_form marginal must be a product law");
            fam.add(ProductMarginal(variable_set_from_json(detail::member(entry, "variables")),
                                    *l.product_law()),
                    degree);
        }
        else
            fam.add(atomic_measure_from_json(entry), degree);
    }
    return fam;
}

} // namespace momentlimit

#endif
