#ifndef MOMENTLIMIT_PIPELINE_HPP
#define MOMENTLIMIT_PIPELINE_HPP

///
/// \file pipeline.hpp
///
/// Batch driver: restrict -> matrices -> extract -> seal -> diagnostics ->
/// tightness -> audit, with one JSON verdict per job.
///

#include <atomic>
#include <thread>

#include "io.hpp"

namespace momentlimit
{

/// Every numerical threshold the pipeline uses. Defaults match the library
/// defaults of the individual modules.
struct Tolerances
{
    double psd = default_psd_tolerance;           ///< relative eigenvalue floor, 1e-8
    double rank = default_rank_tolerance;         ///< relative singular value cut, 1e-7
    double exactness = 1e-8;                      ///< consistency of nested marginals
    double support = 1e-9;                        ///< slack for g(atom) >= 0
    double moment_match = 1e-6;                   ///< extracted vs given moments
    double merge = default_merge_tolerance;       ///< atom merging distance, 1e-7
    double boundary = default_boundary_tolerance; ///< audit predicate slack, 1e-9
    double carleman_threshold = default_carleman_threshold; ///< 10
};

enum class command
{
    check,
    solve,
    verify,
    report
};

inline std::string_view to_string(command c)
{
    switch (c)
    {
    case command::check: return "check";
    case command::solve: return "solve";
    case command::verify: return "verify";
    case command::report: return "report";
    }
    return "?";
}

inline command command_from_string(std::string_view s)
{
    if (s == "check") return command::check;
    if (s == "solve") return command::solve;
    if (s == "verify") return command::verify;
    if (s == "report") return command::report;
    throw error(errc::parse_error, "unknown command '" + std::string(s) + "'");
}

struct JobDescriptor
{
    MomentFunctional functional = MomentFunctional::dirac_product({});
    QuadraticModule module;
    std::vector<VariableSet> index_list;
    unsigned degree_budget = 4;
    double epsilon = 0.05;
    Tolerances tolerances;
    unsigned exactness_degree = default_exactness_degree;
    unsigned carleman_max_n = 50;
    std::size_t audit_trials = 1000;
    std::optional<std::map<var_id, double>> schedule;
    command cmd = command::verify;
};

inline JobDescriptor job_from_json(const json& j)
{
    if (!j.is_object()) throw error(errc::parse_error, "job descriptor must be a JSON object");
    JobDescriptor job;
    job.functional = functional_from_json(detail::member(j, "functional"));
    if (j.contains("module")) job.module = module_from_json(j.at("module"));

    const json& idx = detail::member(j, "index_list");
    if (!idx.is_array() || idx.empty()) throw error(errc::parse_error, "index_list must be a non-empty array");
    std::vector<VariableSet> sets;
    for (const auto& f : idx) sets.push_back(variable_set_from_json(f));
    job.index_list = close_under_union(sets);

    auto read_unsigned = [&](const char* key, auto& out) {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw error(errc::parse_error, std::string(key) + " must be a non-negative integer");
        out = v.get<std::decay_t<decltype(out)>>();
    };
    read_unsigned("degree_budget", job.degree_budget);
    read_unsigned("exactness_degree", job.exactness_degree);
    read_unsigned("carleman_max_n", job.carleman_max_n);
    read_unsigned("audit_trials", job.audit_trials);
    if (job.degree_budget < 1) throw error(errc::parse_error, "degree_budget must be >= 1");

    if (j.contains("epsilon")) job.epsilon = detail::number(j.at("epsilon"), "epsilon");
    if (!(job.epsilon > 0.0 && job.epsilon < 1.0)) throw error(errc::parse_error, "epsilon must lie in (0,1)");

    if (j.contains("tolerances"))
    {
        const json& t = j.at("tolerances");
        if (!t.is_object()) throw error(errc::parse_error, "tolerances must be an object");
        const std::pair<const char*, double*> fields[] = {
            {"psd", &job.tolerances.psd},
            {"rank", &job.tolerances.rank},
            {"exactness", &job.tolerances.exactness},
            {"support", &job.tolerances.support},
            {"moment_match", &job.tolerances.moment_match},
            {"merge", &job.tolerances.merge},
            {"boundary", &job.tolerances.boundary},
            {"carleman_threshold", &job.tolerances.carleman_threshold}};
        for (const auto& [k, v] : t.items())
        {
            auto it = std::find_if(std::begin(fields), std::end(fields),
                                   [&](const auto& f) { return k == f.first; });
            if (it == std::end(fields)) throw error(errc::parse_error, "unknown tolerance '" + k + "'");
            *it->second = detail::number(v, k);
            if (!(*it->second > 0.0)) throw error(errc::parse_error, "tolerance '" + k + "' must be positive");
        }
    }
    if (j.contains("schedule")) job.schedule = detail::id_map(j.at("schedule"), "schedule");
    if (j.contains("command")) job.cmd = command_from_string(j.at("command").get<std::string>());
    return job;
}

inline JobDescriptor load_job(const std::filesystem::path& path) { return job_from_json(read_json_file(path)); }

//------------------------------------------------------------------------------
// Results
//------------------------------------------------------------------------------

enum class overall_verdict
{
    representing_measure_constructed,
    conditions_certified,
    necessary_condition_failed,
    inconclusive
};

inline std::string_view to_string(overall_verdict v)
{
    switch (v)
    {
    case overall_verdict::representing_measure_constructed: return "RepresentingMeasureConstructed";
    case overall_verdict::conditions_certified: return "ConditionsCertified";
    case overall_verdict::necessary_condition_failed: return "NecessaryConditionFailed";
    case overall_verdict::inconclusive: return "Inconclusive";
    }
    return "?";
}

/// 0 on success verdicts, 2 on a failed necessary condition, 3 otherwise.
inline int exit_code(overall_verdict v)
{
    switch (v)
    {
    case overall_verdict::representing_measure_constructed:
    case overall_verdict::conditions_certified: return 0;
    case overall_verdict::necessary_condition_failed: return 2;
    case overall_verdict::inconclusive: return 3;
    }
    return 3;
}

struct StageError
{
    std::string stage;
    std::string code;
    std::string message;
};

struct MatrixCheck
{
    unsigned order = 0;
    std::string generator; ///< "1" for the moment matrix itself
    PsdReport psd;
};

struct IndexResult
{
    VariableSet index;
    std::vector<MatrixCheck> psd_reports;
    std::vector<FlatnessReport> flatness;
    std::vector<unsigned> flat_orders;
    std::optional<ExtractionResult> extraction;
    /// largest moment difference between measures extracted at different flat orders
    double order_discrepancy = 0.0;
    std::optional<Marginal> measure;
    std::string measure_source = "none"; ///< extracted | closed_form | none
    std::optional<bool> support_ok;
    std::vector<StageError> errors;
    std::vector<std::pair<std::string, MomentMatrix>> matrices; ///< kept only on request

    bool psd_failed() const
    {
        return std::any_of(psd_reports.begin(), psd_reports.end(),
                           [](const MatrixCheck& c) { return !c.psd.is_psd(); });
    }
};

struct PipelineVerdict
{
    command cmd = command::verify;
    std::uint64_t seed = 0;
    std::vector<IndexResult> per_index;
    std::optional<SealedFamily> family;
    std::optional<ExactnessReport> exactness;
    std::optional<SplitReport> split;
    std::optional<TightnessCertificate> tightness;
    std::optional<AuditReport> audit;
    std::vector<StageError> errors;
    overall_verdict overall = overall_verdict::inconclusive;
    std::string basis;              ///< standard result the verdict instantiates
    std::vector<std::string> notes; ///< why a stronger verdict was not reached
};

struct RunOptions
{
    std::optional<command> cmd;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool keep_matrices = false;
};

namespace detail
{

template <class F>
void record_errors(std::vector<StageError>& out, const char* stage, F&& f)
{
    try
    {
        f();
    }
    catch (const error& e)
    {
        out.push_back({stage, std::string(to_string(e.code())), e.what()});
    }
    catch (const std::exception& e)
    {
        out.push_back({stage, "internal", e.what()});
    }
}

inline unsigned ceil_half(unsigned d) { return (d + 1) / 2; }

inline double max_moment_gap(const AtomicMeasure& a, const AtomicMeasure& b, unsigned degree)
{
    double worst = 0.0;
    for (const auto& m : monomials_up_to(a.variables(), degree))
        worst = std::max(worst, std::abs(a.moment(m) - b.moment(m)));
    return worst;
}

inline IndexResult run_index(const JobDescriptor& job, const VariableSet& f, command cmd, bool keep)
{
    IndexResult res;
    res.index = f;
    const Tolerances& tol = job.tolerances;
    const MomentFunctional l = job.functional.restrict(f);
    const QuadraticModule qf = restrict_module(job.module, f);

    std::vector<MomentMatrix> moment_mats;
    record_errors(res.errors, "matrices", [&] {
        for (unsigned n = 1; n <= job.degree_budget && l.degree_available(2 * n); ++n)
        {
            MomentMatrix m = moment_matrix(l, f, n);
            res.psd_reports.push_back({n, "1", psd_check(m, tol.psd)});
            res.flatness.push_back(flatness_of(m, tol.rank));
            if (res.flatness.back().is_flat) res.flat_orders.push_back(n);
            for (std::size_t k = 0; k < qf.generators.size(); ++k)
            {
                const Polynomial& g = qf.generators[k];
                const unsigned half = ceil_half(g.degree());
                if (half > n) continue;
                const unsigned ng = n - half;
                if (!l.degree_available(2 * ng + g.degree())) continue;
                MomentMatrix lm = moment_matrix(l, f, ng, g);
                res.psd_reports.push_back({n, g.to_string(), psd_check(lm, tol.psd)});
                if (keep)
                    res.matrices.emplace_back(bundle_file_stem(f) + "_L" + std::to_string(ng) + "_g" +
                                                  std::to_string(k + 1),
                                              std::move(lm));
            }
            if (keep) res.matrices.emplace_back(bundle_file_stem(f) + "_M" + std::to_string(n), m);
        }
        if (res.flatness.empty())
            throw error(errc::degree_exceeded, "no moment matrix of order >= 1 fits the available degree");
    });
    if (cmd == command::check || res.psd_failed()) return res;

    ExtractionOptions opt;
    opt.rank_tolerance = tol.rank;
    opt.moment_tolerance = tol.moment_match;
    opt.merge_tolerance = tol.merge;
    std::vector<StageError> refused;
    record_errors(refused, "extract", [&] { res.extraction = extract_lowest(l, f, job.degree_budget, opt); });
    if (res.extraction)
    {
        // any later flat order must reproduce the same measure
        ExtractionOptions same = opt;
        same.rank_tolerance = res.extraction->rank_tolerance;
        for (unsigned n = res.extraction->order + 1; n <= job.degree_budget && l.degree_available(2 * n); ++n)
        {
            try
            {
                if (!flatness(l, f, n, same.rank_tolerance).is_flat) continue;
                const auto r = extract(l, f, n, same);
                res.order_discrepancy = std::max(
                    res.order_discrepancy, max_moment_gap(res.extraction->measure, r.measure, 2 * res.extraction->order));
            }
            catch (const error&)
            {
            }
        }
    }
    else
        // never being flat is already visible in the flatness reports
        for (auto& e : refused)
            if (e.code != to_string(errc::not_flat)) res.errors.push_back(std::move(e));
    if (res.extraction && res.order_discrepancy > tol.moment_match)
    {
        res.errors.push_back({"extract", "non_unique",
                              "flat orders yield measures differing by " +
                                  detail::format_double(res.order_discrepancy)});
        res.extraction.reset();
    }

    if (res.extraction)
    {
        res.measure = res.extraction->measure;
        res.measure_source = "extracted";
    }
    else if (job.functional.is_closed_form())
    {
        record_errors(res.errors, "closed_form", [&] {
            if (const auto* law = job.functional.product_law())
            {
                for (var_id i : f) (void)law->factor(i);
                res.measure = ProductMarginal(f, *law);
            }
            else
                res.measure = pushforward(*job.functional.atomic_source(), f, tol.merge);
            res.measure_source = "closed_form";
        });
    }

    if (res.measure)
        if (const auto* a = std::get_if<AtomicMeasure>(&*res.measure))
            record_errors(res.errors, "support", [&] { res.support_ok = check_support(*a, qf, tol.support); });
    return res;
}

inline std::string basis_of(overall_verdict v)
{
    switch (v)
    {
    case overall_verdict::representing_measure_constructed:
        return "Curto-Fialkow flat extension theorem on each index; Kolmogorov consistency of the "
               "exact projective system; Prokhorov tightness criterion for a Radon extension to the "
               "projective limit";
    case overall_verdict::conditions_certified:
        return "Prokhorov tightness criterion on the exact projective system; partially Archimedean "
               "split (Archimedean moment bound or Carleman determinacy condition per generator)";
    case overall_verdict::necessary_condition_failed:
        return "Riesz-Haviland positivity: a representing measure forces positive semidefinite "
               "moment and localizing matrices on every finitely generated subalgebra";
    case overall_verdict::inconclusive: return "none";
    }
    return "none";
}

} // namespace detail

/// Runs a job in memory. Worker threads only touch their own index slot.
inline PipelineVerdict run(const JobDescriptor& job, const RunOptions& opts = {})
{
    PipelineVerdict v;
    v.cmd = opts.cmd.value_or(job.cmd);
    v.seed = opts.seed;
    const auto& idx = job.index_list;
    v.per_index.resize(idx.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < idx.size(); k = next++)
            v.per_index[k] = detail::run_index(job, idx[k], v.cmd, opts.keep_matrices);
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(idx.size())));
    if (nthreads == 1)
        worker();
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }

    const bool psd_failed =
        std::any_of(v.per_index.begin(), v.per_index.end(), [](const IndexResult& r) { return r.psd_failed(); });
    auto finish = [&](overall_verdict o) {
        v.overall = o;
        v.basis = detail::basis_of(o);
        return v;
    };
    if (psd_failed)
    {
        for (const auto& r : v.per_index)
            if (r.psd_failed()) v.notes.push_back("positivity fails on " + r.index.to_string());
        return finish(overall_verdict::necessary_condition_failed);
    }
    if (v.cmd == command::check)
    {
        v.notes.push_back("check stops after the necessary matrix conditions");
        return finish(overall_verdict::inconclusive);
    }

    const VariableSet all = [&] {
        VariableSet out;
        for (const auto& f : idx) out = out.union_with(f);
        return out;
    }();
    detail::record_errors(v.errors, "diagnostics", [&] {
        v.split = partial_split(job.module, job.functional, all, job.carleman_max_n,
                                job.tolerances.carleman_threshold);
    });

    ProjectiveFamily fam;
    bool complete = true;
    for (const auto& r : v.per_index)
    {
        if (!r.measure)
        {
            complete = false;
            v.notes.push_back("no marginal on " + r.index.to_string());
            continue;
        }
        std::optional<unsigned> degree;
        if (r.measure_source == "extracted") degree = 2 * r.extraction->order;
        fam.add(*r.measure, degree);
    }
    if (complete)
        detail::record_errors(v.errors, "seal", [&] {
            v.family = seal(fam, job.tolerances.exactness, job.exactness_degree);
            v.exactness = v.family->exactness();
        });
    if (complete && !v.family)
        v.exactness = check_exactness(fam, fam.covering_pairs(), job.tolerances.exactness, job.exactness_degree);

    if (v.family)
    {
        detail::record_errors(v.errors, "tightness", [&] {
            std::map<var_id, double> schedule;
            if (job.schedule)
                schedule = *job.schedule;
            else
            {
                const auto s = suggest_schedule(*v.family, job.epsilon);
                if (!s.failed.empty())
                    v.notes.push_back("no radius reaches the tail target for " + s.failed.to_string());
                schedule = s.radii;
            }
            v.tightness = tightness(*v.family, job.epsilon, schedule);
        });
        if ((v.cmd == command::verify || v.cmd == command::report) && v.family->index_list().size() >= 2)
            detail::record_errors(v.errors, "audit", [&] {
                v.audit = well_definedness_audit(*v.family, job.audit_trials, opts.seed, job.tolerances.boundary);
            });
    }

    const bool sealed = v.family.has_value();
    const bool tight = v.tightness && v.tightness->certified;
    const bool audit_ok = !v.audit || v.audit->max_discrepancy <= job.tolerances.exactness;
    const bool support_ok = std::all_of(v.per_index.begin(), v.per_index.end(),
                                        [](const IndexResult& r) { return r.support_ok.value_or(true); });
    const bool all_atomic = std::all_of(v.per_index.begin(), v.per_index.end(), [](const IndexResult& r) {
        return r.measure && std::holds_alternative<AtomicMeasure>(*r.measure) &&
               (!r.extraction || r.extraction->moment_residual <= 1e-6);
    });
    const bool split_ok = v.split && v.split->hypothesis_satisfied;

    if (!sealed) v.notes.push_back("family not sealed");
    if (sealed && !tight) v.notes.push_back("tightness not certified");
    if (!audit_ok) v.notes.push_back("well-definedness audit exceeded the exactness tolerance");
    if (!support_ok) v.notes.push_back("an extracted measure leaves the semialgebraic set");

    if (sealed && tight && audit_ok && support_ok && all_atomic)
        return finish(overall_verdict::representing_measure_constructed);
    if (sealed && tight && audit_ok && support_ok && split_ok) return finish(overall_verdict::conditions_certified);
    if (!split_ok && v.split) v.notes.push_back("generators left uncovered: " + v.split->uncovered.to_string());
    return finish(overall_verdict::inconclusive);
}

//------------------------------------------------------------------------------
// Rendering
//------------------------------------------------------------------------------

inline json to_json(const StageError& e) { return {{"stage", e.stage}, {"code", e.code}, {"message", e.message}}; }

inline json to_json(const IndexResult& r)
{
    json psd = json::array();
    for (const auto& c : r.psd_reports)
    {
        json j = to_json(c.psd);
        j["order"] = c.order;
        j["generator"] = c.generator;
        psd.push_back(std::move(j));
    }
    json flat = json::array();
    for (const auto& fr : r.flatness) flat.push_back(to_json(fr));
    json errs = json::array();
    for (const auto& e : r.errors) errs.push_back(to_json(e));
    json j = {{"index", to_json(r.index)},
              {"psd_reports", std::move(psd)},
              {"flatness", std::move(flat)},
              {"flat_orders", r.flat_orders},
              {"measure_source", r.measure_source},
              {"errors", std::move(errs)}};
    j["measure"] = r.measure ? to_json(*r.measure) : json(nullptr);
    j["support_ok"] = r.support_ok ? json(*r.support_ok) : json(nullptr);
    if (r.extraction)
        j["extraction"] = {{"order", r.extraction->order},
                           {"rank", r.extraction->rank},
                           {"moment_residual", r.extraction->moment_residual},
                           {"order_discrepancy", r.order_discrepancy}};
    return j;
}

inline json to_json(const PipelineVerdict& v)
{
    json per = json::array();
    for (const auto& r : v.per_index) per.push_back(to_json(r));
    json errs = json::array();
    for (const auto& e : v.errors) errs.push_back(to_json(e));
    json j = {{"command", to_string(v.cmd)},
              {"seed", v.seed},
              {"per_index", std::move(per)},
              {"overall", to_string(v.overall)},
              {"basis", v.basis},
              {"notes", v.notes},
              {"errors", std::move(errs)}};
    j["exactness"] = v.exactness ? to_json(*v.exactness) : json(nullptr);
    j["split"] = v.split ? to_json(*v.split) : json(nullptr);
    j["tightness"] = v.tightness ? to_json(*v.tightness) : json(nullptr);
    if (v.audit)
    {
        j["audit"] = to_json(*v.audit);
        j["audit"]["name"] = "well-definedness surrogate (random cylinder sets on comparable bases)";
    }
    else
        j["audit"] = nullptr;
    return j;
}

inline std::string render_report(const PipelineVerdict& v)
{
    std::ostringstream os;
    os << "command: " << to_string(v.cmd) << "  seed: " << v.seed << "\n";
    os << "overall: " << to_string(v.overall) << "\n";
    os << "basis: " << v.basis << "\n\n";
    for (const auto& r : v.per_index)
    {
        os << "index " << r.index.to_string() << "\n";
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& c : r.psd_reports) worst = std::min(worst, c.psd.min_eigenvalue);
        os << "  matrices checked: " << r.psd_reports.size();
        if (!r.psd_reports.empty()) os << ", smallest eigenvalue " << detail::format_double(worst);
        os << (r.psd_failed() ? "  NOT PSD" : "") << "\n";
        os << "  flat orders:";
        if (r.flat_orders.empty()) os << " none";
        for (unsigned n : r.flat_orders) os << " " << n;
        os << "\n  measure: " << r.measure_source;
        if (r.measure)
            if (const auto* a = std::get_if<AtomicMeasure>(&*r.measure)) os << " (" << a->size() << " atoms)";
        if (r.extraction) os << ", residual " << detail::format_double(r.extraction->moment_residual);
        if (r.support_ok) os << ", support " << (*r.support_ok ? "ok" : "VIOLATED");
        os << "\n";
        for (const auto& e : r.errors) os << "  [" << e.stage << "] " << e.code << ": " << e.message << "\n";
    }
    os << "\n";
    if (v.exactness)
        os << "exactness: " << (v.exactness->exact ? "exact" : "not exact") << ", max discrepancy "
           << detail::format_double(v.exactness->max_discrepancy) << " over " << v.exactness->pairs_checked.size()
           << " covering pairs\n";
    if (v.split)
        os << "split: archimedean " << v.split->archimedean_part.to_string() << ", carleman "
           << v.split->carleman_part.to_string() << ", uncovered " << v.split->uncovered.to_string() << "\n";
    if (v.tightness)
    {
        os << "tightness (Prokhorov): " << (v.tightness->certified ? "certified" : "failed") << " at epsilon "
           << detail::format_double(v.tightness->epsilon) << ", radii";
        for (const auto& [i, r] : v.tightness->radius_schedule) os << " x" << i << "=" << detail::format_double(r);
        os << "\n";
    }
    if (v.audit)
        os << "audit: " << v.audit->trials << " trials, max discrepancy "
           << detail::format_double(v.audit->max_discrepancy) << "\n";
    for (const auto& e : v.errors) os << "[" << e.stage << "] " << e.code << ": " << e.message << "\n";
    for (const auto& n : v.notes) os << "note: " << n << "\n";
    return os.str();
}

/// verdict.json, report.txt, family/ and (on request) matrices/*.csv.
inline void write_artifacts(const std::filesystem::path& out, const PipelineVerdict& v)
{
    std::filesystem::create_directories(out);
    detail::write_atomically(out / "verdict.json", to_json(v).dump(2) + "\n");
    detail::write_atomically(out / "report.txt", render_report(v));
    if (v.family) write_family_bundle(out / "family", *v.family);
    bool any = false;
    for (const auto& r : v.per_index) any = any || !r.matrices.empty();
    if (!any) return;
    std::filesystem::create_directories(out / "matrices");
    for (const auto& r : v.per_index)
        for (const auto& [name, m] : r.matrices)
        {
            std::ostringstream os;
            os.precision(17);
            write_csv(os, m);
            detail::write_atomically(out / "matrices" / (name + ".csv"), os.str());
        }
}

} // namespace momentlimit

#endif
