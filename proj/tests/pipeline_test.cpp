#include <filesystem>

#include <gtest/gtest.h>

#include "momentlimit/pipeline.hpp"
#include "oracles.hpp"

namespace
{

using namespace momentlimit;

json two_atom_job()
{
    return json::parse(R"({
      "functional": {"type": "atomic", "atoms": [
        {"point": {"1": -1.0, "2": 0.5}, "weight": 0.5},
        {"point": {"1": 1.0, "2": -0.5}, "weight": 0.5}]},
      "module": ["1 - x1^2", "1 - x2^2"],
      "index_list": [[1], [1, 2]],
      "degree_budget": 3,
      "audit_trials": 200
    })");
}

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("momentlimit_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

TEST(Io, AtomicMeasureRoundTrip)
{
    const AtomicMeasure mu({1, 2}, {{{{1, -1.0}, {2, 0.0}}, 0.5}, {{{1, 0.25}, {2, 3.0}}, 0.5}});
    const json j = to_json(mu);
    EXPECT_EQ(j.at("atoms").at(0).at("point").at("1"), -1.0);
    const auto back = atomic_measure_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.variables(), mu.variables());
    ASSERT_EQ(back.size(), 2u);
    for (const auto& m : monomials_up_to(mu.variables(), 4)) EXPECT_EQ(back.moment(m), mu.moment(m));
}

TEST(Io, FunctionalDescriptors)
{
    const auto g = functional_from_json(json::parse(R"({"type":"gaussian","variances":{"2":4.0},"default_variance":1.0})"));
    EXPECT_EQ(g.moment(MultiIndex::variable(2, 4)), 3.0 * 16.0);
    EXPECT_EQ(g.moment(MultiIndex::variable(9, 4)), oracle::gaussian_moment(4, 1.0));

    const auto u = functional_from_json(json::parse(R"({"type":"uniform_box","default_radius":1.0})"));
    EXPECT_DOUBLE_EQ(u.moment(MultiIndex::variable(1, 2)), 1.0 / 3.0);

    const auto p = functional_from_json(json::parse(
        R"({"type":"product","factors":{"1":{"law":"dirac","location":2.0}},"default":{"law":"uniform","radius":3.0}})"));
    EXPECT_EQ(p.moment(MultiIndex::variable(1, 3)), 8.0);
    EXPECT_DOUBLE_EQ(p.moment(MultiIndex::variable(2, 2)), 3.0);

    const auto t = functional_from_json(json::parse(R"({"type":"table","max_degree":2,"moments":[
        {"index":{},"value":1.0},{"index":{"1":2},"log_value":2.0}]})"));
    EXPECT_EQ(t.log_moment(MultiIndex::variable(1, 2)), 2.0);
    EXPECT_EQ(to_json(t).at("moments").size(), 2u);
}

TEST(Io, FunctionalDescriptorRoundTrip)
{
    for (const char* text : {R"({"type":"gaussian","variances":{"1":2.0}})",
                             R"({"type":"atomic","atoms":[{"point":{"3":1.5},"weight":1.0}]})",
                             R"({"type":"table","max_degree":2,"moments":[{"index":{},"value":1.0},{"index":{"1":1},"value":0.5}]})"})
    {
        const auto l = functional_from_json(json::parse(text));
        const auto again = functional_from_json(to_json(l));
        EXPECT_EQ(to_json(again), to_json(l)) << text;
    }
}

TEST(Io, BadDescriptorsAreParseErrors)
{
    for (const char* text : {R"({"type":"weibull"})", R"({"type":"gaussian","variances":{"x":1}})",
                             R"({"type":"gaussian","variances":{"0":1}})", R"({"type":"table","moments":[]})",
                             R"({"type":"atomic","atoms":[]})"})
    {
        try
        {
            functional_from_json(json::parse(text));
            FAIL() << text;
        }
        catch (const error& e)
        {
            EXPECT_EQ(e.code(), errc::parse_error) << text;
        }
    }
}

TEST(Io, ModuleDescriptor)
{
    const auto q = module_from_json(json::parse(R"({"generators":["1 - x1^2", "x2 + 3"]})"));
    ASSERT_EQ(q.generators.size(), 2u);
    EXPECT_TRUE(q.contains({{1, 0.5}, {2, -3.0}}, 0.0));
    EXPECT_FALSE(q.contains({{1, 1.5}, {2, 0.0}}, 0.0));
    EXPECT_EQ(module_from_json(to_json(q)).generators, q.generators);
}

TEST(Job, ClosesIndexListUnderUnion)
{
    auto j = two_atom_job();
    j["index_list"] = json::parse("[[1],[2]]");
    const auto job = job_from_json(j);
    EXPECT_EQ(job.index_list, (std::vector<VariableSet>{{1}, {2}, {1, 2}}));
}

TEST(Job, ValidatesFields)
{
    auto bad = [](const char* key, json value) {
        auto j = two_atom_job();
        j[key] = std::move(value);
        EXPECT_THROW(job_from_json(j), error) << key;
    };
    bad("degree_budget", 0);
    bad("epsilon", 1.5);
    bad("index_list", json::array());
    bad("tolerances", json{{"psd", -1.0}});
    bad("tolerances", json{{"made_up", 1.0}});
    bad("command", "fly");
    EXPECT_THROW(job_from_json(json::parse("[]")), error);
}

TEST(Run, TwoAtomsConstructed)
{
    const auto v = run(job_from_json(two_atom_job()));
    EXPECT_EQ(v.overall, overall_verdict::representing_measure_constructed);
    EXPECT_EQ(exit_code(v.overall), 0);
    for (const auto& r : v.per_index)
    {
        EXPECT_EQ(r.measure_source, "extracted");
        EXPECT_TRUE(r.support_ok.value_or(false));
        EXPECT_LE(r.extraction->moment_residual, 1e-6);
        EXPECT_EQ(r.flat_orders.front(), 2u);
    }
    ASSERT_TRUE(v.audit);
    EXPECT_LE(v.audit->max_discrepancy, 1e-8);
}

TEST(Run, CheckStopsAfterMatrices)
{
    RunOptions o;
    o.cmd = command::check;
    const auto v = run(job_from_json(two_atom_job()), o);
    EXPECT_EQ(v.overall, overall_verdict::inconclusive);
    EXPECT_EQ(exit_code(v.overall), 3);
    EXPECT_FALSE(v.family);
    EXPECT_FALSE(v.per_index[0].psd_reports.empty());
}

TEST(Run, NonPsdTable)
{
    const auto v = run(job_from_json(json::parse(R"({
      "functional": {"type":"table","max_degree":2,"moments":[
        {"index":{},"value":1.0},{"index":{"1":1},"value":2.0},{"index":{"1":2},"value":1.0}]},
      "index_list": [[1]], "degree_budget": 1})")));
    EXPECT_EQ(v.overall, overall_verdict::necessary_condition_failed);
    EXPECT_EQ(exit_code(v.overall), 2);
    EXPECT_NEAR(v.per_index[0].psd_reports[0].psd.min_eigenvalue, -1.0, 1e-12);
}

TEST(Run, AtomsOutsideTheSetFailLocalizingCheck)
{
    auto j = two_atom_job();
    j["functional"]["atoms"][0]["point"]["1"] = -2.0;
    const auto v = run(job_from_json(j));
    EXPECT_EQ(v.overall, overall_verdict::necessary_condition_failed);
    bool localizing_failed = false;
    for (const auto& c : v.per_index[0].psd_reports) localizing_failed |= c.generator != "1" && !c.psd.is_psd();
    EXPECT_TRUE(localizing_failed);
}

TEST(Run, GaussianConditionsCertified)
{
    const auto v = run(job_from_json(json::parse(R"({
      "functional": {"type":"gaussian","default_variance":1.0},
      "index_list": [[1],[1,2]], "degree_budget": 3, "epsilon": 0.1, "audit_trials": 100})")));
    EXPECT_EQ(v.overall, overall_verdict::conditions_certified);
    EXPECT_EQ(v.per_index[1].measure_source, "closed_form");
    EXPECT_TRUE(v.per_index[1].flat_orders.empty());
    EXPECT_EQ(v.split->carleman_part, (VariableSet{1, 2}));
    EXPECT_TRUE(v.tightness->certified);
}

TEST(Run, NeverFlatTableIsInconclusive)
{
    json moments = json::array();
    for (unsigned k = 0; k <= 6; ++k)
        moments.push_back({{"index", {{"1", k}}}, {"value", oracle::gaussian_moment(k, 1.0)}});
    moments[0]["index"] = json::object();
    const auto v = run(job_from_json(
        {{"functional", {{"type", "table"}, {"max_degree", 6}, {"moments", moments}}}, {"index_list", {{1}}}}));
    EXPECT_EQ(v.overall, overall_verdict::inconclusive);
    EXPECT_EQ(v.per_index[0].measure_source, "none");
    EXPECT_EQ(v.per_index[0].flatness.size(), 3u);
}

TEST(Run, ShortTableReportsStageError)
{
    const auto v = run(job_from_json(json::parse(R"({
      "functional": {"type":"table","max_degree":1,"moments":[{"index":{},"value":1.0}]},
      "index_list": [[1]]})")));
    EXPECT_EQ(v.overall, overall_verdict::inconclusive);
    ASSERT_FALSE(v.per_index[0].errors.empty());
    EXPECT_EQ(v.per_index[0].errors[0].stage, "matrices");
    EXPECT_EQ(v.per_index[0].errors[0].code, "degree-exceeded");
}

TEST(Run, ThreadCountDoesNotChangeOutput)
{
    auto j = two_atom_job();
    j["index_list"] = json::parse("[[1],[2],[1,2]]");
    const auto job = job_from_json(j);
    RunOptions one, four;
    four.threads = 4;
    EXPECT_EQ(to_json(run(job, one)).dump(), to_json(run(job, four)).dump());
}

TEST(Artifacts, BundleRoundTrip)
{
    const auto v = run(job_from_json(two_atom_job()));
    const auto dir = scratch("bundle");
    write_artifacts(dir, v);
    EXPECT_TRUE(std::filesystem::exists(dir / "verdict.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "report.txt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "family" / "1_2.json"));
    const auto fam = read_family_bundle(dir / "family");
    EXPECT_EQ(fam.index_list(), v.family->index_list());
    EXPECT_EQ(fam.certified_degree({1, 2}), 4u);
    const auto resealed = seal(fam, 1e-8);
    const auto& a = std::get<AtomicMeasure>(resealed.at({1, 2}));
    const auto& b = std::get<AtomicMeasure>(v.family->at({1, 2}));
    for (const auto& m : monomials_up_to({1, 2}, 4)) EXPECT_EQ(a.moment(m), b.moment(m));
    EXPECT_EQ(read_json_file(dir / "verdict.json").at("overall"), "RepresentingMeasureConstructed");
    std::filesystem::remove_all(dir);
}

TEST(Artifacts, ClosedFormBundleAndMatrices)
{
    RunOptions o;
    o.keep_matrices = true;
    const auto v = run(job_from_json(json::parse(R"({
      "functional": {"type":"gaussian","default_variance":1.0},
      "index_list": [[1],[1,2]], "degree_budget": 2})")),
                       o);
    const auto dir = scratch("closed");
    write_artifacts(dir, v);
    EXPECT_TRUE(std::filesystem::exists(dir / "matrices" / "1_M2.csv"));
    const auto fam = read_family_bundle(dir / "family");
    EXPECT_EQ(moment_of(fam.at({1, 2}), MultiIndex::variable(2, 4)), 3.0);
    std::filesystem::remove_all(dir);
}

} // namespace
