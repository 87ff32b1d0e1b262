#include "mcflab/scenario.hpp"

#include <doctest.h>

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace mcflab;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mcflab_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("catalog entries") {
    const auto& cat = family_catalog();
    REQUIRE(cat.size() >= 5);
    const std::set<std::string> scenarios{"flow", "commutation", "identity", "audit", "sweep"};
    for (const auto& f : cat) {
        CHECK(scenarios.count(f.acceptance) == 1);
        CHECK(f.schema.is_object());
    }
    for (const char* name :
         {"plane_circle", "geodesic_circle", "perturbed_clifford_torus", "heisenberg_cylinder", "sasaki_great_circle_lift"})
        CHECK_NOTHROW(family_info(name));
    const Json j = catalog_to_json();
    CHECK(Json::parse(j.dump()) == j);
    std::ostringstream os;
    print_catalog(os);
    CHECK(os.str().find("heisenberg_cylinder") != std::string::npos);
}

TEST_CASE("family parameters") {
    const Json p = resolve_family_params("plane_circle", Json{{"radius", 2.0}});
    CHECK(p["radius"].get<double>() == 2.0);
    CHECK(p["dim"].get<int>() == 2);
    CHECK_THROWS_AS(resolve_family_params("plane_circle", Json{{"radius", "x"}}), Error);
    CHECK_THROWS_AS(resolve_family_params("plane_circle", Json{{"radios", 1.0}}), Error);
    CHECK_THROWS_AS(resolve_family_params("no_such_family", Json::object()), Error);

    const auto circle = make_family("plane_circle", Json{{"radius", 2.0}}, 0.1);
    CHECK(circle.size() == samples_for(4 * std::numbers::pi, 0.1));
    const auto cyl = make_family("heisenberg_cylinder", Json::object(), 0.2);
    CHECK(cyl.space.kind == SpaceKind::Heisenberg);
    CHECK(cyl.fiber_columns.size() == static_cast<std::size_t>(samples_for(2 * std::numbers::pi, 0.2)));
    const auto torus = make_family("perturbed_clifford_torus", Json{{"amplitude", 0.05}}, 0.2);
    validate(torus);
    const auto sphere = make_family("equatorial_sphere", Json::object(), 0.2);
    CHECK(sphere.mesh_size() < 0.25);
    const auto lift = make_family("sasaki_great_circle_lift", Json::object(), 0.2);
    CHECK(lift.space.kind == SpaceKind::SasakiBundle);
    CHECK_THROWS_AS(make_family("geodesic_circle", Json{{"rho", 10.0}}, 0.1), Error);
    CHECK_THROWS_AS(family_base("hopf_torus", resolve_family_params("hopf_torus", Json::object()),
                                SubmersionModel::heisenberg_proj(1), 0.1),
                    Error);
}

TEST_CASE("policy and conditions") {
    const FlowPolicy p = policy_from_json(
        Json{{"horizon", 0.2}, {"remesh", false}, {"conditions", {{{"preset", "hopf_hypersurface"}, {"n", 3}, {"c", 1.0}}}}},
        0.07);
    CHECK(p.horizon == 0.2);
    CHECK(p.target_h == 0.07);
    CHECK_FALSE(p.remesh);
    REQUIRE(p.conditions.size() == 1);
    CHECK(p.conditions[0].b == 4.0);
    CHECK_THROWS_AS(policy_from_json(Json{{"horizon", "long"}}, 0.1), Error);
    CHECK_THROWS_AS(policy_from_json(Json{{"safety", 2.0}}, 0.1), Error);
    CHECK_THROWS_AS(condition_from_json(Json{{"preset", "nope"}}), Error);
    const auto c = condition_from_json(Json{{"name", "mine"}, {"a", 0.5}, {"b", 1.0}});
    CHECK(condition_to_json(c) == Json{{"name", "mine"}, {"a", 0.5}, {"b", 1.0}});
    CHECK(policy_to_json(p)["conditions"].size() == 1);
}

TEST_CASE("config errors are line anchored") {
    const std::string bad = "{\n  \"scenario\": \"flow\",\n  \"generator\": {\"family\": 3,}\n}\n";
    try {
        parse_config(bad, "cfg");
        FAIL("expected CONFIG_ERROR");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    const std::string text = "{\n\"scenario\": \"flow\",\n\"generator\": {\"family\": \"plane_circle\"},\n\"policy\": {\n  \"horizn\": 1}\n}";
    CHECK(locate_key(text, {"policy", "horizn"}) == "line 5");
    const auto out = run_scenario(parse_config(text), {scratch("anchor")}, text);
    CHECK(out.exit_code == kExitConfig);
    CHECK(out.message.find("line 5") != std::string::npos);

    CHECK(run_scenario(Json{{"scenario", "dance"}}).exit_code == kExitConfig);
    CHECK(run_scenario(Json::array()).exit_code == kExitConfig);
    CHECK(run_scenario_file("/nonexistent/config.json").exit_code == kExitConfig);
    const Json wrong_space{{"scenario", "flow"},
                           {"generator", {{"family", "plane_circle"}}},
                           {"space", {{"kind", "ROUND_SPHERE"}, {"dim", 2}}}};
    CHECK(run_scenario(wrong_space, {scratch("space")}).exit_code == kExitConfig);
}

TEST_CASE("audit scenario") {
    const auto dir = scratch("audit");
    const auto out = run_scenario(Json{{"scenario", "audit"}, {"samples", 20}}, {dir});
    CHECK(out.exit_code == kExitPass);
    REQUIRE(out.verdicts.size() == 3);
    const Json written = Json::parse(slurp(dir / "verdict.json"));
    CHECK(written.size() == 3);
    CHECK(run_audit(Json{{"kind", "HOPF"}}, 10, 1).exit_code == kExitConfig);
}

TEST_CASE("flow scenario output is reproducible") {
    const Json config{{"scenario", "flow"},
                      {"seed", 3},
                      {"generator", {{"family", "plane_circle"}, {"h", 0.1}, {"params", {{"radius", 0.5}}}}},
                      {"policy", {{"horizon", 1.0}, {"sample_interval", 0.01}}},
                      {"expect", {{"outcome", "SHRINKS_TO_POINT"}, {"t_singular", 0.125}, {"rel_tol", 0.05}}}};
    const auto dir_a = scratch("flow_a");
    const auto dir_b = scratch("flow_b");
    const auto a = run_scenario(config, {dir_a});
    const auto b = run_scenario(config, {dir_b});
    CHECK(a.exit_code == kExitPass);
    REQUIRE(b.exit_code == kExitPass);
    const std::string trace = slurp(dir_a / "trace.csv");
    CHECK_FALSE(trace.empty());
    CHECK(trace == slurp(dir_b / "trace.csv"));
    CHECK(std::filesystem::exists(dir_a / "final.csv"));
    const Json fate = Json::parse(slurp(dir_b / "fate.json"));
    CHECK(fate["outcome"] == "SHRINKS_TO_POINT");
    CHECK(fate["thresholds"]["heuristic"].get<bool>());

    Json wrong = config;
    wrong["expect"]["outcome"] = "CONVERGES_MINIMAL";
    CHECK(run_scenario(wrong, {scratch("flow_c")}).exit_code == kExitFail);
}

TEST_CASE("sweep does not depend on the job count") {
    const Json config{{"scenario", "sweep"},
                      {"generator", {{"family", "plane_circle"}, {"h", 0.1}}},
                      {"sweep", {{"param", "radius"}, {"values", {0.3, 0.4, 0.5}}}},
                      {"policy", {{"horizon", 1.0}, {"sample_interval", 0.02}}}};
    const auto one = scratch("sweep1");
    const auto two = scratch("sweep2");
    REQUIRE(run_scenario(config, {one, 1}).exit_code == kExitPass);
    REQUIRE(run_scenario(config, {two, 3}).exit_code == kExitPass);
    CHECK(slurp(one / "sweep.csv") == slurp(two / "sweep.csv"));
    CHECK(slurp(one / "trace_2.csv") == slurp(two / "trace_2.csv"));
    Json bad = config;
    bad["sweep"]["param"] = "colour";
    CHECK(run_scenario(bad, {scratch("sweep3")}).exit_code == kExitConfig);
}

TEST_CASE("identity scenario") {
    const Json config{{"scenario", "identity"},
                      {"generator", {{"family", "heisenberg_cylinder"}, {"h", 0.2}}},
                      {"policy", {{"tol", 0.05}}}};
    const auto out = run_scenario(config, {scratch("identity")});
    REQUIRE(out.verdicts.size() == 1);
    CHECK(out.exit_code == (out.verdicts[0].pass ? kExitPass : kExitFail));
    Json not_lift = config;
    not_lift["generator"]["family"] = "plane_circle";
    CHECK(run_scenario(not_lift, {scratch("identity2")}).exit_code == kExitConfig);
}

TEST_CASE("parallel_for") {
    std::vector<int> hits(20, 0);
    parallel_for(20, 4, [&](int i) { hits[i] += i; });
    for (int i = 0; i < 20; ++i) CHECK(hits[i] == i);
    CHECK_THROWS_AS(parallel_for(5, 2, [](int i) {
                        if (i == 3) throw Error(ErrorCode::InvalidArgument, "boom");
                    }),
                    Error);
}
