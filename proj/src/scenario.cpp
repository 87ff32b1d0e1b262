#include "mcflab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace mcflab {

namespace {

constexpr double kPi = std::numbers::pi;

// Config problem at a key path; converted to a line-anchored CONFIG_ERROR.
struct ConfigIssue {
    std::vector<std::string> path;
    std::string message;
};

[[noreturn]] void issue(std::vector<std::string> path, std::string message) {
    throw ConfigIssue{std::move(path), std::move(message)};
}

Json param(const char* type, Json fallback, const char* doc) {
    return Json{{"type", type}, {"default", std::move(fallback)}, {"doc", doc}};
}

std::vector<FamilyInfo> build_catalog() {
    std::vector<FamilyInfo> c;
    c.push_back({"plane_circle", "round circle in the Euclidean plane; shrinks to a point at T = r^2/2", "flow",
                 Json{{"radius", param("number", 1.0, "circle radius")},
                      {"dim", param("integer", 2, "ambient Euclidean dimension")}},
                 false});
    c.push_back({"geodesic_circle", "circle at geodesic radius rho around the north pole of a 2-sphere", "flow",
                 Json{{"rho", param("number", 1.0, "geodesic radius")},
                      {"c", param("number", 1.0, "curvature parameter of the sphere")},
                      {"space", param("string", "ROUND_SPHERE", "ROUND_SPHERE or FS_SPHERE")}},
                 false});
    c.push_back({"perturbed_clifford_torus", "torus (r1 e^ia, r2 e^ib) in S^3(c) with a radial cos(a)cos(b) bump",
                 "flow",
                 Json{{"c", param("number", 1.0, "sphere curvature")},
                      {"r1", param("number", -1.0, "first radius; negative selects the minimal torus")},
                      {"amplitude", param("number", 0.0, "bump amplitude")}},
                 false});
    c.push_back({"equatorial_sphere", "great 2-sphere x4 = 0 in S^3(c), subdivided icosahedron", "flow",
                 Json{{"c", param("number", 1.0, "sphere curvature")}}, false});
    c.push_back({"heisenberg_cylinder", "lift of a plane circle through the Heisenberg projection", "commutation",
                 Json{{"radius", param("number", 1.0, "base circle radius")},
                      {"n", param("integer", 1, "complex dimension of the Heisenberg group")}},
                 true});
    c.push_back({"hopf_torus", "lift of a circle at polar angle alpha on the base of the Hopf fibration",
                 "commutation",
                 Json{{"alpha", param("number", kPi / 3, "polar angle of the base circle")},
                      {"c", param("number", 1.0, "curvature of the total sphere")},
                      {"lambda", param("number", 1.0, "vertical scaling of the canonical variation")}},
                 true});
    c.push_back({"sasaki_great_circle_lift", "lift of a great circle of S^2(c) into the sphere bundle of radius r",
                 "identity",
                 Json{{"r", param("number", 1.0, "bundle radius")}, {"c", param("number", 1.0, "base curvature")}},
                 true});
    return c;
}

double num(const Json& p, const char* key) { return p.at(key).get<double>(); }

int count_for(double length, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::ConfigError, "h must be positive");
    return samples_for(length, h);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::vector<std::string>& where) {
    if (!j.is_object()) issue(where, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) {
            auto path = where;
            path.push_back(key);
            issue(path, "unknown key '" + key + "'");
        }
}

template <class T>
T field(const Json& j, const std::vector<std::string>& where, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    auto path = where;
    path.push_back(key);
    const Json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) issue(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) issue(path, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) issue(path, "expected a number");
    } else {
        if (!v.is_string()) issue(path, "expected a string");
    }
    return v.get<T>();
}

std::string bare(const Error& e) {
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    const std::string w = e.what();
    return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

// Re-anchors library CONFIG_ERRORs (and JSON type errors) at a config section.
template <class F>
auto within(const std::vector<std::string>& where, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConfigError && e.code() != ErrorCode::InvalidArgument) throw;
        issue(where, bare(e));
    } catch (const nlohmann::json::exception& e) {
        issue(where, e.what());
    }
}

FlowPolicy read_policy(const Json& j, double default_h);

void write_file(const std::filesystem::path& path, const std::string& content, ScenarioOutcome& out) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    os << content;
    out.artifacts.push_back(path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// --- parsed config --------------------------------------------------------------

struct Generator {
    std::string family;
    Json params;
    double h = 0.05;
    std::optional<SubmersionModel> sub;
};

Generator read_generator(const Json& config, bool need_lift) {
    const std::vector<std::string> where{"generator"};
    if (!config.contains("generator")) issue({}, "missing 'generator'");
    const Json& g = config.at("generator");
    check_keys(g, {"family", "params", "h"}, where);
    Generator gen;
    gen.family = field<std::string>(g, where, "family", "");
    if (gen.family.empty()) issue(where, "generator needs a 'family'");
    gen.h = field<double>(g, where, "h", 0.05);
    if (!(gen.h > 0.0)) issue({"generator", "h"}, "h must be positive");
    const FamilyInfo& info = within({"generator", "family"}, [&]() -> const FamilyInfo& { return family_info(gen.family); });
    const Json raw = g.contains("params") ? g.at("params") : Json::object();
    gen.params = within({"generator", "params"}, [&] { return resolve_family_params(gen.family, raw); });
    if (need_lift && !info.lifted) issue({"generator", "family"}, "family '" + gen.family + "' is not a lift");
    if (config.contains("submersion")) {
        if (!info.lifted) issue({"submersion"}, "family '" + gen.family + "' is not a lift");
        gen.sub = within({"submersion"}, [&] { return submersion_from_json(config.at("submersion")); });
    } else if (info.lifted) {
        gen.sub = within({"generator", "params"}, [&] { return family_submersion(gen.family, gen.params); });
    }
    return gen;
}

DiscreteImmersion build(const Generator& gen, double h) {
    return within({"generator"}, [&] { return make_family(gen.family, gen.params, h, gen.sub ? &*gen.sub : nullptr); });
}

void check_space(const Json& config, const DiscreteImmersion& imm) {
    if (!config.contains("space")) return;
    const AmbientSpace s = within({"space"}, [&] { return space_from_json(config.at("space")); });
    if (space_to_json(s) != space_to_json(imm.space))
        issue({"space"}, "space does not match the generator (" + space_to_json(imm.space).dump() + ")");
}

std::filesystem::path output_dir(const Json& config, const RunOptions& opt) {
    if (!opt.out_dir.empty()) return opt.out_dir;
    return field<std::string>(config, {}, "output", "out");
}

void finish_verdicts(ScenarioOutcome& out, const std::filesystem::path& dir) {
    Json all = Json::array();
    bool pass = true;
    for (const Verdict& v : out.verdicts) {
        all.push_back(verdict_to_json(v));
        pass = pass && v.pass;
    }
    write_file(dir / "verdict.json", dump(out.verdicts.size() == 1 ? all[0] : all), out);
    out.exit_code = pass ? kExitPass : kExitFail;
    std::string names;
    for (const Verdict& v : out.verdicts) names += (names.empty() ? "" : ", ") + v.test + (v.pass ? " PASS" : " FAIL");
    out.message = names;
}

void write_final_mesh(const DiscreteImmersion& imm, const std::filesystem::path& dir, ScenarioOutcome& out) {
    std::ostringstream os;
    if (imm.kind == ImmersionKind::Curve) {
        write_curve_csv(os, imm);
        write_file(dir / "final.csv", os.str(), out);
    } else {
        write_off(os, imm);
        write_file(dir / "final.off", os.str(), out);
    }
}

// Optional {"outcome", "t_singular", "rel_tol"} check on a flow.
std::optional<Verdict> flow_expectation(const Json& config, const FateReport& fate) {
    if (!config.contains("expect")) return std::nullopt;
    const std::vector<std::string> where{"expect"};
    const Json& e = config.at("expect");
    check_keys(e, {"outcome", "t_singular", "rel_tol"}, where);
    Verdict v;
    v.test = "flow_expectation";
    v.params = e;
    v.pass = true;
    v.residuals["outcome"] = std::string(to_string(fate.outcome));
    if (e.contains("outcome")) v.pass = v.pass && field<std::string>(e, where, "outcome", "") == to_string(fate.outcome);
    if (e.contains("t_singular")) {
        const double target = field<double>(e, where, "t_singular", 0.0);
        const double tol = field<double>(e, where, "rel_tol", 0.02);
        if (fate.t_singular) {
            const double rel = std::abs(*fate.t_singular - target) / std::abs(target);
            v.residuals["t_singular"] = *fate.t_singular;
            v.residuals["relative_error"] = rel;
            v.pass = v.pass && rel <= tol;
        } else {
            v.residuals["t_singular"] = nullptr;
            v.pass = false;
        }
    }
    return v;
}

FlowPolicy read_policy(const Json& j, double default_h) {
    const std::vector<std::string> where{"policy"};
    FlowPolicy p;
    p.target_h = default_h;
    check_keys(j,
               {"horizon", "sample_interval", "target_h", "safety", "singular_A2", "singular_diameter_factor",
                "minimal_H2", "remesh", "max_steps", "conditions", "track_submersion"},
               where);
    p.horizon = field<double>(j, where, "horizon", p.horizon);
    p.sample_interval = field<double>(j, where, "sample_interval", p.sample_interval);
    p.target_h = field<double>(j, where, "target_h", p.target_h);
    p.safety = field<double>(j, where, "safety", p.safety);
    p.singular_A2 = field<double>(j, where, "singular_A2", p.singular_A2);
    p.singular_diameter_factor = field<double>(j, where, "singular_diameter_factor", p.singular_diameter_factor);
    p.minimal_H2 = field<double>(j, where, "minimal_H2", p.minimal_H2);
    p.remesh = field<bool>(j, where, "remesh", p.remesh);
    p.max_steps = field<long>(j, where, "max_steps", p.max_steps);
    field<bool>(j, where, "track_submersion", true);
    if (j.contains("conditions")) {
        if (!j.at("conditions").is_array()) issue({"policy", "conditions"}, "expected an array");
        for (const Json& c : j.at("conditions"))
            p.conditions.push_back(within({"policy", "conditions"}, [&] { return condition_from_json(c); }));
    }
    if (!(p.horizon > 0.0) || !(p.sample_interval > 0.0) || !(p.target_h > 0.0))
        issue(where, "horizon, sample_interval and target_h must be positive");
    if (!(p.safety > 0.0 && p.safety <= 1.0)) issue({"policy", "safety"}, "safety must lie in (0, 1]");
    return p;
}

FlowPolicy flow_policy(const Json& config, const Generator& gen) {
    const Json p = config.contains("policy") ? config.at("policy") : Json::object();
    FlowPolicy policy = read_policy(p, gen.h);
    if (gen.sub && field<bool>(p, {"policy"}, "track_submersion", true)) policy.submersion = gen.sub;
    return policy;
}

ScenarioOutcome run_flow_scenario(const Json& config, const RunOptions& opt) {
    check_keys(config, {"scenario", "seed", "generator", "space", "submersion", "policy", "output", "expect"}, {});
    const Generator gen = read_generator(config, false);
    const FlowPolicy policy = flow_policy(config, gen);
    const DiscreteImmersion imm = build(gen, gen.h);
    check_space(config, imm);
    const auto dir = output_dir(config, opt);

    ScenarioOutcome out;
    const FlowResult result = run_flow(imm, policy);
    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    write_file(dir / "trace.csv", trace.str(), out);
    write_file(dir / "fate.json", dump(fate_to_json(result.fate)), out);
    write_final_mesh(result.final_state.imm, dir, out);
    out.message = "flow: " + std::string(to_string(result.fate.outcome)) + " at t=" + fmt(result.fate.final_t);
    if (result.fate.t_singular) out.message += ", T=" + fmt(*result.fate.t_singular);
    if (auto v = flow_expectation(config, result.fate)) {
        out.verdicts.push_back(*v);
        const std::string msg = out.message;
        finish_verdicts(out, dir);
        out.message = msg + "; " + out.message;
    }
    return out;
}

ScenarioOutcome run_commutation_scenario(const Json& config, const RunOptions& opt) {
    check_keys(config, {"scenario", "seed", "generator", "submersion", "policy", "output"}, {});
    const Generator gen = read_generator(config, true);
    const std::vector<std::string> where{"policy"};
    const Json p = config.contains("policy") ? config.at("policy") : Json::object();
    check_keys(p, {"horizon", "sample_interval", "safety", "refine", "min_ratio", "abs_tol", "singular_diameter_factor"},
               where);
    CommutationOptions c;
    c.h = gen.h;
    c.horizon = field<double>(p, where, "horizon", c.horizon);
    c.sample_interval = field<double>(p, where, "sample_interval", c.sample_interval);
    c.safety = field<double>(p, where, "safety", c.safety);
    c.refine = field<bool>(p, where, "refine", c.refine);
    c.min_ratio = field<double>(p, where, "min_ratio", c.min_ratio);
    c.abs_tol = field<double>(p, where, "abs_tol", c.abs_tol);
    c.singular_diameter_factor = field<double>(p, where, "singular_diameter_factor", c.singular_diameter_factor);
    const auto dir = output_dir(config, opt);

    const SubmersionModel sub = *gen.sub;
    const auto result = commutation_test(
        sub, [&](double h) { return within({"generator"}, [&] { return family_base(gen.family, gen.params, sub, h); }); },
        c);
    ScenarioOutcome out;
    std::ostringstream csv;
    write_commutation_csv(csv, result);
    write_file(dir / "commutation.csv", csv.str(), out);
    Json fates = Json::array();
    for (const auto& level : result.levels)
        fates.push_back({{"h", level.h}, {"total", fate_to_json(level.total_fate)}, {"base", fate_to_json(level.base_fate)}});
    write_file(dir / "fates.json", dump(fates), out);
    out.verdicts.push_back(result.verdict);
    finish_verdicts(out, dir);
    return out;
}

ScenarioOutcome run_identity_scenario(const Json& config, const RunOptions& opt) {
    check_keys(config, {"scenario", "seed", "generator", "submersion", "policy", "output"}, {});
    const Generator gen = read_generator(config, true);
    const std::vector<std::string> where{"policy"};
    const Json p = config.contains("policy") ? config.at("policy") : Json::object();
    check_keys(p, {"tol", "mean_curvature"}, where);
    const double tol = field<double>(p, where, "tol", 0.05);
    const bool mc = field<bool>(p, where, "mean_curvature", false);
    const auto dir = output_dir(config, opt);

    const SubmersionModel sub = *gen.sub;
    const BaseFactory make_base = [&](double h) {
        return within({"generator"}, [&] { return family_base(gen.family, gen.params, sub, h); });
    };
    ScenarioOutcome out;
    out.verdicts.push_back(lift_norm_identity_test(sub, make_base, gen.h, tol));
    if (mc) out.verdicts.push_back(mean_curvature_relation_test(sub, make_base, gen.h));
    finish_verdicts(out, dir);
    return out;
}

std::vector<SubmersionModel> standard_submersions() {
    return {SubmersionModel::hopf(1.0), SubmersionModel::heisenberg_proj(1), SubmersionModel::sasaki_proj(1.0, 1.0)};
}

ScenarioOutcome run_audit_scenario(const Json& config, const RunOptions& opt) {
    check_keys(config, {"scenario", "seed", "submersions", "samples", "output"}, {});
    const unsigned seed = field<unsigned>(config, {}, "seed", 17u);
    const int samples = field<int>(config, {}, "samples", 100);
    Json subs = Json::array();
    if (config.contains("submersions")) {
        subs = config.at("submersions");
    } else {
        for (const auto& s : standard_submersions()) subs.push_back(submersion_to_json(s));
    }
    return run_audit(subs, samples, seed, output_dir(config, opt));
}

ScenarioOutcome run_sweep_scenario(const Json& config, const RunOptions& opt) {
    check_keys(config, {"scenario", "seed", "generator", "space", "submersion", "policy", "output", "sweep"}, {});
    const Generator gen = read_generator(config, false);
    const std::vector<std::string> where{"sweep"};
    if (!config.contains("sweep")) issue({}, "missing 'sweep'");
    const Json& s = config.at("sweep");
    check_keys(s, {"param", "values"}, where);
    const std::string param = field<std::string>(s, where, "param", "");
    if (param != "h" && !gen.params.contains(param))
        issue({"sweep", "param"}, "family '" + gen.family + "' has no parameter '" + param + "'");
    if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
        issue({"sweep", "values"}, "expected a non-empty array");
    std::vector<Json> values(s.at("values").begin(), s.at("values").end());
    const auto dir = output_dir(config, opt);

    // Build every member up front so config errors surface before any flow runs.
    std::vector<Generator> members;
    std::vector<FlowPolicy> policies;
    std::vector<DiscreteImmersion> initial;
    for (std::size_t i = 0; i < values.size(); ++i) {
        Generator g = gen;
        if (param == "h") {
            if (!values[i].is_number()) issue({"sweep", "values"}, "h values must be numbers");
            g.h = values[i].get<double>();
        } else {
            Json raw = g.params;
            raw[param] = values[i];
            g.params = within({"sweep", "values"}, [&] { return resolve_family_params(g.family, raw); });
            if (g.sub && !config.contains("submersion")) g.sub = family_submersion(g.family, g.params);
        }
        policies.push_back(flow_policy(config, g));
        initial.push_back(build(g, g.h));
        check_space(config, initial.back());
        members.push_back(std::move(g));
    }

    std::vector<FlowResult> results(values.size());
    parallel_for(static_cast<int>(values.size()), opt.jobs,
                 [&](int i) { results[i] = run_flow(initial[i], policies[i]); });

    ScenarioOutcome out;
    std::ostringstream csv;
    csv << "index," << param << ",outcome,t_singular,final_t,steps,final_max_A2,final_diameter\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const FateReport& f = results[i].fate;
        csv << i << ',' << (values[i].is_number() ? fmt(values[i].get<double>()) : values[i].dump()) << ','
            << to_string(f.outcome) << ',' << (f.t_singular ? fmt(*f.t_singular) : std::string("nan")) << ','
            << fmt(f.final_t) << ',' << f.steps << ',' << fmt(f.final_max_A2) << ',' << fmt(f.final_diameter) << '\n';
        std::ostringstream trace;
        write_trace_csv(trace, results[i].trace);
        write_file(dir / ("trace_" + std::to_string(i) + ".csv"), trace.str(), out);
    }
    write_file(dir / "sweep.csv", csv.str(), out);
    out.message = "sweep: " + std::to_string(values.size()) + " flows";
    return out;
}

std::string anchored(const ConfigIssue& c, const std::string& text) {
    std::string path;
    for (const auto& p : c.path) path += "/" + p;
    std::string where = text.empty() ? "" : locate_key(text, c.path);
    if (where.empty() && !text.empty()) where = "line 1";
    std::string msg = where;
    if (!path.empty()) msg += (msg.empty() ? "" : ": ") + path;
    return msg + (msg.empty() ? "" : ": ") + c.message;
}

}  // namespace

// --- catalog ------------------------------------------------------------------------

const std::vector<FamilyInfo>& family_catalog() {
    static const std::vector<FamilyInfo> catalog = build_catalog();
    return catalog;
}

const FamilyInfo& family_info(const std::string& name) {
    for (const auto& f : family_catalog())
        if (f.name == name) return f;
    throw Error(ErrorCode::ConfigError, "unknown family '" + name + "'");
}

Json catalog_to_json() {
    Json a = Json::array();
    for (const auto& f : family_catalog())
        a.push_back({{"name", f.name},
                     {"summary", f.summary},
                     {"acceptance", f.acceptance},
                     {"lifted", f.lifted},
                     {"params", f.schema}});
    return a;
}

void print_catalog(std::ostream& os) {
    for (const auto& f : family_catalog()) {
        os << f.name << "  [" << f.acceptance << "]\n  " << f.summary << '\n';
        for (const auto& [key, s] : f.schema.items())
            os << "    " << key << " (" << s["type"].get<std::string>() << ", default " << s["default"].dump()
               << "): " << s["doc"].get<std::string>() << '\n';
    }
    os << "scenarios: flow, commutation, identity, audit, sweep\n";
}

Json resolve_family_params(const std::string& name, const Json& params) {
    const FamilyInfo& info = family_info(name);
    if (!params.is_object()) throw Error(ErrorCode::ConfigError, "params must be an object");
    Json out = Json::object();
    for (const auto& [key, s] : info.schema.items()) out[key] = s["default"];
    for (const auto& [key, v] : params.items()) {
        if (!info.schema.contains(key))
            throw Error(ErrorCode::ConfigError, "family '" + name + "' has no parameter '" + key + "'");
        const std::string type = info.schema[key]["type"].get<std::string>();
        const bool ok = (type == "number" && v.is_number()) || (type == "integer" && v.is_number_integer()) ||
                        (type == "string" && v.is_string());
        if (!ok) throw Error(ErrorCode::ConfigError, "parameter '" + key + "' must be of type " + type);
        out[key] = v;
    }
    return out;
}

SubmersionModel family_submersion(const std::string& name, const Json& params) {
    if (name == "heisenberg_cylinder") return SubmersionModel::heisenberg_proj(params.at("n").get<int>());
    if (name == "hopf_torus") {
        const double lambda = num(params, "lambda");
        return lambda == 1.0 ? SubmersionModel::hopf(num(params, "c"))
                             : SubmersionModel::hopf_berger(lambda, num(params, "c"));
    }
    if (name == "sasaki_great_circle_lift") return SubmersionModel::sasaki_proj(num(params, "r"), num(params, "c"));
    throw Error(ErrorCode::ConfigError, "family '" + name + "' is not a lift");
}

DiscreteImmersion family_base(const std::string& name, const Json& params, const SubmersionModel& sub, double h) {
    auto require = [&](SubmersionKind kind) {
        if (sub.kind != kind)
            throw Error(ErrorCode::ConfigError,
                        "family '" + name + "' needs a " + std::string(to_string(kind)) + " submersion");
    };
    if (name == "heisenberg_cylinder") {
        require(SubmersionKind::HeisenbergProj);
        const double r = num(params, "radius");
        if (!(r > 0.0)) throw Error(ErrorCode::ConfigError, "radius must be positive");
        return plane_circle(r, count_for(2 * kPi * r, h), sub.base.embed_dim);
    }
    if (name == "hopf_torus") {
        require(SubmersionKind::Hopf);
        const double alpha = num(params, "alpha");
        if (!(alpha > 0.0 && alpha < kPi)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, pi)");
        const double R = sub.base.sphere_radius();
        return geodesic_circle(sub.base, alpha * R, count_for(2 * kPi * R * std::sin(alpha), h));
    }
    if (name == "sasaki_great_circle_lift") {
        require(SubmersionKind::SasakiProj);
        return great_circle(sub.base, count_for(2 * kPi * sub.base.sphere_radius(), h));
    }
    throw Error(ErrorCode::ConfigError, "family '" + name + "' is not a lift");
}

DiscreteImmersion make_family(const std::string& name, const Json& raw, double h, const SubmersionModel* sub) {
    const Json params = resolve_family_params(name, raw);
    if (!(h > 0.0)) throw Error(ErrorCode::ConfigError, "h must be positive");
    if (family_info(name).lifted) {
        const SubmersionModel s = sub ? *sub : family_submersion(name, params);
        return lift_at_resolution(s, family_base(name, params, s, h), h);
    }
    if (name == "plane_circle") {
        const double r = num(params, "radius");
        const int dim = params.at("dim").get<int>();
        if (!(r > 0.0) || dim < 2) throw Error(ErrorCode::ConfigError, "plane_circle needs radius > 0 and dim >= 2");
        return plane_circle(r, count_for(2 * kPi * r, h), dim);
    }
    if (name == "geodesic_circle") {
        const std::string kind = params.at("space").get<std::string>();
        const double c = num(params, "c");
        AmbientSpace sphere;
        if (kind == "ROUND_SPHERE")
            sphere = AmbientSpace::round_sphere(2, c);
        else if (kind == "FS_SPHERE")
            sphere = AmbientSpace::fs_sphere(c);
        else
            throw Error(ErrorCode::ConfigError, "space must be ROUND_SPHERE or FS_SPHERE");
        const double R = sphere.sphere_radius();
        const double rho = num(params, "rho");
        if (!(rho > 0.0 && rho < kPi * R)) throw Error(ErrorCode::ConfigError, "rho must lie in (0, pi R)");
        return geodesic_circle(sphere, rho, count_for(2 * kPi * R * std::sin(rho / R), h));
    }
    if (name == "perturbed_clifford_torus") {
        const double c = num(params, "c");
        if (!(c > 0.0)) throw Error(ErrorCode::ConfigError, "c must be positive");
        const double R = 1.0 / std::sqrt(c);
        double r1 = num(params, "r1");
        if (r1 < 0.0) r1 = R / std::sqrt(2.0);
        if (!(r1 > 0.0 && r1 < R)) throw Error(ErrorCode::ConfigError, "r1 must lie in (0, 1/sqrt(c))");
        const double r2 = std::sqrt(R * R - r1 * r1);
        return clifford_torus(c, count_for(2 * kPi * r1, h), count_for(2 * kPi * r2, h), r1, num(params, "amplitude"));
    }
    if (name == "equatorial_sphere") {
        const double c = num(params, "c");
        if (!(c > 0.0)) throw Error(ErrorCode::ConfigError, "c must be positive");
        // Icosahedron edge is 1.0515 R; each subdivision halves it.
        double edge = 1.0515 / std::sqrt(c);
        int levels = 0;
        while (edge > h && levels < 7) {
            edge *= 0.5;
            ++levels;
        }
        return equatorial_sphere(c, levels);
    }
    throw Error(ErrorCode::ConfigError, "unknown family '" + name + "'");
}

// --- policy / conditions / fate ------------------------------------------------------

PinchingCondition condition_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "condition must be an object");
    if (!j.contains("preset")) {
        if (!j.contains("a") || !j.contains("b"))
            throw Error(ErrorCode::ConfigError, "condition needs 'preset' or 'a' and 'b'");
        return {j.value("name", std::string("custom")), j.at("a").get<double>(), j.at("b").get<double>()};
    }
    const std::string p = j.at("preset").get<std::string>();
    auto i = [&](const char* k) {
        if (!j.contains(k)) throw Error(ErrorCode::ConfigError, "preset '" + p + "' needs '" + k + "'");
        return j.at(k).get<int>();
    };
    auto d = [&](const char* k) {
        if (!j.contains(k)) throw Error(ErrorCode::ConfigError, "preset '" + p + "' needs '" + k + "'");
        return j.at(k).get<double>();
    };
    if (p == "hopf_hypersurface") return pinching::hopf_hypersurface(i("n"), d("c"));
    if (p == "hopf_variation") return pinching::hopf_variation(i("n"), d("lambda"));
    if (p == "quaternionic_hypersurface") return pinching::quaternionic_hypersurface(i("n"), d("c"));
    if (p == "quaternionic_variation") return pinching::quaternionic_variation(i("n"), d("lambda"));
    if (p == "quaternionic_nonexistence") return pinching::quaternionic_nonexistence(i("n"), d("c"));
    if (p == "high_codimension") return pinching::high_codimension(i("m"), i("k"));
    if (p == "cp_hypersurface") return pinching::cp_hypersurface(i("n"));
    if (p == "heisenberg_cylinder") return pinching::heisenberg_cylinder(i("m"));
    if (p == "sasaki_bundle") return pinching::sasaki_bundle(i("n"), i("k"), d("c"));
    throw Error(ErrorCode::ConfigError, "unknown pinching preset '" + p + "'");
}

Json condition_to_json(const PinchingCondition& c) { return {{"name", c.name}, {"a", c.a}, {"b", c.b}}; }

FlowPolicy policy_from_json(const Json& j, double default_h) {
    try {
        return read_policy(j, default_h);
    } catch (const ConfigIssue& c) {
        std::string path;
        for (const auto& s : c.path) path += "/" + s;
        throw Error(ErrorCode::ConfigError, path + ": " + c.message);
    }
}

Json policy_to_json(const FlowPolicy& p) {
    Json conditions = Json::array();
    for (const auto& c : p.conditions) conditions.push_back(condition_to_json(c));
    Json j{{"horizon", p.horizon},
           {"sample_interval", p.sample_interval},
           {"target_h", p.target_h},
           {"safety", p.safety},
           {"singular_A2", p.singular_A2},
           {"singular_diameter_factor", p.singular_diameter_factor},
           {"minimal_H2", p.minimal_H2},
           {"remesh", p.remesh},
           {"max_steps", p.max_steps},
           {"conditions", conditions}};
    j["submersion"] = p.submersion ? submersion_to_json(*p.submersion) : Json(nullptr);
    return j;
}

Json fate_to_json(const FateReport& f) {
    Json j;
    j["outcome"] = std::string(to_string(f.outcome));
    j["t_singular"] = f.t_singular ? Json(*f.t_singular) : Json(nullptr);
    j["reason"] = f.reason;
    j["final_t"] = f.final_t;
    j["steps"] = f.steps;
    j["terminal"] = {{"max_A2", f.final_max_A2},
                     {"max_H2", f.final_max_H2},
                     {"diameter", f.final_diameter},
                     {"fiber_distance", f.final_fiber_distance}};
    j["thresholds"] = {{"singular_A2", f.policy.singular_A2},
                       {"singular_diameter_factor", f.policy.singular_diameter_factor},
                       {"minimal_H2", f.policy.minimal_H2},
                       {"reference_h", f.policy.target_h},
                       {"heuristic", true}};
    return j;
}

// --- config parsing ------------------------------------------------------------------

Json parse_config(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1, column = 1;
        for (std::size_t i = 0; i < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::ConfigError, source + ":line " + std::to_string(line) + ", column " +
                                                std::to_string(column) + ": syntax error");
    }
}

std::string locate_key(const std::string& text, const std::vector<std::string>& path) {
    std::size_t pos = 0;
    bool found = false;
    for (const auto& key : path) {
        const std::size_t at = text.find("\"" + key + "\"", pos);
        if (at == std::string::npos) break;
        pos = at;
        found = true;
    }
    if (!found) return "";
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    return "line " + std::to_string(line);
}

// --- running -------------------------------------------------------------------------

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ConfigError:
            return kExitConfig;
        case ErrorCode::HypothesisFailed:
            return kExitFail;
        default:
            return kExitNumerical;
    }
}

ScenarioOutcome run_scenario(const Json& config, const RunOptions& opt, const std::string& text) {
    ScenarioOutcome out;
    try {
        if (!config.is_object()) issue({}, "config must be a JSON object");
        const std::string scenario = field<std::string>(config, {}, "scenario", "");
        if (scenario == "flow") return run_flow_scenario(config, opt);
        if (scenario == "commutation") return run_commutation_scenario(config, opt);
        if (scenario == "identity") return run_identity_scenario(config, opt);
        if (scenario == "audit") return run_audit_scenario(config, opt);
        if (scenario == "sweep") return run_sweep_scenario(config, opt);
        issue({"scenario"}, scenario.empty() ? "missing 'scenario'" : "unknown scenario '" + scenario + "'");
    } catch (const ConfigIssue& c) {
        out.exit_code = kExitConfig;
        out.message = "CONFIG_ERROR: " + anchored(c, text);
    } catch (const Error& e) {
        out.exit_code = exit_code_for(e);
        out.message = e.what();
    } catch (const nlohmann::json::exception& e) {
        out.exit_code = kExitConfig;
        out.message = std::string("CONFIG_ERROR: ") + e.what();
    } catch (const std::exception& e) {
        out.exit_code = kExitNumerical;
        out.message = e.what();
    }
    return out;
}

ScenarioOutcome run_scenario_file(const std::filesystem::path& path, const RunOptions& opt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return {kExitConfig, "CONFIG_ERROR: cannot read " + path.string(), {}, {}};
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    try {
        const Json config = parse_config(text, path.string());
        return run_scenario(config, opt, text);
    } catch (const Error& e) {
        return {exit_code_for(e), e.what(), {}, {}};
    }
}

ScenarioOutcome run_audit(const Json& submersions, int samples, unsigned seed, const std::filesystem::path& out_dir) {
    ScenarioOutcome out;
    try {
        const Json list = submersions.is_array() ? submersions : Json::array({submersions});
        if (list.empty()) issue({"submersions"}, "expected at least one submersion");
        if (samples < 1) issue({"samples"}, "samples must be positive");
        std::vector<SubmersionModel> subs;
        for (const Json& j : list) subs.push_back(within({"submersions"}, [&] { return submersion_from_json(j); }));
        for (const auto& s : subs) out.verdicts.push_back(fiber_audit_verdict(s, samples, seed));
        if (out_dir.empty()) {
            bool pass = true;
            for (const auto& v : out.verdicts) pass = pass && v.pass;
            out.exit_code = pass ? kExitPass : kExitFail;
        } else {
            finish_verdicts(out, out_dir);
        }
    } catch (const ConfigIssue& c) {
        out.exit_code = kExitConfig;
        out.message = "CONFIG_ERROR: " + anchored(c, "");
    } catch (const Error& e) {
        out.exit_code = exit_code_for(e);
        out.message = e.what();
    }
    return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace mcflab
