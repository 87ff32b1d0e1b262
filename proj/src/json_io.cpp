#include "mcflab/json_io.hpp"

namespace mcflab {

namespace {

double param(const Json& j, const char* key, double fallback, bool required) {
    const Json* params = j.contains("params") ? &j.at("params") : &j;
    if (params->contains(key)) {
        const Json& v = params->at(key);
        if (!v.is_number())
            throw Error(ErrorCode::ConfigError, std::string("parameter '") + key + "' must be a number");
        return v.get<double>();
    }
    if (required) throw Error(ErrorCode::ConfigError, std::string("missing parameter '") + key + "'");
    return fallback;
}

std::string kind_of(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw Error(ErrorCode::ConfigError, "descriptor needs a string 'kind'");
    return j.at("kind").get<std::string>();
}

int int_field(const Json& j, const char* key, int fallback) {
    if (j.contains(key)) return j.at(key).get<int>();
    const Json* params = j.contains("params") ? &j.at("params") : nullptr;
    if (params && params->contains(key)) return params->at(key).get<int>();
    return fallback;
}

bool same_space(const AmbientSpace& a, const AmbientSpace& b) {
    return a.kind == b.kind && a.dim == b.dim && a.curvature == b.curvature &&
           a.variation == b.variation && a.radius == b.radius && a.complex_dim == b.complex_dim;
}

}  // namespace

Json space_to_json(const AmbientSpace& s) {
    Json j;
    j["kind"] = std::string(to_string(s.kind));
    j["dim"] = s.dim;
    j["embed_dim"] = s.embed_dim;
    Json p = Json::object();
    switch (s.kind) {
        case SpaceKind::Euclidean:
            break;
        case SpaceKind::RoundSphere:
        case SpaceKind::FsSphere:
            p["c"] = s.curvature;
            break;
        case SpaceKind::BergerSphere:
            p["lambda"] = s.variation;
            p["c"] = s.curvature;
            break;
        case SpaceKind::Heisenberg:
            p["n"] = s.complex_dim;
            break;
        case SpaceKind::SasakiBundle:
            p["r"] = s.radius;
            p["c"] = s.curvature;
            break;
    }
    j["params"] = p;
    return j;
}

AmbientSpace space_from_json(const Json& j) {
    try {
        const SpaceKind kind = space_kind_from_string(kind_of(j));
        switch (kind) {
            case SpaceKind::Euclidean:
                return AmbientSpace::euclidean(int_field(j, "dim", 3));
            case SpaceKind::RoundSphere:
                return AmbientSpace::round_sphere(int_field(j, "dim", 2), param(j, "c", 1.0, false));
            case SpaceKind::FsSphere:
                return AmbientSpace::fs_sphere(param(j, "c", 1.0, false));
            case SpaceKind::BergerSphere:
                return AmbientSpace::berger_sphere(param(j, "lambda", 1.0, true),
                                                   param(j, "c", 1.0, false));
            case SpaceKind::Heisenberg:
                return AmbientSpace::heisenberg(int_field(j, "n", 1));
            case SpaceKind::SasakiBundle:
                return AmbientSpace::sasaki_bundle(param(j, "r", 1.0, true), param(j, "c", 1.0, false));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    throw Error(ErrorCode::ConfigError, "bad space descriptor");
}

Json submersion_to_json(const SubmersionModel& sub) {
    Json j;
    j["kind"] = std::string(to_string(sub.kind));
    j["total"] = space_to_json(sub.total);
    j["base"] = space_to_json(sub.base);
    j["fiber_dim"] = sub.fiber_dim;
    return j;
}

SubmersionModel submersion_from_json(const Json& j) {
    const SubmersionKind kind = submersion_kind_from_string(kind_of(j));
    if (!j.contains("total")) throw Error(ErrorCode::ConfigError, "submersion needs 'total'");
    const AmbientSpace total = space_from_json(j.at("total"));
    SubmersionModel sub;
    auto mismatch = [&]() {
        return Error(ErrorCode::ConfigError, std::string(to_string(kind)) + " cannot have total space " +
                                                 std::string(to_string(total.kind)));
    };
    switch (kind) {
        case SubmersionKind::Hopf:
            if (total.kind == SpaceKind::RoundSphere && total.dim == 3)
                sub = SubmersionModel::hopf(total.curvature);
            else if (total.kind == SpaceKind::BergerSphere)
                sub = SubmersionModel::hopf_berger(total.variation, total.curvature);
            else
                throw mismatch();
            break;
        case SubmersionKind::HeisenbergProj:
            if (total.kind != SpaceKind::Heisenberg) throw mismatch();
            sub = SubmersionModel::heisenberg_proj(total.complex_dim);
            break;
        case SubmersionKind::SasakiProj:
            if (total.kind != SpaceKind::SasakiBundle) throw mismatch();
            sub = SubmersionModel::sasaki_proj(total.radius, total.curvature);
            break;
    }
    if (j.contains("base") && !same_space(space_from_json(j.at("base")), sub.base))
        throw Error(ErrorCode::ConfigError, "base space does not match the submersion");
    return sub;
}

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from_json(const Json& j) {
    if (!j.is_array() || j.size() > static_cast<std::size_t>(kMaxDim))
        throw Error(ErrorCode::ConfigError, "expected a numeric array");
    Vec v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
    return v;
}

}  // namespace mcflab
