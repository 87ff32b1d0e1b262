#pragma once

#include "mcflab/verify.hpp"

#include <filesystem>
#include <iosfwd>

namespace mcflab {

/// Process exit codes of the batch runner.
enum ExitCode : int { kExitPass = 0, kExitFail = 2, kExitNumerical = 3, kExitConfig = 4 };

/// One named initial-immersion family.
struct FamilyInfo {
    std::string name;
    std::string summary;
    std::string acceptance;  // scenario that exercises it
    Json schema;             // param -> {"type", "default", "doc"}
    bool lifted = false;     // built as lift(base) through a submersion
};

const std::vector<FamilyInfo>& family_catalog();
const FamilyInfo& family_info(const std::string& name);
Json catalog_to_json();
void print_catalog(std::ostream& os);

/// Fills defaults and rejects unknown or mistyped parameters (CONFIG_ERROR).
Json resolve_family_params(const std::string& name, const Json& params);
/// Lifted families: default submersion, and the base curve at target edge length h.
SubmersionModel family_submersion(const std::string& name, const Json& params);
DiscreteImmersion family_base(const std::string& name, const Json& params, const SubmersionModel& sub, double h);
/// Builds the family at target edge length h. Lifted families use `sub` when given.
DiscreteImmersion make_family(const std::string& name, const Json& params, double h,
                              const SubmersionModel* sub = nullptr);

/// Named pinching presets ({"preset": "hopf_hypersurface", "n": 1, "c": 1}) or
/// explicit {"name", "a", "b"}.
PinchingCondition condition_from_json(const Json& j);
Json condition_to_json(const PinchingCondition& c);

FlowPolicy policy_from_json(const Json& j, double default_h);
Json policy_to_json(const FlowPolicy& p);
/// Outcome, estimated singular time and terminal diagnostics. Thresholds are heuristic.
Json fate_to_json(const FateReport& fate);

/// Parses config text; syntax errors become CONFIG_ERROR with "line L, column C".
Json parse_config(const std::string& text, const std::string& source = "<config>");
/// "line L" of the first occurrence of the key path in the config text, or "".
std::string locate_key(const std::string& text, const std::vector<std::string>& path);

struct RunOptions {
    std::filesystem::path out_dir;  // overrides config "output" when non-empty
    int jobs = 1;
};

struct ScenarioOutcome {
    int exit_code = kExitPass;
    std::string message;
    std::vector<Verdict> verdicts;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one parsed config. Errors are mapped to exit codes, never thrown.
ScenarioOutcome run_scenario(const Json& config, const RunOptions& opt = {}, const std::string& text = "");
/// Reads, parses and runs a config file.
ScenarioOutcome run_scenario_file(const std::filesystem::path& path, const RunOptions& opt = {});

/// Fiber audits of the given submersion descriptor (object or array of objects).
ScenarioOutcome run_audit(const Json& submersions, int samples, unsigned seed,
                          const std::filesystem::path& out_dir = {});

int exit_code_for(const Error& e);

/// Calls fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace mcflab
