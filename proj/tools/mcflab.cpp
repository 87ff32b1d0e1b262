#include "mcflab/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace mcflab;

namespace {

int run_configs(const std::vector<std::string>& configs, const std::string& out, int jobs) {
    std::vector<ScenarioOutcome> results(configs.size());
    RunOptions opt;
    // A shared --out only makes sense for a single config.
    if (!out.empty() && configs.size() == 1) opt.out_dir = out;
    const int outer = configs.size() > 1 ? jobs : 1;
    opt.jobs = configs.size() > 1 ? 1 : jobs;
    parallel_for(static_cast<int>(configs.size()), outer,
                 [&](int i) { results[i] = run_scenario_file(configs[i], opt); });
    int code = kExitPass;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto& r = results[i];
        (r.exit_code == kExitPass ? std::cout : std::cerr) << configs[i] << ": " << r.message << '\n';
        for (const auto& a : r.artifacts) std::cout << "  wrote " << a.string() << '\n';
        code = std::max(code, r.exit_code);
    }
    return code;
}

int run_audit_cmd(const std::string& arg, int samples, unsigned seed, const std::string& out) {
    std::string text = arg;
    std::string source = "<inline>";
    if (!arg.empty() && arg.front() != '{' && arg.front() != '[') {
        std::ifstream is(arg);
        if (!is) {
            std::cerr << "CONFIG_ERROR: cannot read " << arg << '\n';
            return kExitConfig;
        }
        std::stringstream ss;
        ss << is.rdbuf();
        text = ss.str();
        source = arg;
    }
    ScenarioOutcome r;
    try {
        r = run_audit(parse_config(text, source), samples, seed, out);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e);
    }
    if (!r.message.empty() && r.verdicts.empty()) std::cerr << r.message << '\n';
    for (const auto& v : r.verdicts) std::cout << verdict_to_json(v).dump() << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean curvature flow through Riemannian submersions: batch scenarios and checks"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "run one or more JSON scenario configs");
    run->add_option("config", configs, "scenario config files")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (single config only)");
    run->add_option("-j,--jobs", jobs, "independent scenarios run concurrently")->check(CLI::PositiveNumber);

    bool as_json = false;
    auto* list = app.add_subcommand("list", "print the initial-immersion catalog");
    list->add_flag("--json", as_json, "emit the catalog as JSON");

    std::string descriptor;
    int samples = 100;
    unsigned seed = 17;
    std::string audit_out;
    auto* audit = app.add_subcommand("audit", "minimal-fiber audit of a submersion descriptor");
    audit->add_option("submersion", descriptor, "JSON file, or inline JSON object/array")->required();
    audit->add_option("--samples", samples, "random points per submersion");
    audit->add_option("--seed", seed, "sampling seed");
    audit->add_option("--out", audit_out, "write verdict.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (*run) return run_configs(configs, out, jobs);
    if (*list) {
        if (as_json)
            std::cout << catalog_to_json().dump(2) << '\n';
        else
            print_catalog(std::cout);
        return 0;
    }
    return run_audit_cmd(descriptor, samples, seed, audit_out);
}
