#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ermakov/scenario.hpp"

namespace fs = std::filesystem;
using namespace ermakov;

namespace {

constexpr int kOk = 0, kClaimFailure = 1, kSchema = 2, kRuntime = 3;

std::vector<std::string> split_methods(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void print_json(const OrderedJson& j) { std::cout << j.dump(2) << "\n"; }

int runtime_failure(const std::string& command, const Scenario* sc, const std::string& what) {
    OrderedJson o;
    o["v"] = kScenarioVersion;
    o["command"] = command;
    if (sc) o["scenario"] = sc->name;
    o["status"] = "runtime_error";
    o["error"] = what;
    o["exit_code"] = kRuntime;
    print_json(o);
    std::cerr << "error: " << what << "\n";
    return kRuntime;
}

int cmd_run(const Scenario& sc, const ErmakovModel& m, const fs::path& out) {
    const auto tr = run_direct(sc, m);
    const auto report = run_report(sc, m, tr);
    fs::create_directories(out);
    write_text(out / (sc.name + ".csv"), trajectory_csv(tr, m));
    write_text(out / (sc.name + ".report.json"), report.dump(2) + "\n");
    print_json(report);
    return kOk;
}

int cmd_verify(const Scenario& sc, const ErmakovModel& m, const std::string& out) {
    const auto claims = verify_claims(sc, m);
    for (const auto& c : claims) std::cout << claim_line(c) << "\n";
    const auto report = verify_report(sc, m, claims);
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / (sc.name + ".verify.json"), report.dump(2) + "\n");
    }
    return all_pass(claims) ? kOk : kClaimFailure;
}

int cmd_compare(const Scenario& sc, const ErmakovModel& m, const std::vector<std::string>& methods, const fs::path& out) {
    const auto r = run_compare(sc, m, methods);
    const auto report = compare_report(sc, m, r);
    fs::create_directories(out);
    write_text(out / (sc.name + ".compare.csv"), compare_csv(r));
    write_text(out / (sc.name + ".compare.json"), report.dump(2) + "\n");
    write_text(out / (sc.name + ".timings.csv"), timings_csv(r));
    for (const auto& run : r.runs) {
        std::cout << to_string(run.status) << " " << run.method;
        if (run.status == MethodStatus::Ok) std::cout << " " << format_g17(run.seconds) << "s";
        if (!run.reason.empty()) std::cout << " (" << run.reason << ")";
        std::cout << "\n";
    }
    for (const auto& p : r.pairs)
        std::cout << (p.pass ? "PASS " : "FAIL ") << p.a << "-" << p.b << " max|dx|=" << format_g17(p.max_dx)
                  << " max|dy|=" << format_g17(p.max_dy) << "\n";
    return compare_exit_code(r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for Lagrangian Ermakov systems"};
    app.require_subcommand(1);

    std::string path, out = ".", verify_out, methods = "direct,quadrature,linearize";
    auto* run = app.add_subcommand("run", "integrate a scenario and write <name>.csv and <name>.report.json");
    run->add_option("scenario", path, "scenario JSON file")->required();
    run->add_option("--out", out, "output directory");
    auto* verify = app.add_subcommand("verify", "run the claim suite and print PASS/FAIL per claim");
    verify->add_option("scenario", path, "scenario JSON file")->required();
    verify->add_option("--out", verify_out, "also write <name>.verify.json here");
    auto* compare = app.add_subcommand("compare", "cross-check solution methods on the scenario grid");
    compare->add_option("scenario", path, "scenario JSON file")->required();
    compare->add_option("--methods", methods, "comma-separated subset of direct,quadrature,linearize");
    compare->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kSchema;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::vector<std::string> method_list;
    if (command == "compare") {
        method_list = split_methods(methods);
        std::vector<std::string> bad;
        for (const auto& name : method_list)
            if (std::find(known_methods().begin(), known_methods().end(), name) == known_methods().end())
                bad.push_back("--methods: unknown method '" + name + "'");
        if (method_list.empty()) bad.push_back("--methods: no method given");
        if (!bad.empty()) {
            for (const auto& b : bad) std::cerr << "error: " << b << "\n";
            return kSchema;
        }
    }

    Scenario sc;
    try {
        sc = load_scenario(path);
    } catch (const ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return kSchema;
    }

    try {
        const ErmakovModel m = scenario_model(sc);
        if (command == "run") return cmd_run(sc, m, out);
        if (command == "verify") return cmd_verify(sc, m, verify_out);
        return cmd_compare(sc, m, method_list, out);
    } catch (const Error& e) {
        return runtime_failure(command, &sc, e.what());
    } catch (const fs::filesystem_error& e) {
        return runtime_failure(command, &sc, e.what());
    }
}
