#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "taufn/taufn.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw taufn::SchemaError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path().empty() ? fs::path{"."} : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw taufn::Error("cannot write output file: " + path.string());
    out << bytes;
}

int run_verify(std::uint64_t seed, int jobs) {
    auto results = taufn::run_acceptance_suite(seed, jobs);
    bool all_pass = true;
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::printf("[%2d] %s %-26s %s (%.0f ms)\n", r.id, r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.detail.c_str(), r.ms);
    }
    std::printf("%zu/%zu criteria passed\n",
                static_cast<size_t>(std::count_if(results.begin(), results.end(),
                                                  [](const auto& r) { return r.pass; })),
                results.size());
    return all_pass ? 0 : 1;
}

int run_command(const std::string& command, const std::string& scenario_path,
                const std::string& out_dir, int jobs) {
    std::string bytes;
    taufn::Scenario sc;
    try {
        bytes = read_file(scenario_path);
        sc = taufn::parse_scenario(bytes);
    } catch (const taufn::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    }
    std::string digest = taufn::fnv1a_digest(bytes);
    taufn::RunResult result;
    try {
        if (command == "symbol") result = taufn::cmd_symbol(sc, digest);
        else if (command == "dn") result = taufn::cmd_dn(sc, digest);
        else if (command == "tau") result = taufn::cmd_tau(sc, digest, jobs);
        else if (command == "rh") result = taufn::cmd_rh(sc, digest);
        else result = taufn::cmd_ds(sc, digest);
    } catch (const taufn::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const taufn::Error& e) {
        result.report = taufn::report_skeleton(sc, digest, command);
        result.report["exit_status"] = 3;
        result.report["notes"].push_back("stage " + command + " failed: " + std::string(e.what()));
        result.exit_code = 3;
        std::cerr << "numerical failure in stage " << command << ": " << e.what() << "\n";
    }
    fs::path dir(out_dir);
    if (!result.csv.empty()) {
        std::string csv_name = sc.csv_name.empty() ? command + ".csv" : sc.csv_name;
        write_file(dir / csv_name, result.csv);
        std::cout << "wrote " << (dir / csv_name).string() << "\n";
    }
    write_file(dir / sc.report_name, result.report.dump(2) + "\n");
    std::cout << "wrote " << (dir / sc.report_name).string() << "\n";
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tau functions of integrable hierarchies via block Toeplitz determinants"};
    app.fallthrough();

    std::string scenario_path, out_dir = ".";
    int jobs = 1;
    std::uint64_t seed = 12345;
    bool verify = false;
    app.add_option("--scenario", scenario_path, "scenario JSON file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--jobs", jobs, "max concurrent sweep evaluations")->check(CLI::Range(1, 256));
    app.add_option("--seed", seed, "seed for the randomized property suites");
    app.add_flag("--verify", verify, "run the full identity suite; nonzero exit on any breach");

    for (const char* name : {"symbol", "dn", "tau", "rh", "ds"})
        app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify) return run_verify(seed, jobs);
        std::string command;
        for (auto* sub : app.get_subcommands())
            command = sub->get_name();
        if (command.empty()) {
            std::cerr << "no command given; use one of symbol, dn, tau, rh, ds or --verify\n";
            return 2;
        }
        if (scenario_path.empty()) {
            std::cerr << "schema error: --scenario PATH is required\n";
            return 2;
        }
        return run_command(command, scenario_path, out_dir, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
