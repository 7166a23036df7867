#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "deom/deom.hpp"

namespace {

int thread_count_from_env() {
    const char* env = std::getenv("DEOM_NUM_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1)
        throw deom::ConfigError("DEOM_NUM_THREADS must be a positive integer");
    return int(n);
}

void print_check_lines(const deom::Json& report) {
    for (const deom::Json& c : report.at("checks")) {
        const std::string status = c.at("status").get<std::string>();
        const char* tag = status == "pass" ? "[PASS]" : status == "fail" ? "[FAIL]" : "[SKIP]";
        std::cout << tag << " " << c.at("name").get<std::string>();
        if (status != "skipped")
            std::cout << "  worst " << c.at("worst").get<double>() << " vs "
                      << c.at("tolerance").get<double>();
        std::cout << "  (" << c.at("detail").get<std::string>() << ")\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchy propagation for open quantum systems in moving frames"};
    app.require_subcommand(1);

    std::string config_path, output, report_path, checkpoint_path;
    int stride = 0;

    auto* cmd_run = app.add_subcommand("run", "propagate a configured run to t_final");
    cmd_run->add_option("config", config_path, "JSON configuration file")->required();
    cmd_run->add_option("--output", output, "override output.path from the configuration");
    cmd_run->add_option("--stride", stride, "override hierarchy.stride")
        ->check(CLI::PositiveNumber);

    auto* cmd_validate =
        app.add_subcommand("validate", "run oracle comparisons and invariant checks");
    cmd_validate->add_option("config", config_path, "JSON configuration file")->required();
    cmd_validate->add_option("--output", report_path, "write the report JSON here");

    auto* cmd_check =
        app.add_subcommand("check-bath", "spectral symmetry and expansion quality only");
    cmd_check->add_option("config", config_path, "JSON configuration file")->required();

    auto* cmd_resume = app.add_subcommand("resume", "continue a checkpointed run to its end");
    cmd_resume->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
    cmd_resume->add_option("--output", output, "override output.path from the checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Eigen::setNbThreads(thread_count_from_env());

        if (*cmd_run) {
            const deom::RunArtifacts art =
                deom::run(deom::parse_config(config_path), output, stride);
            std::cout << "wrote " << art.csv_path << " (" << art.series.rows.size()
                      << " rows) and " << art.manifest_path << "\n";
            for (const deom::Json& w : art.manifest.at("warnings"))
                std::cerr << "warning: " << w.get<std::string>() << "\n";
        } else if (*cmd_validate) {
            const deom::Json report = deom::validate(deom::parse_config(config_path));
            if (report_path.empty()) {
                std::cout << report.dump(2) << "\n";
            } else {
                deom::detail::write_text_file(report_path, report.dump(2) + "\n");
                print_check_lines(report);
                std::cout << "report written to " << report_path << "\n";
            }
        } else if (*cmd_check) {
            std::cout << deom::check_bath(deom::parse_config(config_path)).dump(2) << "\n";
        } else {
            const deom::RunArtifacts art = deom::resume_run(checkpoint_path, output);
            std::cout << "resumed into " << art.csv_path << " ("
                      << art.manifest.at("rows").get<long long>() << " rows total) and "
                      << art.manifest_path << "\n";
        }
        return 0;
    } catch (const deom::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const deom::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const deom::BudgetError& e) {
        std::cerr << "budget: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
