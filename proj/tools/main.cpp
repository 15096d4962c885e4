// diffcasimir permittivity|force|difference|calibrate|compare|simulate --config <file> [--out <dir>] [--seed <u64>]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "diffcasimir/config.hpp"
#include "diffcasimir/error.hpp"
#include "diffcasimir/pipeline.hpp"

namespace dc = diffcasimir;

int main(int argc, char** argv) {
    CLI::App app{"Casimir force difference pipeline"};
    app.require_subcommand(1);

    std::string config_path, config_b_path, out_dir;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file")->required();
        cmd->add_option("--out", out_dir, "output directory (default: output.directory from the config)");
        cmd->add_option("--seed", seed, "random seed for synthetic data");
    };
    add_common(app.add_subcommand("permittivity", "eps(i xi) table for the configured materials"));
    add_common(app.add_subcommand("force", "sphere-plate force curve"));
    auto* diff = app.add_subcommand("difference", "difference of two force curves");
    add_common(diff);
    diff->add_option("--config-b", config_b_path, "second configuration; default: plate_b of --config");
    add_common(app.add_subcommand("calibrate", "electrostatic calibration from voltage sweeps"));
    add_common(app.add_subcommand("compare", "theory against repeated scans"));
    add_common(app.add_subcommand("simulate", "seeded synthetic experiment"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: USAGE: " << e.what() << '\n';
        return 64;
    }

    try {
        const auto config = dc::load_config(config_path);
        const std::filesystem::path out = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
        const std::string command = app.get_subcommands().front()->get_name();
        dc::CommandOutput result;
        if (command == "permittivity") {
            result = dc::cmd_permittivity(config, out);
        } else if (command == "force") {
            result = dc::cmd_force(config, out);
        } else if (command == "difference") {
            std::optional<dc::RunConfig> config_b;
            if (!config_b_path.empty()) config_b = dc::load_config(config_b_path);
            result = dc::cmd_difference(config, config_b ? &*config_b : nullptr, out);
        } else if (command == "calibrate") {
            result = dc::cmd_calibrate(config, out);
        } else if (command == "compare") {
            result = dc::cmd_compare(config, out);
        } else {
            result = dc::cmd_simulate(config, seed.value_or(config.seed), out);
        }
        std::cout << result.summary;
        if (!result.summary.empty() && result.summary.back() != '\n') std::cout << '\n';
        for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        return 0;
    } catch (const dc::Error& e) {
        std::cerr << "error: " << dc::error_code_name(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL: " << e.what() << '\n';
        return 3;
    }
}
