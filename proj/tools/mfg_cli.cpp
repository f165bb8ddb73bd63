#include "mfg1d/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mfg1d::ConfigError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int seed = 0; // reserved; the pipeline is deterministic
    int threads = 0;
};

mfg1d::ExperimentConfig load_config(const CommonArgs& args) {
    mfg1d::ExperimentConfig cfg = mfg1d::parse_config(read_file(args.config_path));
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "reserved; runs are deterministic");
    cmd->add_option("--threads", args.threads, "worker threads for independent solves");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D mean-field-game forward solver and boundary-data reconstruction"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* sim = app.add_subcommand("simulate", "run the forward solves and store measurements");
    CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct from stored measurements");
    CLI::App* run = app.add_subcommand("run", "simulate and reconstruct end to end");
    CLI::App* demo = app.add_subcommand("demo-positivity", "nonnegative-input channel comparison");
    CLI::App* val = app.add_subcommand("validate-config", "parse and validate a config");
    for (CLI::App* cmd : {sim, rec, run, demo, val}) add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const mfg1d::ExperimentConfig cfg = load_config(args);
        const fs::path out(cfg.out_dir);

        if (val->parsed()) {
            std::cout << "config OK: " << args.config_path << "\n";
            return 0;
        }
        if (sim->parsed()) {
            mfg1d::MeasurementSet set = mfg1d::simulate_measurements(cfg);
            write_file(out / "measurements.json", mfg1d::measurement_set_to_json(set));
            std::cout << "wrote " << (out / "measurements.json").string() << " (" << set.size()
                      << " records)\n";
            return 0;
        }
        if (rec->parsed() || run->parsed()) {
            mfg1d::MeasurementSet set;
            if (run->parsed()) {
                set = mfg1d::simulate_measurements(cfg);
                write_file(out / "measurements.json", mfg1d::measurement_set_to_json(set));
            } else {
                set = mfg1d::measurement_set_from_json(
                    read_file((out / "measurements.json").string()));
            }
            const auto start = std::chrono::steady_clock::now();
            mfg1d::ReconstructionReport rep = mfg1d::reconstruct(cfg, set);
            rep.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_file(out / "report.json", mfg1d::report_to_json(rep));
            for (const std::string& f : cfg.formats)
                if (f == "csv") mfg1d::emit_plot_data(rep, out.string());
            std::cout << "wrote " << (out / "report.json").string() << "\n";
            return 0;
        }
        if (demo->parsed()) {
            mfg1d::PositivityDemo d = mfg1d::run_positivity_demo(cfg);
            write_file(out / "positivity_demo.json", mfg1d::positivity_demo_to_json(d));
            std::cout << "wrote " << (out / "positivity_demo.json").string()
                      << " (violations=" << d.violations << ")\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(mfg1d::classify_exception(e));
    }
    return 0;
}
