// Command-line front end: ucvol <command> --config FILE [--set Section.key=value]...

#include <ucvol/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::optional<int> mode;
    bool timing = false;
    bool quiet = false;
};

int execute(ucvol::Command cmd, const CommonFlags& f) {
    namespace fs = std::filesystem;
    std::vector<std::string> overrides = f.sets;
    // Flags given on the command line resolve against the working directory, not the config file.
    if (!f.out.empty()) overrides.push_back("Output.directory=" + fs::absolute(f.out).string());
    if (f.mode) overrides.push_back("Sampling.cartesianIntersectionMode=" + std::to_string(*f.mode));

    ucvol::RunConfig config;
    ucvol::RunOptions options;
    try {
        const fs::path path = fs::absolute(f.config);
        std::vector<std::string> warnings;
        config = ucvol::parse_config(ucvol::read_text(path), &warnings, path.string(), overrides);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        options.baseDir = path.parent_path();
        options.configSource = path.string();
    } catch (const ucvol::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ucvol::exit_code_for(e.code());
    }
    options.timing = f.timing;
    if (!f.quiet) options.log = &std::clog;

    const auto outcome = ucvol::run(cmd, config, options);
    if (outcome.exitCode != ucvol::kExitOk) {
        std::cerr << "error: " << outcome.message << "\n";
    } else if (!f.quiet) {
        for (const auto& p : outcome.artifacts) std::cout << p.generic_string() << "\n";
    }
    if (!f.quiet) std::clog << "manifest: " << outcome.manifest.string() << "\n";
    return outcome.exitCode;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uniform-cube sampling of assembly configuration regions"};
    app.set_version_flag("--version", ucvol::kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    const std::vector<std::pair<ucvol::Command, const char*>> commands{
        {ucvol::Command::SampleAcr, "Sample one contact region given by Sampling.initial_Contact_N"},
        {ucvol::Command::SampleBasin, "Sample every region of each configured basin and report weighted volumes"},
        {ucvol::Command::Baseline, "Enumerate the refined Cartesian grid as a reference"},
        {ucvol::Command::McIngest, "Partition a Monte Carlo trajectory into pseudo-atlases MC1..MC3"},
        {ucvol::Command::Measure, "Compute volume, shape, coverage and efficiency reports"},
    };
    std::vector<std::pair<CLI::App*, ucvol::Command>> subs;
    for (const auto& [cmd, help] : commands) {
        CLI::App* sub = app.add_subcommand(ucvol::to_string(cmd), help);
        sub->add_option("-c,--config", flags.config, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("-s,--set", flags.sets, "Override a config key, e.g. Sampling.cayleyStep=0.25");
        sub->add_option("-o,--out", flags.out, "Output directory (overrides Output.directory)");
        sub->add_option("-m,--mode", flags.mode, "Sampler variant 0..4 (overrides cartesianIntersectionMode)")
            ->check(CLI::Range(0, 4));
        sub->add_flag("--timing", flags.timing, "Record wall times in result summaries");
        sub->add_flag("-q,--quiet", flags.quiet, "Suppress progress output");
        subs.emplace_back(sub, cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ucvol::kExitConfig;
    }
    for (const auto& [sub, cmd] : subs)
        if (sub->parsed()) return execute(cmd, flags);
    return ucvol::kExitConfig;
}
