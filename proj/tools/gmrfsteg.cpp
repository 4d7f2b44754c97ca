#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gmrfsteg/commands.hpp"

using namespace gmrfsteg;

namespace {

void add_model_flags(CLI::App* app, cli::RunConfig& cfg)
{
    app->add_option("input", cfg.input, "cover image (binary PGM)")->required();
    app->add_option("--out-dir", cfg.out_dir, "directory for output files");
    app->add_option("--block", cfg.block, "estimation block side (odd)");
    app->add_option("--degree", cfg.degree, "polynomial degree of the local model");
    app->add_option("--wiener", cfg.wiener, "Wiener window size (2..5)");
    app->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
}

void add_payload_flags(CLI::App* app, cli::RunConfig& cfg, bool smooth_default)
{
    cfg.smooth = smooth_default;
    app->add_option("--payload", cfg.payload_rate, "payload in bits per pixel")->required();
    app->add_option("--seed", cfg.seed, "random seed");
    app->add_option("--beta-t", cfg.beta_t, "clique allocation threshold");
    app->add_flag("--smooth,!--no-smooth", cfg.smooth, "smooth costs and re-derive probabilities");
    app->add_option("--kernel", cfg.kernel, "cost smoothing kernel size (odd)");
    app->add_option("--cliques", cfg.cliques, "clique mode: dynamic, off, on")
        ->transform(CLI::CheckedTransformer(std::map<std::string, optimizer::CliqueMode>{
            {"dynamic", optimizer::CliqueMode::Dynamic},
            {"off", optimizer::CliqueMode::AllOff},
            {"on", optimizer::CliqueMode::AllOn}}));
    app->add_flag("--dump-theta", cfg.dump_theta, "write clique activation maps");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"GMRF-based adaptive steganography toolkit"};
    app.require_subcommand(1);

    cli::RunConfig model_cfg;
    cli::RunConfig probs_cfg;
    cli::RunConfig embed_cfg;
    std::string inject;

    auto* model = app.add_subcommand("model", "estimate variance and correlation maps");
    add_model_flags(model, model_cfg);
    auto* probs = app.add_subcommand("probs", "optimize change probabilities");
    add_model_flags(probs, probs_cfg);
    add_payload_flags(probs, probs_cfg, false);
    auto* embed = app.add_subcommand("embed", "simulate embedding at the optimized probabilities");
    add_model_flags(embed, embed_cfg);
    add_payload_flags(embed, embed_cfg, true);
    auto* verify = app.add_subcommand("verify", "check closed forms against the brute-force oracles");
    verify->add_option("--inject-fault", inject, "perturb one FIM entry by +5% (i11, i12, i22)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kOk : cli::kUsage;
    }

    try {
        if (*model)
            return cli::cmd_model(model_cfg, std::cout);
        if (*probs)
            return cli::cmd_probs(probs_cfg, std::cout);
        if (*embed)
            return cli::cmd_embed(embed_cfg, std::cout);
        if (*verify)
            return inject.empty() ? cli::cmd_verify(std::cout) : cli::cmd_verify(std::cout, cli::perturbed_kernel(inject));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
    return cli::kUsage;
}
