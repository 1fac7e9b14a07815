#include <CLI11.hpp>

#include "rigidity/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Linear rigidity of stationary random measures"};
    app.require_subcommand(1);
    rigidity::cli::JobOptions opt;
    std::uint64_t seed = 0;
    int k_cap = 0;
    std::string chosen;
    for (const char* name : {"classify", "predict", "dpp", "simulate", "reproduce-paper"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "JSON config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--k-cap", k_cap, "largest order to classify")->check(CLI::Range(0, 6));
        sub->callback([&, name, sub] {
            chosen = name;
            if (sub->count("--seed")) opt.seed = seed;
            if (sub->count("--k-cap")) opt.k_cap = k_cap;
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rigidity::cli::InputError;
    }
    return rigidity::cli::run(chosen, opt);
}
