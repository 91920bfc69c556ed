// sentiflow: command-line driver for the news-sentiment forecasting pipeline.
#include <CLI11.hpp>

#include <iostream>

#include "sentiflow/common/error.hpp"
#include "sentiflow/pipeline/config.hpp"
#include "sentiflow/pipeline/stages.hpp"
#include "sentiflow/pipeline/synth.hpp"

namespace fs = std::filesystem;
using namespace sentiflow;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
    bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory (overrides the config)");
    sub->add_option("--seed", c.seed, "global seed (overrides the config)");
    sub->add_option("--workers", c.workers, "parallel runs (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_flag("--force", c.force, "rerun completed stages; let report mix config hashes");
}

int run_stages(const std::vector<std::string>& stages, const Common& c) {
    pipeline::RunConfig cfg;
    try {
        cfg = pipeline::load_config(c.config, c.seed);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    }
    if (!c.out.empty()) cfg.output_dir = fs::absolute(c.out);
    pipeline::StageOptions opts;
    opts.force = c.force;
    opts.workers = c.workers;
    opts.log = &std::cerr;
    for (const auto& s : stages) {
        try {
            const auto r = pipeline::run_stage(s, cfg, opts);
            std::cerr << s << ": " << (r.skipped ? "up to date" : "done") << '\n';
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentiflow: news sentiment features for stock forecasting"};
    app.require_subcommand(1);

    Common common;
    std::vector<std::string> chosen;
    for (const auto& name : pipeline::stage_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " stage");
        add_common(sub, common);
        sub->callback([&chosen, name] { chosen = {name}; });
    }
    auto* all = app.add_subcommand("all", "run every stage in order (ablate only if configured)");
    add_common(all, common);
    all->callback([&chosen] { chosen = {"all"}; });

    pipeline::SynthOptions synth;
    std::string synth_dir;
    auto* syn = app.add_subcommand("synth", "write the synthetic fixture (inputs, corpus, config)");
    syn->add_option("--out", synth_dir, "fixture directory")->required();
    syn->add_option("--seed", synth.seed, "generator seed");
    syn->add_option("--days", synth.trading_days, "trading days per ticker");
    syn->add_option("--seeds", synth.num_seeds, "training seeds per configuration");
    syn->add_option("--epochs", synth.epochs, "training epochs");
    syn->add_option("--workers", synth.workers, "parallel runs written to the config");
    syn->callback([&chosen] { chosen = {"synth"}; });

    CLI11_PARSE(app, argc, argv);

    if (chosen.front() == "synth") {
        try {
            const auto path = pipeline::write_fixture(synth_dir, synth);
            std::cout << path.string() << '\n';
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "synth: " << e.what() << '\n';
            return 1;
        }
    }
    if (chosen.front() == "all") {
        std::vector<std::string> stages;
        for (const auto& s : pipeline::stage_names()) stages.push_back(s);
        // ablate is skipped when the config has no ablation section
        try {
            if (!pipeline::load_config(common.config, common.seed).ablation)
                stages.erase(std::find(stages.begin(), stages.end(), "ablate"));
        } catch (const std::exception& e) {
            std::cerr << "config: " << e.what() << '\n';
            return 2;
        }
        return run_stages(stages, common);
    }
    return run_stages(chosen, common);
}
