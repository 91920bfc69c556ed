#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sentiflow/models/model.hpp"

namespace sentiflow::pipeline {

// Synthetic study with a planted signal: each trading day has a direction,
// every headline that day carries it, and the next close moves with it.
// Three lexicon backends each know two thirds of the sentiment words, so
// any single backend misses a third of polar headlines and a vote of all
// three recovers them.
struct SynthOptions {
    std::vector<std::string> tickers = {"AAA", "BBB", "CCC"};
    std::string start = "2021-01-04";
    std::size_t trading_days = 400;
    std::size_t corpus_size = 900;
    double corpus_label_noise = 0.05;  // fraction of corpus gold labels resampled
    std::uint64_t seed = 7;

    // Experiment settings written to config.json.
    std::vector<std::string> sources = {"NS", "finbert", "deberta", "roberta", "lr", "rf", "svm"};
    std::vector<models::Arch> archs = {models::Arch::lstm, models::Arch::patchtst, models::Arch::timesnet,
                                       models::Arch::tpatchgnn};
    std::vector<models::Task> tasks = {models::Task::classification, models::Task::regression};
    std::size_t num_seeds = 2;
    bool ablation = true;
    std::size_t hidden_dim = 8;
    std::size_t epochs = 8;
    std::size_t workers = 1;
};

// Words known to each synthetic backend.
struct SynthLexicon {
    std::string id;
    std::vector<std::string> positive, negative;
};
std::vector<SynthLexicon> synth_lexicons();

// Writes <dir>/input/{prices,news}, <dir>/corpus.csv and <dir>/config.json
// (outputs under <dir>/out). Returns the config path.
std::filesystem::path write_fixture(const std::filesystem::path& dir, const SynthOptions& opts = {});

}  // namespace sentiflow::pipeline
