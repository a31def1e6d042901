// forge: command-line front end. Every flag maps to a config key; a flag
// given on the command line overrides the same key from --config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "forge/config.hpp"
#include "forge/pipeline.hpp"

namespace {

struct Binding {
    const char *flag;
    const char *key;
    const char *help;
};

struct Toggle {
    const char *flag;
    const char *key;
    const char *value;
    const char *help;
};

struct Command {
    const char *name;
    const char *help;
    std::vector<Binding> options;
    std::vector<Toggle> toggles;
};

const std::vector<Command> &commands() {
    static const std::vector<Command> cmds{
        {"clean",
         "Run the filter cascade over raw document shards",
         {{"--in", "clean.in", "input glob or directory of raw JSONL shards"},
          {"--out", "clean.out", "output directory for cleaned page shards"},
          {"--report", "clean.report", "filter report (JSON)"},
          {"--wordlists", "clean.wordlists", "directory of per-language bad-word lists"},
          {"--profile", "langid.profile", "language-identification profile (JSON)"},
          {"--langid-train", "langid.train", "labeled JSONL used to train a profile on the fly"},
          {"--min-long-lines", "clean.min_long_lines", "long lines a page needs"},
          {"--min-line-chars", "clean.min_line_chars", "characters that make a line long"},
          {"--confidence-threshold", "clean.confidence_threshold", "language confidence gate"},
          {"--english-threshold", "clean.english_threshold", "English probability gate in C4 mode"}},
         {{"--no-line-length", "clean.line_length", "false", "disable the line-length filter"},
          {"--no-dedup", "clean.dedup", "false", "disable line deduplication"},
          {"--no-badwords", "clean.badwords", "false", "disable the bad-words filter"},
          {"--c4", "clean.c4_mode", "true", "English-only C4 mode with terminal punctuation filter"}}},
        {"stats",
         "Count pages, tokens and bytes per language",
         {{"--in", "stats.in", "directory of cleaned page shards"},
          {"--out", "stats.out", "statistics file (JSON)"},
          {"--histogram", "stats.histogram", "histogram table (TSV)"},
          {"--alphas", "stats.alphas", "comma-separated sampling exponents"},
          {"--min-pages", "stats.min_pages", "inclusion threshold in pages"}},
         {}},
        {"mix",
         "Draw an alpha-smoothed language mixture",
         {{"--stats", "mix.stats", "statistics file from `forge stats`"},
          {"--in", "mix.in", "directory of cleaned page shards"},
          {"--alpha", "mix.alpha", "sampling exponent"},
          {"--n", "mix.n", "examples to draw"},
          {"--out", "mix.out", "mixture output (JSONL)"},
          {"--tokenizer-sample", "mix.tokenizer_sample", "rate-weighted text sample for tokenizer training"},
          {"--sample-chars", "mix.sample_chars", "characters in the tokenizer sample"}},
         {}},
        {"corrupt",
         "Build span-corruption examples",
         {{"--vocab", "corrupt.vocab", "vocabulary file"},
          {"--in", "corrupt.in", "JSONL with a text field per row"},
          {"--out", "corrupt.out", "examples output (JSONL)"},
          {"--report", "corrupt.report", "corruption report (JSON)"},
          {"--rate", "corrupt.rate", "noise rate"},
          {"--mean-span", "corrupt.mean_span", "mean noise span length"},
          {"--seq-len", "corrupt.seq_len", "sequence length before corruption"}},
         {}},
        {"cast",
         "Cast task data into text-to-text pairs",
         {{"--task", "cast.task", "xnli, pawsx, ner or qa"},
          {"--in", "cast.in", "gold task data (JSONL)"},
          {"--out", "cast.out", "text-to-text output (JSONL)"}},
         {}},
        {"eval",
         "Score predictions against gold data",
         {{"--task", "eval.task", "xnli, pawsx, ner or qa"},
          {"--pred", "eval.pred", "predictions, one per line"},
          {"--gold", "eval.gold", "gold task data (JSONL)"},
          {"--out", "eval.out", "metrics output (JSON)"}},
         {}},
        {"plan",
         "Write the training-plan document",
         {{"--out", "plan.out", "plan output (JSON)"},
          {"--warmup-steps", "plan.warmup_steps", "warm-up steps"},
          {"--total-steps", "plan.total_steps", "pre-training steps"},
          {"--batch-size", "plan.batch_size", "sequences per batch"},
          {"--seq-len", "plan.seq_len", "tokens per sequence"},
          {"--finetune-lr", "plan.finetune_lr", "fine-tuning learning rate"},
          {"--finetune-dropout", "plan.finetune_dropout", "fine-tuning dropout"},
          {"--alpha", "mix.alpha", "sampling exponent recorded in the plan"},
          {"--rate", "corrupt.rate", "noise rate recorded in the plan"},
          {"--mean-span", "corrupt.mean_span", "mean span length recorded in the plan"}},
         {}},
        {"train-langid",
         "Train a character n-gram language profile",
         {{"--in", "langid.train", "labeled JSONL (language, text)"},
          {"--out", "langid.profile", "profile output (JSON)"},
          {"--n", "langid.n", "n-gram order"},
          {"--smoothing", "langid.smoothing", "additive smoothing constant"}},
         {}},
        {"run",
         "Run several stages from one config",
         {{"--out", "out", "output directory"}, {"--stages", "stages", "comma-separated stage list"}},
         {}},
    };
    return cmds;
}

constexpr const char *kDefaultStages = "clean,stats,mix,corrupt,plan";

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"forge: multilingual pretraining data pipeline"};
    app.require_subcommand(1);

    struct Parsed {
        std::string config;
        std::map<std::string, std::string> values; // key -> value
        std::vector<std::string> sets;
        std::vector<std::pair<CLI::Option *, std::string>> options; // option -> key
        std::vector<std::pair<CLI::Option *, const Toggle *>> toggles;
        std::string seed;
        std::string threads;
        CLI::Option *seed_opt = nullptr;
        CLI::Option *threads_opt = nullptr;
    };
    std::map<std::string, Parsed> parsed;
    std::map<std::string, CLI::App *> subs;

    for (const auto &cmd : commands()) {
        auto *sub = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = sub;
        Parsed &p = parsed[cmd.name];
        sub->add_option("--config", p.config, "key = value config file");
        p.seed_opt = sub->add_option("--seed", p.seed, "random seed (config: seed; env: FORGE_SEED)");
        p.threads_opt = sub->add_option("--threads", p.threads, "worker threads (config: threads)");
        sub->add_option("--set", p.sets, "override any config key: --set key=value");
        for (const auto &b : cmd.options) {
            auto *opt = sub->add_option(b.flag, p.values[b.key], std::string(b.help) + " (config: " + b.key + ")");
            p.options.emplace_back(opt, b.key);
        }
        for (const auto &t : cmd.toggles) {
            auto *opt = sub->add_flag(t.flag)->description(std::string(t.help) + " (config: " + t.key + " = " +
                                                           t.value + ")");
            p.toggles.emplace_back(opt, &t);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    std::string name;
    for (const auto &[n, sub] : subs) {
        if (sub->parsed()) name = n;
    }
    Parsed &p = parsed.at(name);

    try {
        forge::Settings settings;
        if (!p.config.empty()) settings = forge::Settings::load(p.config);
        const auto cwd = std::filesystem::current_path();
        forge::Settings flags;
        if (p.seed_opt->count() > 0) flags.set("seed", p.seed, cwd, "--seed");
        if (p.threads_opt->count() > 0) flags.set("threads", p.threads, cwd, "--threads");
        for (const auto &[opt, key] : p.options) {
            if (opt->count() > 0) flags.set(key, p.values.at(key), cwd, opt->get_name());
        }
        for (const auto &[opt, t] : p.toggles) {
            if (opt->count() > 0) flags.set(t->key, t->value, cwd, opt->get_name());
        }
        for (const auto &kv : p.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw forge::UsageError("--set expects key=value, got '" + kv + "'");
            flags.set(kv.substr(0, eq), kv.substr(eq + 1), cwd, "--set");
        }
        settings.merge(flags);
        const forge::PipelineConfig config = forge::resolve_config(settings);

        nlohmann::ordered_json summary;
        if (name == "run") {
            const auto stages = forge::parse_stage_list(settings.str("stages", kDefaultStages));
            summary = forge::run(config, stages);
        } else if (name == "train-langid") {
            summary = forge::run_train_langid(config);
        } else {
            summary = forge::run_stage(name, config);
        }
        std::cout << summary.dump(2) << '\n';
        return 0;
    } catch (const forge::UsageError &e) {
        std::cerr << "forge " << name << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "forge " << name << ": error: " << e.what() << '\n';
        return 1;
    }
}
