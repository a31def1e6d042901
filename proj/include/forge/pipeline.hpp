#pragma once

// Stage runners behind the `forge` command. Each stage reads its inputs,
// writes its outputs atomically and returns a JSON summary. run() chains
// stages and records a run_status.json next to the outputs.

#include <glob.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "forge/cleanse.hpp"
#include "forge/config.hpp"
#include "forge/corruption.hpp"
#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/io.hpp"
#include "forge/langid.hpp"
#include "forge/mixture.hpp"
#include "forge/stats.hpp"
#include "forge/taskcast.hpp"
#include "forge/trainplan.hpp"
#include "forge/vocab.hpp"

namespace forge {

namespace fs = std::filesystem;

struct PipelineConfig {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    fs::path out_dir;

    fs::path langid_profile;
    fs::path langid_train;
    int langid_n = 3;
    double langid_smoothing = 0.5;

    std::string clean_in; // glob pattern or directory
    fs::path clean_out;
    fs::path clean_report;
    FilterConfig filter;

    fs::path stats_in;
    fs::path stats_out;
    fs::path histogram;
    std::vector<double> alphas{0.2, 0.3, 0.7};
    std::uint64_t min_pages = kDefaultMinPages;

    fs::path mix_stats;
    fs::path mix_in;
    fs::path mix_out;
    fs::path tokenizer_sample;
    double alpha = kDefaultAlpha;
    std::uint64_t mix_n = 100000;
    std::uint64_t sample_chars = 0;

    fs::path vocab;
    fs::path corrupt_in;
    fs::path corrupt_out;
    fs::path corrupt_report;
    CorruptionParams corruption;

    std::string cast_task;
    fs::path cast_in;
    fs::path cast_out;
    std::string eval_task;
    fs::path eval_pred;
    fs::path eval_gold;
    fs::path eval_out;

    fs::path plan_out;
    SchedulePlan plan;

    std::uint64_t require_seed() const {
        if (!seed) throw Error("a seed is required: pass --seed, set 'seed' in the config, or export FORGE_SEED");
        return *seed;
    }
};

// Typed view of the settings. Output paths left unset default to fixed names
// under `out`, and each stage's inputs default to the previous stage's
// outputs, so a config naming only inputs and `out` drives a full run.
inline PipelineConfig resolve_config(const Settings &s) {
    PipelineConfig c;
    if (s.has("seed") || std::getenv("FORGE_SEED") != nullptr) c.seed = resolve_seed(s);
    c.threads = static_cast<std::size_t>(std::max<std::uint64_t>(1, s.uint("threads", 1)));
    c.out_dir = s.path("out").value_or(fs::path{});
    auto p = [&](const std::string &key, const fs::path &def) -> fs::path {
        if (auto v = s.path(key)) return *v;
        if (def.empty()) return {};
        return c.out_dir.empty() ? fs::path{} : c.out_dir / def;
    };
    auto or_else = [&](const std::string &key, const fs::path &fallback) -> fs::path {
        if (auto v = s.path(key)) return *v;
        return fallback;
    };

    c.langid_profile = p("langid.profile", {});
    c.langid_train = p("langid.train", {});
    c.langid_n = static_cast<int>(s.uint("langid.n", 3));
    c.langid_smoothing = s.real("langid.smoothing", 0.5);

    if (auto v = s.path("clean.in")) c.clean_in = v->string();
    c.clean_out = p("clean.out", "pages");
    c.clean_report = p("clean.report", "clean_report.json");
    c.filter.badwords_dir = p("clean.wordlists", {});
    c.filter.enable_line_length = s.boolean("clean.line_length", true);
    c.filter.min_long_lines = static_cast<int>(s.uint("clean.min_long_lines", 3));
    c.filter.min_line_chars = static_cast<int>(s.uint("clean.min_line_chars", 200));
    c.filter.enable_dedup = s.boolean("clean.dedup", true);
    c.filter.enable_badwords = s.boolean("clean.badwords", true);
    c.filter.c4_mode = s.boolean("clean.c4_mode", false);
    c.filter.english_prob_threshold = s.real("clean.english_threshold", 0.99);
    c.filter.confidence_threshold = s.real("clean.confidence_threshold", 0.70);
    c.filter.seed = c.seed.value_or(0);

    c.stats_in = or_else("stats.in", c.clean_out);
    c.stats_out = p("stats.out", "stats.json");
    c.histogram = p("stats.histogram", "hist.tsv");
    c.alphas = s.reals("stats.alphas", c.alphas);
    c.min_pages = s.uint("stats.min_pages", kDefaultMinPages);

    c.mix_stats = or_else("mix.stats", c.stats_out);
    c.mix_in = or_else("mix.in", c.stats_in);
    c.mix_out = p("mix.out", "mixture.jsonl");
    c.alpha = s.real("mix.alpha", kDefaultAlpha);
    c.mix_n = s.uint("mix.n", 100000);
    c.sample_chars = s.uint("mix.sample_chars", 0);
    c.tokenizer_sample = p("mix.tokenizer_sample", c.sample_chars > 0 ? "tokenizer_sample.txt" : "");

    c.vocab = p("corrupt.vocab", {});
    c.corrupt_in = or_else("corrupt.in", c.mix_out);
    c.corrupt_out = p("corrupt.out", "examples.jsonl");
    c.corrupt_report = p("corrupt.report", "corrupt_report.json");
    c.corruption.mask_rate = s.real("corrupt.rate", 0.15);
    c.corruption.mean_span_len = s.real("corrupt.mean_span", 3.0);
    c.corruption.seq_len = static_cast<std::size_t>(s.uint("corrupt.seq_len", 1024));
    c.corruption.seed = c.seed.value_or(0);

    c.cast_task = s.str("cast.task");
    c.cast_in = p("cast.in", {});
    c.cast_out = p("cast.out", "t2t.jsonl");
    c.eval_task = s.str("eval.task");
    c.eval_pred = p("eval.pred", {});
    c.eval_gold = p("eval.gold", {});
    c.eval_out = p("eval.out", "metrics.json");

    c.plan_out = p("plan.out", "plan.json");
    c.plan.warmup_steps = s.uint("plan.warmup_steps", c.plan.warmup_steps);
    c.plan.total_steps = s.uint("plan.total_steps", c.plan.total_steps);
    c.plan.batch_size = s.uint("plan.batch_size", c.plan.batch_size);
    c.plan.seq_len = s.uint("plan.seq_len", c.plan.seq_len);
    c.plan.finetune_lr = s.real("plan.finetune_lr", c.plan.finetune_lr);
    c.plan.finetune_dropout = s.real("plan.finetune_dropout", c.plan.finetune_dropout);
    return c;
}

namespace pipeline_detail {

inline void require(const fs::path &p, const char *key) {
    if (p.empty()) throw Error(std::string("missing setting ") + key);
}

inline void require_exists(const fs::path &p, const char *key) {
    require(p, key);
    if (!fs::exists(p)) throw Error(std::string(key) + ": no such file or directory: " + p.string());
}

inline void write_json(const fs::path &path, const nlohmann::ordered_json &j) {
    io::write_file(path, j.dump(2) + "\n");
}

inline bool is_jsonl(const fs::path &p) {
    const std::string name = p.filename().string();
    auto ends = [&](std::string_view suf) {
        return name.size() >= suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
    };
    return ends(".jsonl") || ends(".jsonl.gz");
}

inline std::string shard_stem(const fs::path &p) {
    std::string name = p.filename().string();
    for (std::string_view suf : {".gz", ".jsonl", ".pages"}) {
        if (name.size() > suf.size() && name.compare(name.size() - suf.size(), suf.size(), suf) == 0)
            name.resize(name.size() - suf.size());
    }
    return name;
}

// Sorted JSONL files in a directory.
inline std::vector<fs::path> list_jsonl(const fs::path &dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto &e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && is_jsonl(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Expands a glob pattern (or a directory) to a sorted file list; the sort
// fixes the shard order, which is the canonical document order.
inline std::vector<fs::path> expand_inputs(const std::string &pattern) {
    if (fs::is_directory(pattern)) return list_jsonl(pattern);
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<fs::path> out;
    if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw Error("cannot expand input pattern " + pattern);
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Error("no input files match " + pattern);
    return out;
}

inline std::string rel(const fs::path &p, const fs::path &base) {
    if (base.empty()) return p.filename().string();
    const auto r = p.lexically_relative(base);
    return r.empty() ? p.string() : r.generic_string();
}

template <class Fn>
void for_each_jsonl(const fs::path &path, Fn &&fn) {
    io::LineReader reader(path);
    while (auto line = reader.next()) {
        if (utf8::trim(*line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(*line);
        } catch (const nlohmann::json::exception &e) {
            throw Error(path.filename().string() + " line " + std::to_string(reader.line_number()) + ": " + e.what());
        }
        try {
            fn(j, reader.line_number());
        } catch (const nlohmann::json::exception &e) {
            throw Error(path.filename().string() + " line " + std::to_string(reader.line_number()) + ": " + e.what());
        }
    }
}

struct MixItem {
    std::string url;
    std::string text;
    explicit operator std::string_view() const noexcept { return text; }
};

// pawsx gold labels may be 1/0 instead of label text.
inline std::string label_text(Task task, const nlohmann::json &label) {
    if (label.is_string()) return label.get<std::string>();
    if (task == Task::pawsx && (label.is_number_integer() || label.is_boolean())) {
        const bool pos = label.is_boolean() ? label.get<bool>() : label.get<long long>() != 0;
        return pos ? "paraphrase" : "not_paraphrase";
    }
    throw Error("unsupported label value " + label.dump());
}

inline std::vector<EntitySpan> gold_entities(const nlohmann::json &j) {
    const auto tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("tags")) return entities_from_bio(tokens, j.at("tags").get<std::vector<std::string>>());
    std::vector<EntitySpan> out;
    for (const auto &e : j.value("entities", nlohmann::json::array())) {
        out.push_back({e.at("label").get<std::string>(), e.at("surface").get<std::string>(), out.size()});
    }
    return out;
}

inline std::vector<std::string> gold_answers(const nlohmann::json &j) {
    if (j.contains("answers")) return j.at("answers").get<std::vector<std::string>>();
    return {j.at("answer").get<std::string>()};
}

} // namespace pipeline_detail

inline NgramLanguageModel load_identifier(const PipelineConfig &c) {
    if (!c.langid_profile.empty() && fs::exists(c.langid_profile)) return NgramLanguageModel::load(c.langid_profile);
    if (!c.langid_train.empty()) {
        std::vector<LabeledText> corpus;
        pipeline_detail::for_each_jsonl(c.langid_train, [&](const nlohmann::json &j, std::size_t) {
            corpus.push_back({j.at("language").get<std::string>(), j.at("text").get<std::string>()});
        });
        return NgramLanguageModel::train(corpus, c.langid_n, c.langid_smoothing);
    }
    if (!c.langid_profile.empty()) throw Error("langid.profile: no such file: " + c.langid_profile.string());
    throw Error("missing setting langid.profile or langid.train");
}

// ---------------------------------------------------------------------------
// Stages

inline nlohmann::ordered_json run_train_langid(const PipelineConfig &c) {
    pipeline_detail::require_exists(c.langid_train, "langid.train");
    pipeline_detail::require(c.langid_profile, "langid.profile");
    PipelineConfig train_only;
    train_only.langid_train = c.langid_train;
    train_only.langid_n = c.langid_n;
    train_only.langid_smoothing = c.langid_smoothing;
    const auto model = load_identifier(train_only);
    model.save(c.langid_profile);
    return {{"stage", "train-langid"}, {"languages", model.languages().size()}, {"n", c.langid_n}};
}

inline nlohmann::ordered_json run_clean(const PipelineConfig &c) {
    using namespace pipeline_detail;
    if (c.clean_in.empty()) throw Error("missing setting clean.in");
    require(c.clean_out, "clean.out");
    require(c.clean_report, "clean.report");
    const auto shards = expand_inputs(c.clean_in);
    WordLists lists;
    if (c.filter.enable_badwords) {
        require_exists(c.filter.badwords_dir, "clean.wordlists");
        lists = WordLists::load_dir(c.filter.badwords_dir);
    }
    const NgramLanguageModel model = load_identifier(c);
    Cascade cascade(c.filter, model, std::move(lists), c.threads);

    constexpr std::size_t kBatch = 1024;
    auto shard_rows = nlohmann::ordered_json::array();
    std::set<std::string> stems;
    for (const auto &shard : shards) {
        const std::string stem = shard_stem(shard);
        if (!stems.insert(stem).second) throw Error("two input shards map to output " + stem + ".pages.jsonl");
        const fs::path out = c.clean_out / (stem + ".pages.jsonl");
        PageWriter writer(out);
        DocumentReader reader(shard);
        std::uint64_t docs_in = 0;
        std::vector<RawDocument> batch;
        auto flush = [&] {
            for (const auto &page : cascade.process(batch)) writer.write(page);
            batch.clear();
        };
        while (auto doc = reader.next()) {
            ++docs_in;
            batch.push_back(std::move(*doc));
            if (batch.size() == kBatch) flush();
        }
        flush();
        const std::size_t kept = writer.commit();
        shard_rows.push_back({{"input", shard.filename().string()},
                              {"output", rel(out, c.out_dir)},
                              {"pages_in", docs_in},
                              {"pages_out", kept}});
    }

    nlohmann::ordered_json report;
    report["stage"] = "clean";
    const auto &f = cascade.config();
    report["config"] = {{"line_length", f.enable_line_length},
                        {"min_long_lines", f.min_long_lines},
                        {"min_line_chars", f.min_line_chars},
                        {"dedup", f.enable_dedup},
                        {"badwords", f.enable_badwords},
                        {"c4_mode", f.c4_mode},
                        {"confidence_threshold", f.confidence_threshold}};
    if (f.c4_mode) report["config"]["english_threshold"] = f.english_prob_threshold;
    const auto counts = cascade.report().to_json();
    report["pages_in"] = counts["pages_in"];
    report["pages_out"] = counts["pages_out"];
    report["stages"] = counts["stages"];
    report["shards"] = std::move(shard_rows);
    write_json(c.clean_report, report);
    return {{"stage", "clean"}, {"pages_in", report["pages_in"]}, {"pages_out", report["pages_out"]},
            {"report", rel(c.clean_report, c.out_dir)}};
}

inline nlohmann::ordered_json run_stats(const PipelineConfig &c) {
    using namespace pipeline_detail;
    require_exists(c.stats_in, "stats.in");
    require(c.stats_out, "stats.out");
    LanguageStats stats;
    for (const auto &file : list_jsonl(c.stats_in)) {
        LanguageStats shard;
        PageReader reader(file);
        while (auto page = reader.next()) shard.add(*page);
        stats.merge(shard);
    }
    const auto included = apply_inclusion_threshold(stats, c.min_pages);
    auto j = to_json(stats, &included);
    j["min_pages"] = c.min_pages;
    write_json(c.stats_out, j);
    if (!c.histogram.empty()) {
        LanguageStats kept;
        for (const auto &lang : included) kept.languages[lang] = stats.languages.at(lang);
        if (kept.languages.empty())
            throw Error("no language reaches min_pages=" + std::to_string(c.min_pages) + "; histogram would be empty");
        io::write_file(c.histogram, histogram_tsv(export_histogram(kept, c.alphas), c.alphas));
    }
    return {{"stage", "stats"}, {"languages", stats.languages.size()}, {"included", included.size()},
            {"pages", stats.totals().pages}, {"report", rel(c.stats_out, c.out_dir)}};
}

inline nlohmann::ordered_json run_mix(const PipelineConfig &c) {
    using namespace pipeline_detail;
    const std::uint64_t seed = c.require_seed();
    require_exists(c.mix_stats, "mix.stats");
    require_exists(c.mix_in, "mix.in");
    require(c.mix_out, "mix.out");
    const StatsFile sf = read_stats(c.mix_stats);
    std::map<std::string, std::uint64_t> counts;
    for (const auto &[lang, lc] : sf.stats.languages) {
        if (!sf.has_included || sf.included.count(lang)) counts[lang] = lc.pages;
    }
    if (counts.empty()) throw Error("no included languages in " + c.mix_stats.string());
    const MixtureSpec spec = compute_sampling_probs(counts, c.alpha);

    std::map<std::string, std::vector<MixItem>> stores;
    for (const auto &file : list_jsonl(c.mix_in)) {
        PageReader reader(file);
        while (auto page = reader.next()) {
            if (counts.count(page->language)) stores[page->language].push_back({page->url, page_text(*page)});
        }
    }

    MixtureSampler sampler(spec, stores, seed);
    std::map<std::string, std::uint64_t> drawn;
    {
        io::AtomicWriter out(c.mix_out);
        for (std::uint64_t i = 0; i < c.mix_n; ++i) {
            auto [lang, item] = sampler.next();
            ++drawn[lang];
            nlohmann::ordered_json row;
            row["index"] = i;
            row["language"] = lang;
            row["url"] = item.url;
            row["text"] = item.text;
            out.write_line(row.dump());
        }
        out.commit();
    }

    nlohmann::ordered_json summary{{"stage", "mix"}, {"alpha", c.alpha}, {"n", c.mix_n}};
    summary["probs"] = spec.probs;
    summary["drawn"] = drawn;
    if (!c.tokenizer_sample.empty()) {
        std::ostringstream text;
        std::map<std::string, std::uint64_t> chars;
        const auto written = export_tokenizer_sample(spec, stores, c.sample_chars, seed, text, &chars);
        io::write_file(c.tokenizer_sample, text.str());
        summary["tokenizer_sample"] = {{"file", rel(c.tokenizer_sample, c.out_dir)},
                                       {"chars", written},
                                       {"chars_by_language", chars}};
    }
    summary["output"] = rel(c.mix_out, c.out_dir);
    return summary;
}

inline nlohmann::ordered_json run_corrupt(const PipelineConfig &c) {
    using namespace pipeline_detail;
    CorruptionParams params = c.corruption;
    params.seed = c.require_seed();
    params.validate();
    require_exists(c.vocab, "corrupt.vocab");
    require_exists(c.corrupt_in, "corrupt.in");
    require(c.corrupt_out, "corrupt.out");
    const Vocabulary vocab = Vocabulary::load(c.vocab);

    CorruptionStreamStats st;
    std::uint64_t tokens = 0;
    std::uint64_t noise = 0;
    std::uint64_t spans = 0;
    std::uint64_t next_index = 0;
    constexpr std::size_t kBatch = 4096;
    std::vector<std::string> batch;
    io::AtomicWriter out(c.corrupt_out);
    auto flush = [&] {
        const auto examples = corrupt_stream(batch, vocab, params, c.threads, &st, next_index);
        for (std::size_t i = 0; i < examples.size(); ++i) {
            if (!examples[i]) continue;
            const auto &ex = *examples[i];
            tokens += ex.input_ids.size() - ex.num_spans + ex.num_noise;
            noise += ex.num_noise;
            spans += ex.num_spans;
            out.write_line(to_jsonl(ex, next_index + i));
        }
        next_index += batch.size();
        batch.clear();
    };
    for_each_jsonl(c.corrupt_in, [&](const nlohmann::json &j, std::size_t) {
        batch.push_back(j.at("text").get<std::string>());
        if (batch.size() == kBatch) flush();
    });
    flush();
    out.commit();

    nlohmann::ordered_json report;
    report["stage"] = "corrupt";
    report["params"] = {{"mask_rate", params.mask_rate},
                        {"mean_span_len", params.mean_span_len},
                        {"seq_len", params.seq_len},
                        {"seed", params.seed}};
    report["vocab_size"] = vocab.size();
    report["texts"] = next_index;
    report["examples"] = st.examples;
    report["skipped_short"] = st.skipped_short;
    report["truncated"] = st.truncated;
    report["tokens"] = tokens;
    report["noise_tokens"] = noise;
    report["spans"] = spans;
    report["mask_fraction"] = tokens ? static_cast<double>(noise) / static_cast<double>(tokens) : 0.0;
    report["mean_span_len"] = spans ? static_cast<double>(noise) / static_cast<double>(spans) : 0.0;
    report["output"] = rel(c.corrupt_out, c.out_dir);
    if (!c.corrupt_report.empty()) write_json(c.corrupt_report, report);
    return report;
}

inline nlohmann::ordered_json run_cast(const PipelineConfig &c) {
    using namespace pipeline_detail;
    if (c.cast_task.empty()) throw Error("missing setting cast.task");
    const Task task = parse_task(c.cast_task);
    require_exists(c.cast_in, "cast.in");
    require(c.cast_out, "cast.out");
    io::AtomicWriter out(c.cast_out);
    std::uint64_t n = 0;
    for_each_jsonl(c.cast_in, [&](const nlohmann::json &j, std::size_t line) {
        TextToTextExample ex;
        try {
            switch (task) {
            case Task::xnli:
                ex = cast_classification(task,
                                         {{"premise", j.at("premise").get<std::string>()},
                                          {"hypothesis", j.at("hypothesis").get<std::string>()}},
                                         label_text(task, j.at("label")));
                break;
            case Task::pawsx:
                ex = cast_classification(task,
                                         {{"sentence1", j.at("sentence1").get<std::string>()},
                                          {"sentence2", j.at("sentence2").get<std::string>()}},
                                         label_text(task, j.at("label")));
                break;
            case Task::ner:
                ex = cast_ner(j.at("tokens").get<std::vector<std::string>>(), gold_entities(j));
                break;
            case Task::qa:
                ex = cast_qa(j.at("context").get<std::string>(), j.at("question").get<std::string>(),
                             gold_answers(j).at(0));
                break;
            }
        } catch (const Error &e) {
            throw Error(c.cast_in.filename().string() + " line " + std::to_string(line) + ": " + e.what());
        }
        ex.id = j.value("id", std::string{});
        ex.language = j.value("language", std::string{});
        out.write_line(to_json(ex).dump());
        ++n;
    });
    out.commit();
    return {{"stage", "cast"}, {"task", task_name(task)}, {"examples", n}, {"output", rel(c.cast_out, c.out_dir)}};
}

inline nlohmann::ordered_json run_eval(const PipelineConfig &c) {
    using namespace pipeline_detail;
    if (c.eval_task.empty()) throw Error("missing setting eval.task");
    const Task task = parse_task(c.eval_task);
    require_exists(c.eval_pred, "eval.pred");
    require_exists(c.eval_gold, "eval.gold");
    require(c.eval_out, "eval.out");

    std::vector<std::string> preds;
    {
        io::LineReader reader(c.eval_pred);
        while (auto line = reader.next()) {
            if (!line->empty() && line->back() == '\r') line->pop_back();
            preds.push_back(std::move(*line));
        }
    }
    std::vector<nlohmann::json> golds;
    for_each_jsonl(c.eval_gold, [&](const nlohmann::json &j, std::size_t) { golds.push_back(j); });
    if (preds.size() != golds.size()) {
        throw Error("prediction count " + std::to_string(preds.size()) + " does not match gold count " +
                    std::to_string(golds.size()));
    }

    nlohmann::ordered_json report;
    report["stage"] = "eval";
    report["task"] = task_name(task);
    report["examples"] = golds.size();
    auto metrics = nlohmann::ordered_json::array();
    if (task == Task::xnli || task == Task::pawsx) {
        std::vector<std::string> labels;
        for (const auto &g : golds) labels.push_back(label_text(task, g.at("label")));
        metrics.push_back(accuracy(preds, labels).to_json());
    } else if (task == Task::ner) {
        std::vector<std::vector<EntitySpan>> pred_ents;
        std::vector<std::vector<EntitySpan>> gold_ents;
        std::size_t malformed = 0;
        for (std::size_t i = 0; i < golds.size(); ++i) {
            auto parsed = parse_ner_output(preds[i]);
            malformed += parsed.malformed;
            pred_ents.push_back(std::move(parsed.entities));
            gold_ents.push_back(gold_entities(golds[i]));
        }
        metrics.push_back(entity_f1(pred_ents, gold_ents).to_json());
        report["malformed_fragments"] = malformed;
    } else {
        std::vector<std::vector<std::string>> answers;
        for (const auto &g : golds) answers.push_back(gold_answers(g));
        const auto s = qa_metrics(preds, answers);
        metrics.push_back(s.f1.to_json());
        metrics.push_back(s.em.to_json());
    }
    report["metrics"] = std::move(metrics);
    write_json(c.eval_out, report);
    return report;
}

inline nlohmann::ordered_json run_plan(const PipelineConfig &c) {
    pipeline_detail::require(c.plan_out, "plan.out");
    pipeline_detail::write_json(c.plan_out, training_config(c.plan, c.corruption, c.alpha));
    return {{"stage", "plan"}, {"token_budget", token_budget(c.plan)}, {"output", pipeline_detail::rel(c.plan_out, c.out_dir)}};
}

// ---------------------------------------------------------------------------
// Multi-stage runs

inline const std::vector<std::string> &stage_names() {
    static const std::vector<std::string> names{"clean", "stats", "mix", "corrupt", "cast", "eval", "plan"};
    return names;
}

class UsageError : public Error {
public:
    using Error::Error;
};

inline std::vector<std::string> parse_stage_list(std::string_view list) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        const std::string name(utf8::trim(list.substr(start, end - start)));
        start = end + 1;
        if (name.empty()) continue;
        const auto &known = stage_names();
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw UsageError("unknown stage '" + name + "' (expected clean, stats, mix, corrupt, cast, eval or plan)");
        if (std::find(out.begin(), out.end(), name) != out.end())
            throw UsageError("stage '" + name + "' listed twice");
        out.push_back(name);
    }
    if (out.empty()) throw UsageError("no stages requested");
    return out;
}

inline nlohmann::ordered_json run_stage(const std::string &name, const PipelineConfig &c) {
    if (name == "clean") return run_clean(c);
    if (name == "stats") return run_stats(c);
    if (name == "mix") return run_mix(c);
    if (name == "corrupt") return run_corrupt(c);
    if (name == "cast") return run_cast(c);
    if (name == "eval") return run_eval(c);
    if (name == "plan") return run_plan(c);
    throw UsageError("unknown stage '" + name + "'");
}

// Checks the seed and every input that no earlier stage of this run will
// produce, before anything is written.
inline void validate_run(const PipelineConfig &c, const std::vector<std::string> &stages) {
    using pipeline_detail::require_exists;
    if (c.out_dir.empty()) throw Error("missing setting out");
    c.require_seed();
    auto before = [&](const std::string &s, const std::string &than) {
        const auto a = std::find(stages.begin(), stages.end(), s);
        const auto b = std::find(stages.begin(), stages.end(), than);
        return a != stages.end() && a < b;
    };
    for (const auto &s : stages) {
        if (s == "clean") {
            if (c.clean_in.empty()) throw Error("missing setting clean.in");
            pipeline_detail::expand_inputs(c.clean_in);
            if (c.filter.enable_badwords) require_exists(c.filter.badwords_dir, "clean.wordlists");
            if (c.langid_profile.empty() || !std::filesystem::exists(c.langid_profile))
                require_exists(c.langid_train, "langid.train");
            c.filter.validate();
        } else if (s == "stats") {
            if (!before("clean", s)) require_exists(c.stats_in, "stats.in");
            for (double a : c.alphas) {
                if (!(a > 0.0)) throw Error("stats.alphas: alpha must be > 0");
            }
        } else if (s == "mix") {
            if (!before("stats", s)) require_exists(c.mix_stats, "mix.stats");
            if (!before("clean", s)) require_exists(c.mix_in, "mix.in");
            if (!(c.alpha > 0.0)) throw Error("mix.alpha must be > 0");
        } else if (s == "corrupt") {
            require_exists(c.vocab, "corrupt.vocab");
            if (!before("mix", s)) require_exists(c.corrupt_in, "corrupt.in");
            c.corruption.validate();
        } else if (s == "cast") {
            parse_task(c.cast_task);
            require_exists(c.cast_in, "cast.in");
        } else if (s == "eval") {
            parse_task(c.eval_task);
            require_exists(c.eval_pred, "eval.pred");
            require_exists(c.eval_gold, "eval.gold");
        } else if (s == "plan") {
            c.plan.validate();
        }
    }
}

// Runs the stages in order. <out>/run_status.json records each completed
// stage; on failure it says "failed" and names the stage, and outputs of
// stages after it are absent. Returns the status document, rethrowing the
// stage error after the status is written.
inline nlohmann::ordered_json run(const PipelineConfig &c, const std::vector<std::string> &stages) {
    validate_run(c, stages);
    nlohmann::ordered_json status;
    status["format"] = "forge-run";
    status["version"] = 1;
    status["seed"] = *c.seed;
    status["stages_requested"] = stages;
    status["stages"] = nlohmann::ordered_json::array();
    const fs::path status_path = c.out_dir / "run_status.json";
    for (const auto &s : stages) {
        try {
            status["stages"].push_back(run_stage(s, c));
        } catch (const std::exception &e) {
            status["status"] = "failed";
            status["failed_stage"] = s;
            status["error"] = e.what();
            pipeline_detail::write_json(status_path, status);
            throw;
        }
    }
    status["status"] = "ok";
    pipeline_detail::write_json(status_path, status);
    return status;
}

} // namespace forge
