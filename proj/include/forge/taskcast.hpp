#pragma once

// Text-to-text casting of classification, NER and extractive QA data, the
// inverse parser for generated NER text, and the evaluation metrics.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge {

enum class Task { xnli, pawsx, ner, qa };

inline std::string_view task_name(Task t) {
    switch (t) {
    case Task::xnli: return "xnli";
    case Task::pawsx: return "pawsx";
    case Task::ner: return "ner";
    case Task::qa: return "qa";
    }
    return "";
}

inline Task parse_task(std::string_view s) {
    if (s == "xnli") return Task::xnli;
    if (s == "pawsx") return Task::pawsx;
    if (s == "ner") return Task::ner;
    if (s == "qa") return Task::qa;
    throw Error("unknown task '" + std::string(s) + "' (expected xnli, pawsx, ner or qa)");
}

struct TextToTextExample {
    Task task = Task::xnli;
    std::string input_text;
    std::string target_text;
    std::string id;
    std::string language;

    bool operator==(const TextToTextExample &) const = default;
};

struct EntitySpan {
    std::string label;
    std::string surface;
    std::size_t order_index = 0;

    bool operator==(const EntitySpan &) const = default;
};

inline constexpr std::string_view kEntitySeparator = " $$ ";
inline constexpr std::string_view kNoEntities = "None";

inline const std::vector<std::string> &task_labels(Task t) {
    static const std::vector<std::string> xnli{"entailment", "neutral", "contradiction"};
    static const std::vector<std::string> pawsx{"paraphrase", "not_paraphrase"};
    static const std::vector<std::string> none;
    switch (t) {
    case Task::xnli: return xnli;
    case Task::pawsx: return pawsx;
    default: return none;
    }
}

// xnli:  "xnli premise: <premise> hypothesis: <hypothesis>"
// pawsx: "pawsx sentence1: <s1> sentence2: <s2>"
// The target is the label text itself.
inline TextToTextExample cast_classification(Task task, const std::map<std::string, std::string> &fields,
                                             const std::string &label) {
    const auto &labels = task_labels(task);
    if (labels.empty()) throw Error(std::string(task_name(task)) + " is not a classification task");
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
        throw Error("unknown " + std::string(task_name(task)) + " label '" + label + "'");
    }
    auto field = [&](const char *name) -> const std::string & {
        auto it = fields.find(name);
        if (it == fields.end()) throw Error(std::string("missing field ") + name);
        return it->second;
    };
    TextToTextExample ex;
    ex.task = task;
    if (task == Task::xnli) {
        ex.input_text = "xnli premise: " + field("premise") + " hypothesis: " + field("hypothesis");
    } else {
        ex.input_text = "pawsx sentence1: " + field("sentence1") + " sentence2: " + field("sentence2");
    }
    ex.target_text = label;
    return ex;
}

// Entities are rendered as "LABEL: surface" in order of appearance, joined by
// " $$ "; a sentence without entities has the target "None".
inline TextToTextExample cast_ner(const std::vector<std::string> &tokens, std::vector<EntitySpan> entities) {
    std::string sentence;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) sentence += ' ';
        sentence += tokens[i];
    }
    std::stable_sort(entities.begin(), entities.end(),
                     [](const EntitySpan &a, const EntitySpan &b) { return a.order_index < b.order_index; });
    TextToTextExample ex;
    ex.task = Task::ner;
    ex.input_text = "ner: " + sentence;
    if (entities.empty()) {
        ex.target_text = std::string(kNoEntities);
        return ex;
    }
    for (std::size_t i = 0; i < entities.size(); ++i) {
        const auto &e = entities[i];
        if (e.surface.empty() || sentence.find(e.surface) == std::string::npos) {
            throw Error("entity surface '" + e.surface + "' not found in sentence");
        }
        if (i) ex.target_text += kEntitySeparator;
        ex.target_text += e.label;
        ex.target_text += ": ";
        ex.target_text += e.surface;
    }
    return ex;
}

// Converts BIO tags (B-PER, I-PER, O) to entity spans in sentence order.
inline std::vector<EntitySpan> entities_from_bio(const std::vector<std::string> &tokens,
                                                 const std::vector<std::string> &tags) {
    if (tokens.size() != tags.size()) throw Error("tokens and tags differ in length");
    std::vector<EntitySpan> out;
    bool open = false;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string &tag = tags[i];
        if (tag == "O") {
            open = false;
            continue;
        }
        if (tag.size() < 3 || (tag.rfind("B-", 0) != 0 && tag.rfind("I-", 0) != 0)) {
            throw Error("bad BIO tag '" + tag + "'");
        }
        const std::string label = tag.substr(2);
        if (tag[0] == 'I' && open && out.back().label == label) {
            out.back().surface += ' ';
            out.back().surface += tokens[i];
        } else {
            out.push_back({label, tokens[i], out.size()});
            open = true;
        }
    }
    return out;
}

struct NerParse {
    std::vector<EntitySpan> entities;
    std::size_t malformed = 0;
};

// Never throws: fragments that are not "LABEL: surface" are skipped and
// counted.
inline NerParse parse_ner_output(std::string_view text) {
    NerParse out;
    const std::string_view body = utf8::trim(text);
    if (body.empty() || body == kNoEntities) return out;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t end = body.find(kEntitySeparator, start);
        if (end == std::string_view::npos) end = body.size();
        const std::string_view frag = utf8::trim(body.substr(start, end - start));
        start = end + kEntitySeparator.size();
        const std::size_t colon = frag.find(": ");
        if (colon == std::string_view::npos || colon == 0) {
            ++out.malformed;
            continue;
        }
        const std::string_view label = utf8::trim(frag.substr(0, colon));
        const std::string_view surface = utf8::trim(frag.substr(colon + 2));
        if (label.empty() || surface.empty() || label.find(' ') != std::string_view::npos) {
            ++out.malformed;
            continue;
        }
        out.entities.push_back({std::string(label), std::string(surface), out.entities.size()});
    }
    return out;
}

// "question: <question> context: <context>" with the answer as target.
inline TextToTextExample cast_qa(const std::string &context, const std::string &question, const std::string &answer) {
    if (utf8::trim(context).empty()) throw Error("empty context");
    TextToTextExample ex;
    ex.task = Task::qa;
    ex.input_text = "question: " + question + " context: " + context;
    ex.target_text = answer;
    return ex;
}

inline nlohmann::ordered_json to_json(const TextToTextExample &ex) {
    nlohmann::ordered_json j;
    j["task"] = task_name(ex.task);
    j["input"] = ex.input_text;
    j["target"] = ex.target_text;
    if (!ex.id.empty()) j["id"] = ex.id;
    if (!ex.language.empty()) j["language"] = ex.language;
    return j;
}

inline TextToTextExample example_from_json(const nlohmann::json &j) {
    TextToTextExample ex;
    ex.task = parse_task(j.at("task").get<std::string>());
    ex.input_text = j.at("input").get<std::string>();
    ex.target_text = j.at("target").get<std::string>();
    ex.id = j.value("id", std::string{});
    ex.language = j.value("language", std::string{});
    return ex;
}

// ---------------------------------------------------------------------------
// Metrics

enum class Metric { accuracy, f1, em, entity_f1 };

inline std::string_view metric_name(Metric m) {
    switch (m) {
    case Metric::accuracy: return "accuracy";
    case Metric::f1: return "f1";
    case Metric::em: return "em";
    case Metric::entity_f1: return "entity_f1";
    }
    return "";
}

struct MetricResult {
    Metric metric = Metric::accuracy;
    double value = 0.0;
    // accuracy / em / f1: correct = summed score, total = examples.
    double correct = 0.0;
    std::size_t total = 0;
    // entity_f1 only.
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["metric"] = metric_name(metric);
        j["value"] = value;
        j["score"] = 100.0 * value;
        if (metric == Metric::entity_f1) {
            j["tp"] = tp;
            j["fp"] = fp;
            j["fn"] = fn;
        } else {
            j["correct"] = correct;
            j["total"] = total;
        }
        return j;
    }
};

inline MetricResult accuracy(const std::vector<std::string> &predictions, const std::vector<std::string> &golds) {
    if (predictions.size() != golds.size()) {
        throw Error("prediction count " + std::to_string(predictions.size()) + " does not match gold count " +
                    std::to_string(golds.size()));
    }
    MetricResult r;
    r.metric = Metric::accuracy;
    r.total = golds.size();
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (utf8::trim(predictions[i]) == utf8::trim(golds[i])) r.correct += 1.0;
    }
    r.value = r.total ? r.correct / static_cast<double>(r.total) : 0.0;
    return r;
}

// Extractive-QA answer normalization: lowercase, drop punctuation, drop the
// English articles a/an/the, collapse whitespace.
inline std::vector<std::string> normalize_answer_tokens(std::string_view s) {
    const std::u32string cps = utf8::decode(utf8::to_lower(s));
    std::vector<std::string> tokens;
    std::string cur;
    auto push = [&] {
        if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") tokens.push_back(cur);
        cur.clear();
    };
    for (char32_t c : cps) {
        if (utf8::is_punct(c)) continue;
        if (utf8::is_space(c)) {
            push();
        } else {
            utf8::append(cur, c);
        }
    }
    push();
    return tokens;
}

inline double qa_exact(const std::vector<std::string> &pred, const std::vector<std::string> &gold) {
    return pred == gold ? 1.0 : 0.0;
}

inline double qa_f1(const std::vector<std::string> &pred, const std::vector<std::string> &gold) {
    if (pred.empty() || gold.empty()) return pred == gold ? 1.0 : 0.0;
    std::map<std::string, int> counts;
    for (const auto &t : gold) ++counts[t];
    std::size_t common = 0;
    for (const auto &t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

struct QaScores {
    MetricResult f1;
    MetricResult em;
};

// Per-example scores: maximum over the gold answers.
inline QaScores qa_metrics(std::string_view prediction, const std::vector<std::string> &golds) {
    if (golds.empty()) throw Error("qa_metrics needs at least one gold answer");
    const auto p = normalize_answer_tokens(prediction);
    double best_f1 = 0.0;
    double best_em = 0.0;
    for (const auto &g : golds) {
        const auto gt = normalize_answer_tokens(g);
        best_f1 = std::max(best_f1, qa_f1(p, gt));
        best_em = std::max(best_em, qa_exact(p, gt));
    }
    QaScores s;
    s.f1 = {Metric::f1, best_f1, best_f1, 1};
    s.em = {Metric::em, best_em, best_em, 1};
    return s;
}

// Dataset-level QA scores: means over examples.
inline QaScores qa_metrics(const std::vector<std::string> &predictions,
                           const std::vector<std::vector<std::string>> &golds) {
    if (predictions.size() != golds.size()) {
        throw Error("prediction count " + std::to_string(predictions.size()) + " does not match gold count " +
                    std::to_string(golds.size()));
    }
    QaScores total;
    total.f1.metric = Metric::f1;
    total.em.metric = Metric::em;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto s = qa_metrics(predictions[i], golds[i]);
        total.f1.correct += s.f1.value;
        total.em.correct += s.em.value;
    }
    total.f1.total = total.em.total = golds.size();
    if (!golds.empty()) {
        total.f1.value = total.f1.correct / static_cast<double>(golds.size());
        total.em.value = total.em.correct / static_cast<double>(golds.size());
    }
    return total;
}

// Micro-averaged entity F1; entities compare as (label, surface) multisets
// within each sentence. With no entities anywhere the score is 1.
inline MetricResult entity_f1(const std::vector<std::vector<EntitySpan>> &predicted,
                              const std::vector<std::vector<EntitySpan>> &gold) {
    if (predicted.size() != gold.size()) throw Error("predicted and gold sentence counts differ");
    MetricResult r;
    r.metric = Metric::entity_f1;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        std::map<std::pair<std::string, std::string>, int> g;
        for (const auto &e : gold[s]) ++g[{e.label, e.surface}];
        std::size_t tp = 0;
        for (const auto &e : predicted[s]) {
            auto it = g.find({e.label, e.surface});
            if (it != g.end() && it->second > 0) {
                --it->second;
                ++tp;
            }
        }
        r.tp += tp;
        r.fp += predicted[s].size() - tp;
        r.fn += gold[s].size() - tp;
    }
    const std::size_t denom = 2 * r.tp + r.fp + r.fn;
    r.value = denom == 0 ? 1.0 : 2.0 * static_cast<double>(r.tp) / static_cast<double>(denom);
    return r;
}

inline MetricResult entity_f1(const std::vector<EntitySpan> &predicted, const std::vector<EntitySpan> &gold) {
    return entity_f1(std::vector<std::vector<EntitySpan>>{predicted}, std::vector<std::vector<EntitySpan>>{gold});
}

} // namespace forge
