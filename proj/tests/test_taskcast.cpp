#include <gtest/gtest.h>

#include <random>

#include "forge/taskcast.hpp"

using namespace forge;

namespace {

std::string random_word(std::mt19937_64 &eng) {
    static const std::vector<std::string> syllables{"ka", "lo", "mi", "ré", "zu", "ßa", "東", "京", "на", "ya"};
    std::string w;
    const int n = 1 + static_cast<int>(eng() % 4);
    for (int i = 0; i < n; ++i) w += syllables[eng() % syllables.size()];
    return w;
}

} // namespace

TEST(CastClassification, XnliTargetIsLabelText) {
    const auto ex = cast_classification(Task::xnli, {{"premise", "The cat sat."}, {"hypothesis", "A cat sat."}},
                                        "entailment");
    EXPECT_EQ(ex.input_text, "xnli premise: The cat sat. hypothesis: A cat sat.");
    EXPECT_EQ(ex.target_text, "entailment");
}

TEST(CastClassification, PawsxPositiveIsParaphrase) {
    const auto ex =
        cast_classification(Task::pawsx, {{"sentence1", "a b"}, {"sentence2", "b a"}}, "paraphrase");
    EXPECT_EQ(ex.input_text, "pawsx sentence1: a b sentence2: b a");
    EXPECT_EQ(ex.target_text, "paraphrase");
}

TEST(CastClassification, Errors) {
    EXPECT_THROW(cast_classification(Task::xnli, {{"premise", "p"}, {"hypothesis", "h"}}, "maybe"), Error);
    EXPECT_THROW(cast_classification(Task::xnli, {{"premise", "p"}}, "neutral"), Error);
    EXPECT_THROW(cast_classification(Task::ner, {}, "x"), Error);
    EXPECT_THROW(parse_task("pos"), Error);
}

TEST(CastNer, OrderedTargetWithSeparator) {
    const auto ex = cast_ner({"Google", "opened", "in", "Paris"}, {{"LOC", "Paris", 1}, {"ORG", "Google", 0}});
    EXPECT_EQ(ex.input_text, "ner: Google opened in Paris");
    EXPECT_EQ(ex.target_text, "ORG: Google $$ LOC: Paris");
}

TEST(CastNer, NoEntitiesIsNone) { EXPECT_EQ(cast_ner({"nothing", "here"}, {}).target_text, "None"); }

TEST(CastNer, SingleEntityHasNoSeparator) {
    EXPECT_EQ(cast_ner({"Ana", "runs"}, {{"PER", "Ana", 0}}).target_text, "PER: Ana");
}

TEST(CastNer, MissingSurfaceIsAnError) { EXPECT_THROW(cast_ner({"a", "b"}, {{"PER", "Zed", 0}}), Error); }

TEST(CastNer, BioConversion) {
    const std::vector<std::string> tokens{"Sundar", "Pichai", "leads", "Google", "in", "Mountain", "View"};
    const std::vector<std::string> tags{"B-PER", "I-PER", "O", "B-ORG", "O", "B-LOC", "I-LOC"};
    const auto ents = entities_from_bio(tokens, tags);
    ASSERT_EQ(ents.size(), 3u);
    EXPECT_EQ(ents[0], (EntitySpan{"PER", "Sundar Pichai", 0}));
    EXPECT_EQ(ents[2], (EntitySpan{"LOC", "Mountain View", 2}));
    EXPECT_EQ(entities_from_bio({"a", "b"}, {"B-PER", "B-PER"}).size(), 2u);
    EXPECT_EQ(entities_from_bio({"a", "b"}, {"I-PER", "I-ORG"}).size(), 2u);
    EXPECT_THROW(entities_from_bio({"a"}, {"X"}), Error);
    EXPECT_THROW(entities_from_bio({"a"}, {}), Error);
}

TEST(ParseNer, NoneAndGarbage) {
    EXPECT_TRUE(parse_ner_output("None").entities.empty());
    EXPECT_EQ(parse_ner_output("None").malformed, 0u);
    EXPECT_TRUE(parse_ner_output("").entities.empty());
    const auto g = parse_ner_output("garbage");
    EXPECT_TRUE(g.entities.empty());
    EXPECT_EQ(g.malformed, 1u);
    const auto mixed = parse_ner_output("PER: Ana $$ junk $$ : x $$ LOC: Lyon");
    EXPECT_EQ(mixed.malformed, 2u);
    ASSERT_EQ(mixed.entities.size(), 2u);
    EXPECT_EQ(mixed.entities[1], (EntitySpan{"LOC", "Lyon", 1}));
}

TEST(ParseNer, RoundTripOverRandomEntityLists) {
    std::mt19937_64 eng(31);
    const std::vector<std::string> labels{"PER", "ORG", "LOC", "MISC"};
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<std::string> tokens;
        std::vector<EntitySpan> ents;
        const int n = static_cast<int>(eng() % 6);
        for (int k = 0; k < n; ++k) {
            tokens.push_back(random_word(eng));
            std::string surface = random_word(eng);
            if (eng() % 2) surface += " " + random_word(eng);
            tokens.push_back(surface);
            ents.push_back({labels[eng() % labels.size()], surface, ents.size()});
        }
        const auto ex = cast_ner(tokens, ents);
        const auto back = parse_ner_output(ex.target_text);
        ASSERT_EQ(back.malformed, 0u) << ex.target_text;
        ASSERT_EQ(back.entities, ents) << ex.target_text;
    }
}

TEST(CastQa, TargetAndUnicodePreserved) {
    const std::string answer = "Zürich 東京 \xF0\x9F\x98\x80";
    const auto ex = cast_qa("ctx " + answer, "where?", answer);
    EXPECT_EQ(ex.input_text, "question: where? context: ctx " + answer);
    EXPECT_EQ(ex.target_text, answer);
    EXPECT_THROW(cast_qa("  ", "q", "a"), Error);
}

TEST(CastQa, JsonRoundTrip) {
    auto ex = cast_qa("Le ciel est bleu.", "Quelle couleur ?", "bleu");
    ex.id = "q-1";
    ex.language = "fr";
    const auto back = example_from_json(nlohmann::json::parse(to_json(ex).dump()));
    EXPECT_EQ(back, ex);
}

TEST(Metrics, AccuracyHandValues) {
    EXPECT_DOUBLE_EQ(accuracy({"a", "b"}, {"a", "b"}).value, 1.0);
    EXPECT_DOUBLE_EQ(accuracy({"a", "b"}, {"c", "d"}).value, 0.0);
    const auto r = accuracy({"a", " b ", "c", "d"}, {"a", "b", "c", "x"});
    EXPECT_DOUBLE_EQ(r.value, 0.75);
    EXPECT_EQ(r.total, 4u);
    EXPECT_THROW(accuracy({"a"}, {}), Error);
}

TEST(Metrics, QaHandValues) {
    const auto same = qa_metrics("The Eiffel Tower", std::vector<std::string>{"the eiffel tower."});
    EXPECT_DOUBLE_EQ(same.f1.value, 1.0);
    EXPECT_DOUBLE_EQ(same.em.value, 1.0);
    const auto half = qa_metrics("a b", std::vector<std::string>{"b c"});
    // "a" is an article and is dropped: pred {b}, gold {b, c}: P=1, R=0.5.
    EXPECT_NEAR(half.f1.value, 2.0 / 3.0, 1e-12);
    const auto overlap = qa_metrics("x y", std::vector<std::string>{"y z"});
    EXPECT_DOUBLE_EQ(overlap.f1.value, 0.5);
    EXPECT_DOUBLE_EQ(overlap.em.value, 0.0);
    const auto empty = qa_metrics("", std::vector<std::string>{"gold"});
    EXPECT_DOUBLE_EQ(empty.f1.value, 0.0);
    EXPECT_DOUBLE_EQ(empty.em.value, 0.0);
    const auto best = qa_metrics("red", std::vector<std::string>{"blue", "red"});
    EXPECT_DOUBLE_EQ(best.em.value, 1.0);
    EXPECT_THROW(qa_metrics("x", std::vector<std::string>{}), Error);
}

TEST(Metrics, QaDatasetMeansAndF1AtLeastEm) {
    std::mt19937_64 eng(4);
    const std::vector<std::string> words{"a", "cat", "dog", "the", "sat", "mat", "red", "Cat!"};
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<std::string> preds;
        std::vector<std::vector<std::string>> golds;
        for (int i = 0; i < 10; ++i) {
            auto phrase = [&] {
                std::string s;
                for (int k = 0, n = static_cast<int>(eng() % 4); k < n; ++k) s += words[eng() % words.size()] + " ";
                return s;
            };
            preds.push_back(phrase());
            golds.push_back({phrase() + "x", phrase()});
        }
        const auto s = qa_metrics(preds, golds);
        EXPECT_GE(s.f1.value, s.em.value);
        EXPECT_GE(s.em.value, 0.0);
        EXPECT_LE(s.f1.value, 1.0);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const auto e = qa_metrics(preds[i], golds[i]);
            EXPECT_GE(e.f1.value, e.em.value);
        }
    }
}

TEST(Metrics, EntityF1HandValues) {
    const std::vector<EntitySpan> gold{{"PER", "Ana", 0}, {"LOC", "Lyon", 1}};
    EXPECT_DOUBLE_EQ(entity_f1(gold, gold).value, 1.0);
    EXPECT_DOUBLE_EQ(entity_f1({}, gold).value, 0.0);
    const auto r = entity_f1({{"PER", "Ana", 0}, {"ORG", "Lyon", 1}}, gold);
    EXPECT_EQ(r.tp, 1u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_EQ(r.fn, 1u);
    EXPECT_DOUBLE_EQ(r.value, 0.5);
    EXPECT_DOUBLE_EQ(entity_f1(std::vector<EntitySpan>{}, std::vector<EntitySpan>{}).value, 1.0);
}

TEST(Metrics, EntityF1IsMicroAveragedOverMultisets) {
    const std::vector<std::vector<EntitySpan>> gold{{{"PER", "Ana", 0}, {"PER", "Ana", 1}}, {{"LOC", "Lyon", 0}}};
    const std::vector<std::vector<EntitySpan>> pred{{{"PER", "Ana", 0}}, {{"LOC", "Lyon", 0}, {"LOC", "Lyon", 1}}};
    const auto r = entity_f1(pred, gold);
    EXPECT_EQ(r.tp, 2u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_EQ(r.fn, 1u);
    EXPECT_DOUBLE_EQ(r.value, 4.0 / 6.0);
    EXPECT_THROW(entity_f1(pred, {}), Error);
}

TEST(Metrics, JsonCarriesCounts) {
    const auto j = accuracy({"a", "b"}, {"a", "c"}).to_json();
    EXPECT_EQ(j.at("metric"), "accuracy");
    EXPECT_DOUBLE_EQ(j.at("score").get<double>(), 50.0);
    EXPECT_EQ(j.at("total"), 2);
}
