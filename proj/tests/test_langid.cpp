#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"

#include "forge/io.hpp"
#include "forge/langid.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

std::vector<LabeledText> load_labeled(const std::string &rel) {
    std::vector<LabeledText> out;
    io::LineReader r(forge_test::fixture(rel));
    while (auto line = r.next()) {
        if (line->empty()) continue;
        const auto j = nlohmann::json::parse(*line);
        out.push_back({j.at("language").get<std::string>(), j.at("text").get<std::string>()});
    }
    return out;
}

const NgramLanguageModel &fixture_model() {
    static const NgramLanguageModel m = NgramLanguageModel::train(load_labeled("langid/train.jsonl"));
    return m;
}

} // namespace

TEST(Langid, PosteriorIsNormalized) {
    const auto &m = fixture_model();
    for (const char *text : {"Hello world", "Всеобщая декларация", "人権", "?", "zzzz qqqq"}) {
        double sum = 0;
        for (const auto &[lang, p] : m.posterior(text)) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12) << text;
    }
}

TEST(Langid, ClassifiesObviousCases) {
    const auto &m = fixture_model();
    EXPECT_EQ(m.classify("Everyone has the right to freedom of thought and to education.").language, "en");
    EXPECT_EQ(m.classify("Jeder hat das Recht auf Bildung und auf Freiheit der Meinung.").language, "de");
    EXPECT_EQ(m.classify("Все люди рождаются свободными и равными в своем достоинстве.").language, "ru");
    EXPECT_EQ(m.classify("すべての人間は、生まれながらにして自由であり、尊厳と権利とについて平等である。").language, "ja");
}

TEST(Langid, TiesGoToSmallestCode) {
    const std::vector<LabeledText> corpus{{"zz", "abc abc"}, {"aa", "abc abc"}};
    const auto m = NgramLanguageModel::train(corpus);
    const auto p = m.classify("abc");
    EXPECT_EQ(p.language, "aa");
    EXPECT_DOUBLE_EQ(p.confidence, 0.5);
}

TEST(Langid, HeldOutAccuracyAtLeast95Percent) {
    const auto &m = fixture_model();
    const auto held = load_labeled("langid/heldout.jsonl");
    ASSERT_GE(m.languages().size(), 20u);
    std::size_t ok = 0;
    for (const auto &h : held) {
        ASSERT_GE(utf8::length(h.text), 200u);
        ok += m.classify(h.text).language == h.language;
    }
    EXPECT_GE(static_cast<double>(ok) / held.size(), 0.95);
}

TEST(Langid, SerializeRoundTripPreservesPredictions) {
    const auto &m = fixture_model();
    const std::string bytes = m.serialize();
    const auto back = NgramLanguageModel::deserialize(bytes);
    EXPECT_EQ(back.serialize(), bytes);
    for (const auto &h : load_labeled("langid/heldout.jsonl")) {
        const auto a = m.classify(h.text);
        const auto b = back.classify(h.text);
        ASSERT_EQ(a.language, b.language);
        ASSERT_EQ(a.confidence, b.confidence);
    }
}

TEST(Langid, TrainingIsDeterministic) {
    const auto a = NgramLanguageModel::train(load_labeled("langid/train.jsonl"));
    EXPECT_EQ(a.serialize(), fixture_model().serialize());
}

TEST(Langid, Errors) {
    EXPECT_THROW(NgramLanguageModel::train(std::vector<LabeledText>{}), Error);
    EXPECT_THROW(NgramLanguageModel::train(std::vector<LabeledText>{{"en", "x"}}, 0), Error);
    EXPECT_THROW(NgramLanguageModel::train(std::vector<LabeledText>{{"en", "x"}}, 3, 0.0), Error);
    EXPECT_THROW(fixture_model().posterior("   "), Error);
    EXPECT_THROW(NgramLanguageModel::deserialize("{\"format\":\"other\"}"), Error);
    EXPECT_THROW(NgramLanguageModel::deserialize("not json"), Error);
}
