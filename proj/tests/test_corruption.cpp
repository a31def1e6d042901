#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "forge/corruption.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

const Vocabulary &vocab() {
    static const Vocabulary v = Vocabulary::load(forge_test::fixture("vocab/test.vocab"));
    return v;
}

// Ids below the sentinel range, never pad or eos.
std::vector<TokenId> random_ids(std::mt19937_64 &eng, std::size_t n) {
    std::vector<TokenId> ids(n);
    const auto hi = static_cast<std::uint64_t>(vocab().sentinel_id(vocab().sentinel_count() - 1));
    for (auto &id : ids) id = static_cast<TokenId>(3 + eng() % (hi - 3));
    return ids;
}

std::vector<TokenId> spliced(const CorruptionExample &ex) {
    return forge_test::splice(ex.input_ids, ex.target_ids, [](int id) { return vocab().is_sentinel(id); },
                              vocab().eos_id());
}

void check_plan(const SpanPlan &plan, std::size_t n) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < plan.spans.size(); ++k) {
        const Span &s = plan.spans[k];
        ASSERT_GE(s.length, 1u);
        ASSERT_LE(s.start + s.length, n);
        if (k > 0) {
            const Span &p = plan.spans[k - 1];
            ASSERT_GT(s.start, p.start + p.length) << "spans must be separated by a kept token";
        }
        total += s.length;
    }
    ASSERT_EQ(total, plan.num_noise);
    ASSERT_LT(total, n);
}

} // namespace

TEST(PlanSpans, ShortSequenceGetsOneSpanOfThree) {
    auto eng = rng::make_engine(1, "t");
    const auto plan = plan_spans(20, CorruptionParams{}, eng);
    EXPECT_EQ(plan.num_noise, 3u);
    ASSERT_EQ(plan.spans.size(), 1u);
    EXPECT_EQ(plan.spans[0].length, 3u);
    EXPECT_FALSE(plan.reduced);
}

TEST(PlanSpans, FullLengthCounts) {
    auto eng = rng::make_engine(1, "t");
    const auto plan = plan_spans(1024, CorruptionParams{}, eng);
    EXPECT_EQ(plan.num_noise, 154u);
    EXPECT_EQ(plan.spans.size(), 51u);
}

TEST(PlanSpans, RoundingIsHalfAwayFromZero) {
    CorruptionParams p;
    p.mask_rate = 0.25;
    p.mean_span_len = 4.0;
    auto eng = rng::make_engine(1, "t");
    // 10 * 0.25 = 2.5 -> 3 noise tokens; 3 / 4 = 0.75 -> 1 span.
    const auto plan = plan_spans(10, p, eng);
    EXPECT_EQ(plan.num_noise, 3u);
    EXPECT_EQ(plan.spans.size(), 1u);
    // 6 * 0.25 = 1.5 -> 2; 2 / 4 = 0.5 -> 1.
    EXPECT_EQ(plan_spans(6, p, eng).num_noise, 2u);
}

TEST(PlanSpans, PropertyOverManyRandomPlans) {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 100000; ++rep) {
        const std::size_t n = 2 + gen() % 300;
        CorruptionParams p;
        p.mask_rate = 0.01 + static_cast<double>(gen() % 95) / 100.0;
        p.mean_span_len = 1.0 + static_cast<double>(gen() % 120) / 10.0;
        auto eng = rng::make_engine(rep, "plan");
        check_plan(plan_spans(n, p, eng), n);
        if (HasFatalFailure()) FAIL() << "n=" << n << " rep=" << rep;
    }
}

TEST(PlanSpans, OversizedRequestsAreReduced) {
    CorruptionParams p;
    p.mask_rate = 0.99;
    p.mean_span_len = 1.0;
    auto eng = rng::make_engine(3, "t");
    const auto plan = plan_spans(4, p, eng);
    EXPECT_TRUE(plan.reduced);
    EXPECT_EQ(plan.num_noise, 3u);
    EXPECT_EQ(plan.spans.size(), 2u); // one kept token leaves two gaps
    check_plan(plan, 4);

    p.mask_rate = 0.6;
    const auto many = plan_spans(10, p, eng); // 6 noise, 6 spans requested, only 5 gaps
    EXPECT_TRUE(many.reduced);
    EXPECT_EQ(many.spans.size(), 5u);
    check_plan(many, 10);
}

TEST(PlanSpans, TwoTokensMaskOne) {
    auto eng = rng::make_engine(3, "t");
    const auto plan = plan_spans(2, CorruptionParams{}, eng);
    EXPECT_EQ(plan.num_noise, 1u);
    check_plan(plan, 2);
}

TEST(PlanSpans, Errors) {
    auto eng = rng::make_engine(3, "t");
    EXPECT_THROW(plan_spans(1, CorruptionParams{}, eng), Error);
    CorruptionParams p;
    p.mask_rate = 0.0;
    EXPECT_THROW(plan_spans(10, p, eng), Error);
    p.mask_rate = 1.0;
    EXPECT_THROW(plan_spans(10, p, eng), Error);
    p = {};
    p.mean_span_len = 0.5;
    EXPECT_THROW(plan_spans(10, p, eng), Error);
    p = {};
    p.seq_len = 1;
    EXPECT_THROW(p.validate(), Error);
}

TEST(BuildExample, SingleSpan) {
    const auto &v = vocab();
    const TokenId a = 300, b = 301, c = 302, d = 303, e = 304;
    const TokenId s0 = v.sentinel_id(0);
    const auto ex = build_example({a, b, c, d, e}, {{1, 2}}, v);
    EXPECT_EQ(ex.input_ids, (std::vector<TokenId>{a, s0, d, e}));
    EXPECT_EQ(ex.target_ids, (std::vector<TokenId>{s0, b, c, v.eos_id()}));
    EXPECT_EQ(ex.num_spans, 1u);
    EXPECT_EQ(ex.num_noise, 2u);
}

TEST(BuildExample, SentinelsDescendInIdOrder) {
    const auto &v = vocab();
    const auto ex = build_example({300, 301, 302, 303, 304, 305}, {{0, 1}, {2, 1}, {5, 1}}, v);
    EXPECT_EQ(ex.input_ids, (std::vector<TokenId>{v.sentinel_id(0), 301, v.sentinel_id(1), 303, 304,
                                                  v.sentinel_id(2)}));
    EXPECT_EQ(ex.target_ids, (std::vector<TokenId>{v.sentinel_id(0), 300, v.sentinel_id(1), 302, v.sentinel_id(2),
                                                   305, v.eos_id()}));
    EXPECT_GT(v.sentinel_id(0), v.sentinel_id(1));
}

TEST(BuildExample, Errors) {
    const auto &v = vocab();
    EXPECT_THROW(build_example({300, 301, 302}, {{1, 0}}, v), Error);
    EXPECT_THROW(build_example({300, 301, 302}, {{2, 2}}, v), Error);
    EXPECT_THROW(build_example({300, 301, 302}, {{1, 1}, {0, 1}}, v), Error);
    std::vector<TokenId> ids(300, 300);
    std::vector<Span> spans;
    for (std::size_t k = 0; k < 101; ++k) spans.push_back({2 * k, 1});
    EXPECT_THROW(build_example(ids, spans, v), Error);
}

TEST(Corruption, LengthInvariantsAndSplice) {
    std::mt19937_64 gen(9);
    for (int rep = 0; rep < 10000; ++rep) {
        const auto ids = random_ids(gen, 2 + gen() % 600);
        const auto ex = corrupt_ids(ids, vocab(), CorruptionParams{}, static_cast<std::uint64_t>(rep));
        ASSERT_EQ(ex.input_ids.size(), ids.size() - ex.num_noise + ex.num_spans);
        ASSERT_EQ(ex.target_ids.size(), ex.num_noise + ex.num_spans + 1);
        ASSERT_EQ(spliced(ex), ids) << rep;
        std::size_t k = 0;
        for (TokenId id : ex.input_ids) {
            if (vocab().is_sentinel(id)) {
                ASSERT_EQ(id, vocab().sentinel_id(k++));
            }
        }
        ASSERT_EQ(k, ex.num_spans);
    }
}

TEST(Corruption, MaskAndSpanStatisticsAtDefaults) {
    std::mt19937_64 gen(10);
    CorruptionParams p;
    p.seed = 17;
    double masked = 0, tokens = 0, spans = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const auto ex = corrupt_ids(random_ids(gen, 1024), vocab(), p, i);
        masked += static_cast<double>(ex.num_noise);
        spans += static_cast<double>(ex.num_spans);
        tokens += 1024;
    }
    EXPECT_GE(masked / tokens, 0.145);
    EXPECT_LE(masked / tokens, 0.155);
    EXPECT_GE(masked / spans, 2.5);
    EXPECT_LE(masked / spans, 3.5);
}

TEST(Corruption, MeanSpanTen) {
    std::mt19937_64 gen(11);
    CorruptionParams p;
    p.mean_span_len = 10.0;
    p.seed = 17;
    double masked = 0, spans = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const auto ex = corrupt_ids(random_ids(gen, 1024), vocab(), p, i);
        masked += static_cast<double>(ex.num_noise);
        spans += static_cast<double>(ex.num_spans);
    }
    EXPECT_GE(masked / spans, 9.5);
    EXPECT_LE(masked / spans, 10.5);
}

TEST(Corruption, SpanLengthsVaryAcrossExamples) {
    std::mt19937_64 gen(12);
    std::set<std::size_t> lengths;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto ex = corrupt_ids(random_ids(gen, 1024), vocab(), CorruptionParams{}, i);
        std::size_t run = 0;
        for (std::size_t k = 1; k < ex.target_ids.size(); ++k) {
            if (vocab().is_sentinel(ex.target_ids[k]) || ex.target_ids[k] == vocab().eos_id()) {
                lengths.insert(run);
                run = 0;
            } else {
                ++run;
            }
        }
    }
    EXPECT_GT(lengths.size(), 8u);
    EXPECT_EQ(lengths.count(0), 0u);
}

TEST(CorruptStream, TruncatesSkipsAndCounts) {
    CorruptionParams p;
    p.seq_len = 16;
    p.seed = 4;
    const std::vector<std::string> texts{"x", "", std::string(200, 'a'), "hello world"};
    CorruptionStreamStats stats;
    const auto out = corrupt_stream(texts, vocab(), p, 2, &stats);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_FALSE(out[0]);
    EXPECT_FALSE(out[1]);
    ASSERT_TRUE(out[2]);
    EXPECT_EQ(out[2]->input_ids.size() - out[2]->num_spans + out[2]->num_noise, 16u);
    EXPECT_TRUE(out[3]);
    EXPECT_EQ(stats.examples, 2u);
    EXPECT_EQ(stats.skipped_short, 2u);
    EXPECT_EQ(stats.truncated, 1u);
    const auto original = vocab().encode(texts[3]);
    EXPECT_EQ(spliced(*out[3]), original);
}

TEST(CorruptStream, DeterministicAndThreadInvariant) {
    std::mt19937_64 gen(13);
    std::vector<std::string> texts;
    for (int i = 0; i < 500; ++i) texts.push_back(forge_test::random_unicode(gen, 200));
    CorruptionParams p;
    p.seed = 17;
    p.seq_len = 128;
    auto dump = [&](std::size_t threads) {
        std::string s;
        const auto out = corrupt_stream(texts, vocab(), p, threads);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i]) s += to_jsonl(*out[i], i) + "\n";
        return s;
    };
    const std::string one = dump(1);
    EXPECT_EQ(dump(4), one);
    EXPECT_EQ(dump(16), one);
    p.seed = 18;
    EXPECT_NE(dump(1), one);
}

TEST(CorruptStream, FirstIndexContinuesTheStream) {
    std::vector<std::string> texts(10, "the human family and their rights");
    CorruptionParams p;
    p.seed = 2;
    const auto whole = corrupt_stream(texts, vocab(), p);
    const std::vector<std::string> tail(texts.begin() + 6, texts.end());
    const auto part = corrupt_stream(tail, vocab(), p, 1, nullptr, 6);
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], whole[6 + i]);
}

TEST(CorruptStream, JsonlShape) {
    const auto ex = build_example({300, 301, 302}, {{1, 1}}, vocab());
    const auto j = nlohmann::json::parse(to_jsonl(ex, 7));
    EXPECT_EQ(j.at("index"), 7);
    EXPECT_EQ(j.at("input_ids").get<std::vector<TokenId>>(), ex.input_ids);
    EXPECT_EQ(j.at("target_ids").get<std::vector<TokenId>>(), ex.target_ids);
    EXPECT_EQ(j.at("num_spans"), 1);
}
