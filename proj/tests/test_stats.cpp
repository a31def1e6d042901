#include <gtest/gtest.h>

#include <random>

#include "forge/stats.hpp"

using namespace forge;

namespace {

CleanPage page(const std::string &lang, std::vector<std::string> lines) {
    CleanPage p;
    p.url = "u";
    p.language = lang;
    p.lines = std::move(lines);
    return p;
}

std::vector<CleanPage> random_pages(std::mt19937_64 &eng, int n) {
    const char *langs[] = {"aa", "bb", "cc", "dd"};
    std::vector<CleanPage> out;
    for (int i = 0; i < n; ++i) {
        std::vector<std::string> lines;
        for (int k = 0; k < static_cast<int>(eng() % 4); ++k) lines.push_back(std::string(eng() % 30, 'x') + " y");
        out.push_back(page(langs[eng() % 4], lines));
    }
    return out;
}

} // namespace

TEST(Stats, AccumulateCountsPagesTokensBytes) {
    const std::vector<CleanPage> pages{page("aa", {"x y z"}), page("aa", {"  w  "}), page("bb", {"héllo wörld"})};
    const auto s = accumulate(pages);
    EXPECT_EQ(s.languages.at("aa").pages, 2u);
    EXPECT_EQ(s.languages.at("aa").tokens, 4u);
    EXPECT_EQ(s.languages.at("aa").bytes, 10u);
    EXPECT_EQ(s.languages.at("bb").tokens, 2u);
    EXPECT_EQ(s.languages.at("bb").bytes, std::string("héllo wörld").size());
    const auto t = s.totals();
    EXPECT_EQ(t.pages, 3u);
    EXPECT_EQ(t.tokens, 6u);
}

TEST(Stats, WhitespaceTokensIncludeUnicodeSpaces) {
    EXPECT_EQ(LanguageStats::count_whitespace_tokens("a\xE3\x80\x80" "b\tc"), 3u);
    EXPECT_EQ(LanguageStats::count_whitespace_tokens(""), 0u);
    EXPECT_EQ(LanguageStats::count_whitespace_tokens("日本語の文"), 1u);
}

TEST(Stats, EmptyStreamIsZero) {
    const auto s = accumulate(std::vector<CleanPage>{});
    EXPECT_TRUE(s.languages.empty());
    EXPECT_EQ(s.totals(), LanguageCounts{});
}

TEST(Stats, PageWithoutLanguageIsAnError) {
    LanguageStats s;
    EXPECT_THROW(s.add(page("", {"x"})), Error);
}

TEST(Stats, MergeEqualsAccumulateOverUnion) {
    std::mt19937_64 eng(4);
    for (int rep = 0; rep < 200; ++rep) {
        const auto pages = random_pages(eng, 40);
        const std::size_t cut = eng() % (pages.size() + 1);
        const std::vector<CleanPage> a(pages.begin(), pages.begin() + cut), b(pages.begin() + cut, pages.end());
        auto sa = accumulate(a);
        auto sb = accumulate(b);
        const auto whole = accumulate(pages);
        auto ab = sa;
        ab.merge(sb);
        auto ba = sb;
        ba.merge(sa);
        EXPECT_EQ(ab, whole);
        EXPECT_EQ(ba, whole);
    }
}

TEST(Stats, MergeIsAssociative) {
    std::mt19937_64 eng(5);
    const auto a = accumulate(random_pages(eng, 10));
    const auto b = accumulate(random_pages(eng, 10));
    const auto c = accumulate(random_pages(eng, 10));
    auto left = a;
    left.merge(b).merge(c);
    auto bc = b;
    bc.merge(c);
    auto right = a;
    right.merge(bc);
    EXPECT_EQ(left, right);
}

TEST(Stats, InclusionThresholdBoundary) {
    LanguageStats s;
    s.languages["at"].pages = 10000;
    s.languages["below"].pages = 9999;
    s.languages["zero"].pages = 0;
    EXPECT_EQ(apply_inclusion_threshold(s), (std::set<std::string>{"at"}));
    EXPECT_EQ(apply_inclusion_threshold(s, 0), (std::set<std::string>{"at", "below", "zero"}));
}

TEST(Stats, HistogramColumnsAndOrder) {
    LanguageStats s;
    s.languages["aa"].pages = 10;
    s.languages["bb"].pages = 1000;
    s.languages["cc"].pages = 10;
    const std::vector<double> alphas{0.2, 0.3, 0.7};
    const auto rows = export_histogram(s, alphas);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].language, "bb");
    EXPECT_EQ(rows[1].language, "aa");
    EXPECT_EQ(rows[2].language, "cc");
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        double sum = 0;
        for (const auto &r : rows) {
            ASSERT_EQ(r.percent.size(), 3u);
            sum += r.percent[k];
        }
        EXPECT_NEAR(sum, 100.0, 1e-9);
        EXPECT_DOUBLE_EQ(rows[1].percent[k], rows[2].percent[k]);
    }
    const std::string tsv = histogram_tsv(rows, alphas);
    EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "language\tpages\tpct_alpha_0.2\tpct_alpha_0.3\tpct_alpha_0.7");
}

TEST(Stats, HistogramSingleAndSymmetricLanguages) {
    LanguageStats one;
    one.languages["aa"].pages = 7;
    for (const auto &r : export_histogram(one, {0.2, 0.3, 0.7}))
        for (double p : r.percent) EXPECT_DOUBLE_EQ(p, 100.0);
    LanguageStats two;
    two.languages["aa"].pages = 5;
    two.languages["bb"].pages = 5;
    for (const auto &r : export_histogram(two, {0.2, 1.0}))
        for (double p : r.percent) EXPECT_DOUBLE_EQ(p, 50.0);
}

TEST(Stats, HistogramErrors) {
    EXPECT_THROW(export_histogram(LanguageStats{}, {0.3}), Error);
    LanguageStats s;
    s.languages["aa"].pages = 1;
    EXPECT_THROW(export_histogram(s, {0.0}), Error);
}

TEST(Stats, JsonRoundTrip) {
    std::mt19937_64 eng(6);
    const auto s = accumulate(random_pages(eng, 50));
    const auto inc = apply_inclusion_threshold(s, 12);
    const auto path = std::filesystem::temp_directory_path() / ("forge_stats_" + std::to_string(::getpid()) + ".json");
    io::write_file(path, to_json(s, &inc).dump(2));
    const auto back = read_stats(path);
    EXPECT_EQ(back.stats, s);
    EXPECT_TRUE(back.has_included);
    EXPECT_EQ(back.included, inc);
    std::filesystem::remove(path);
}
