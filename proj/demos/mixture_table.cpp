// Prints sampling percentages for a few page counts at several exponents.
//   mixture_table [alpha ...]

#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "forge/mixture.hpp"

int main(int argc, char **argv) {
    std::vector<double> alphas;
    for (int i = 1; i < argc; ++i) alphas.push_back(std::strtod(argv[i], nullptr));
    if (alphas.empty()) alphas = {0.2, 0.3, 0.7, 1.0};

    // Illustrative page counts spanning high, mid and low resource languages.
    const std::map<std::string, std::uint64_t> pages{
        {"en", 3'067'000'000}, {"ru", 756'000'000}, {"de", 347'000'000}, {"ja", 319'000'000},
        {"hi", 15'000'000},    {"sw", 1'000'000},   {"yo", 46'000},
    };

    std::printf("%-6s %14s", "lang", "pages");
    for (double a : alphas) {
        char head[32];
        std::snprintf(head, sizeof head, "alpha=%g", a);
        std::printf("  %11s", head);
    }
    std::printf("\n");
    std::vector<forge::MixtureSpec> specs;
    for (double a : alphas) specs.push_back(forge::compute_sampling_probs(pages, a));
    for (const auto &[lang, n] : pages) {
        std::printf("%-6s %14llu", lang.c_str(), static_cast<unsigned long long>(n));
        for (const auto &s : specs) std::printf("  %10.4f%%", 100.0 * s.probs.at(lang));
        std::printf("\n");
    }
    return 0;
}
