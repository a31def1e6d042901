// Tokenizes a line of text with a forge vocabulary and shows one span
// corruption example for it.
//   corrupt_text <vocab> <seed> <text...>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "forge/corruption.hpp"

int main(int argc, char **argv) {
    if (argc < 4) {
        std::fprintf(stderr, "usage: %s <vocab> <seed> <text...>\n", argv[0]);
        return 2;
    }
    try {
        const auto vocab = forge::Vocabulary::load(argv[1]);
        std::string text = argv[3];
        for (int i = 4; i < argc; ++i) text += std::string(" ") + argv[i];

        forge::CorruptionParams params;
        params.seed = std::strtoull(argv[2], nullptr, 10);
        const auto ids = vocab.encode(text);
        if (ids.size() < 2) {
            std::fprintf(stderr, "text encodes to fewer than two tokens\n");
            return 1;
        }
        const auto ex = forge::corrupt_ids(ids, vocab, params, 0);

        auto show = [&](const char *name, const std::vector<forge::TokenId> &seq) {
            std::cout << name << ": ";
            for (auto id : seq) std::cout << id << ' ';
            std::cout << "\n  " << vocab.decode(seq) << "\n";
        };
        show("tokens", ids);
        show("input ", ex.input_ids);
        show("target", ex.target_ids);
        std::cout << ex.num_spans << " span(s), " << ex.num_noise << " of " << ids.size() << " tokens masked\n";
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
