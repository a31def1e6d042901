#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "json.hpp"

#include "forge/corruption.hpp"
#include "forge/error.hpp"
#include "forge/mixture.hpp"

namespace forge {

struct SchedulePlan {
    std::uint64_t warmup_steps = 10'000;
    std::uint64_t total_steps = 1'000'000;
    std::uint64_t batch_size = 1024;
    std::uint64_t seq_len = 1024;
    double finetune_lr = 0.001;
    double finetune_dropout = 0.1;

    void validate() const {
        if (warmup_steps == 0 || total_steps == 0 || batch_size == 0 || seq_len == 0)
            throw Error("schedule fields must be positive");
        if (warmup_steps > total_steps) throw Error("warmup_steps exceeds total_steps");
        if (!(finetune_lr > 0.0)) throw Error("finetune_lr must be positive");
        if (!(finetune_dropout >= 0.0 && finetune_dropout < 1.0)) throw Error("finetune_dropout must be in [0,1)");
    }
};

// Inverse square-root schedule: 1/sqrt(max(step, warmup)). Constant through
// warm-up, then decays.
inline double learning_rate(std::uint64_t step, std::uint64_t warmup_steps) {
    if (warmup_steps < 1) throw Error("warmup_steps must be >= 1");
    return 1.0 / std::sqrt(static_cast<double>(std::max(step, warmup_steps)));
}

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw Error("token budget overflows 64 bits");
    return out;
}

// Tokens seen in pre-training: steps x batch x sequence length.
inline std::uint64_t token_budget(const SchedulePlan &plan) {
    plan.validate();
    return checked_mul(checked_mul(plan.total_steps, plan.batch_size), plan.seq_len);
}

// Training-config document for an external trainer. Everything beyond the
// schedule itself is recorded for reference only.
inline nlohmann::ordered_json training_config(const SchedulePlan &plan, const CorruptionParams &corruption,
                                              double alpha = kDefaultAlpha) {
    plan.validate();
    nlohmann::ordered_json j;
    j["format"] = "forge-plan";
    j["version"] = 1;
    nlohmann::ordered_json pre;
    pre["total_steps"] = plan.total_steps;
    pre["batch_size"] = plan.batch_size;
    pre["seq_len"] = plan.seq_len;
    pre["token_budget"] = token_budget(plan);
    pre["learning_rate"] = {{"schedule", "inverse_sqrt"},
                            {"formula", "1/sqrt(max(step, warmup_steps))"},
                            {"warmup_steps", plan.warmup_steps},
                            {"at_step_0", learning_rate(0, plan.warmup_steps)},
                            {"at_warmup_end", learning_rate(plan.warmup_steps, plan.warmup_steps)},
                            {"at_final_step", learning_rate(plan.total_steps, plan.warmup_steps)}};
    pre["dropout"] = 0.0;
    pre["objective"] = {{"type", "span_corruption"},
                        {"mask_rate", corruption.mask_rate},
                        {"mean_span_len", corruption.mean_span_len}};
    pre["language_sampling_alpha"] = alpha;
    j["pretraining"] = std::move(pre);
    j["finetuning"] = {{"learning_rate", plan.finetune_lr},
                       {"schedule", "constant"},
                       {"dropout", plan.finetune_dropout},
                       {"checkpoint_every_steps", 200}};
    j["tokenizer"] = {{"vocab_size", 250000}, {"character_coverage", 0.99999}, {"byte_fallback", true}};
    j["model"] = {{"feed_forward", "gated-gelu"}};
    return j;
}

} // namespace forge
