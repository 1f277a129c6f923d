#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smartcrop/decode.h"
#include "smartcrop/rng.h"
#include "smartcrop/vocab.h"

namespace smartcrop {

// One evaluation item: a tokenized prompt and the reference answer
// (without the trailing EoS, which the canvas layout supplies).
struct Instance {
    std::string id;
    std::vector<int> prompt;
    std::vector<int> answer;
};

// Answer plus its EoS marker, measured from the canvas start.
std::size_t true_total_length(const Instance& instance);

// A named task: canvas and schedule defaults plus the generator
// parameters that produce its instances.
struct TaskSpec {
    std::string name;
    std::size_t l_new = 0;
    std::size_t steps = 0;
    ScheduleMode schedule_mode = ScheduleMode::kPreserveDensity;
    std::string metric;  // "exact_match" or "rouge1"
    std::size_t k_min = 0;   // copy presets only
    std::size_t k_max = 0;
    std::size_t k_pad = 0;   // fixed letter-field width in copy prompts
};

// Presets: "copyk" (echo 1-24 letters, L_new 64, T 64), "copyk-long"
// (echo 8-30 letters on a 160-token window, the long-canvas stress case),
// "arith" (two-digit addition, L_new 32, T 32), "verbose-qa" (short
// answer on a wide window, preserve-steps, rouge1).
TaskSpec task_preset(const std::string& name);
std::vector<std::string> task_preset_names();

// Deterministic generators: same vocab, rng state, and count give the
// same instances. Copy prompts are a '?' anchor, k letters, '.' filler
// out to k_pad, then ':'. The fixed width keeps the copy offset
// constant, and the anchor keeps position 0 free of letter content, so
// a small bidirectional model can learn the task.
std::vector<Instance> gen_copyk(const Vocabulary& vocab, Rng& rng, std::size_t n,
                                std::size_t k_min, std::size_t k_max, std::size_t k_pad);
std::vector<Instance> gen_arith(const Vocabulary& vocab, Rng& rng, std::size_t n);
std::vector<Instance> gen_verbose_qa(const Vocabulary& vocab, Rng& rng, std::size_t n);

// Dispatches on spec.name with the spec's generator parameters.
std::vector<Instance> generate_instances(const TaskSpec& spec, const Vocabulary& vocab,
                                         std::uint64_t seed, std::size_t n);

// 1.0 on token-exact equality, else 0.0.
double exact_match(const std::vector<int>& candidate, const std::vector<int>& reference);

// Unigram F1 with clipped counts. Two empty sequences score 1.0, a
// single empty side 0.0.
double rouge1_f(const std::vector<int>& candidate, const std::vector<int>& reference);

// Dispatch by metric name; throws std::invalid_argument on unknown names.
double score_answer(const std::string& metric, const std::vector<int>& candidate,
                    const std::vector<int>& reference);

// One JSON object per line: {"id": ..., "prompt": [...], "answer": [...]}.
void write_instances_jsonl(const std::vector<Instance>& instances, std::ostream& os);
std::vector<Instance> read_instances_jsonl(std::istream& is);

}  // namespace smartcrop
