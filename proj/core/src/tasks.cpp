#include "smartcrop/tasks.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace smartcrop {

namespace {

std::vector<int> digit_tokens(const Vocabulary& vocab, int value) {
    if (value < 0) throw std::invalid_argument("digit_tokens: negative value");
    std::vector<int> digits;
    do {
        digits.insert(digits.begin(), vocab.digit_id(value % 10));
        value /= 10;
    } while (value > 0);
    return digits;
}

// Multi-character alphabetic tokens form the word pool; single letters,
// digits, punctuation, and the bracketed specials all fail the filter.
std::vector<int> word_pool(const Vocabulary& vocab) {
    std::vector<int> pool;
    for (int i = 0; i < vocab.size(); ++i) {
        const std::string& text = vocab.text(i);
        if (text.size() < 2) continue;
        bool alpha = true;
        for (char c : text) {
            if (!std::isalpha(static_cast<unsigned char>(c))) {
                alpha = false;
                break;
            }
        }
        if (alpha) pool.push_back(i);
    }
    if (pool.empty()) throw std::invalid_argument("word_pool: vocabulary has no word tokens");
    return pool;
}

std::string item_id(const std::string& name, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", index);
    return name + "-" + buf;
}

}  // namespace

std::size_t true_total_length(const Instance& instance) {
    return instance.prompt.size() + instance.answer.size() + 1;
}

TaskSpec task_preset(const std::string& name) {
    TaskSpec spec;
    spec.name = name;
    if (name == "copyk") {
        spec.l_new = 64;
        spec.steps = 64;
        spec.metric = "exact_match";
        spec.k_min = 1;
        spec.k_max = 24;
        spec.k_pad = 40;
    } else if (name == "copyk-long") {
        spec.l_new = 160;
        spec.steps = 160;
        spec.metric = "exact_match";
        spec.k_min = 8;
        spec.k_max = 30;
        spec.k_pad = 40;
    } else if (name == "arith") {
        spec.l_new = 32;
        spec.steps = 32;
        spec.metric = "exact_match";
    } else if (name == "verbose-qa") {
        spec.l_new = 64;
        spec.steps = 8;
        spec.schedule_mode = ScheduleMode::kPreserveSteps;
        spec.metric = "rouge1";
    } else {
        throw std::invalid_argument("unknown task preset: " + name);
    }
    return spec;
}

std::vector<std::string> task_preset_names() {
    return {"copyk", "copyk-long", "arith", "verbose-qa"};
}

std::vector<Instance> gen_copyk(const Vocabulary& vocab, Rng& rng, std::size_t n,
                                std::size_t k_min, std::size_t k_max, std::size_t k_pad) {
    if (k_min < 1 || k_max < k_min) {
        throw std::invalid_argument("gen_copyk: need 1 <= k_min <= k_max");
    }
    if (k_pad < k_max) throw std::invalid_argument("gen_copyk: k_pad must cover k_max");
    const int filler = vocab.id(".");
    const int anchor = vocab.id("?");
    std::vector<Instance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = k_min + rng.uniform_below(k_max - k_min + 1);
        Instance inst;
        inst.answer.reserve(k);
        for (std::size_t j = 0; j < k; ++j) {
            inst.answer.push_back(vocab.first_letter_id() +
                                  static_cast<int>(rng.uniform_below(vocab.letter_count())));
        }
        // The anchor keeps position 0 content-free: bidirectional
        // attention tends to park spare probability mass on the first
        // position, which fights with reading a letter stored there.
        inst.prompt.reserve(k_pad + 2);
        inst.prompt.push_back(anchor);
        inst.prompt.insert(inst.prompt.end(), inst.answer.begin(), inst.answer.end());
        inst.prompt.resize(k_pad + 1, filler);
        inst.prompt.push_back(vocab.sep_id());
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> gen_arith(const Vocabulary& vocab, Rng& rng, std::size_t n) {
    std::vector<Instance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = static_cast<int>(rng.uniform_below(50));
        const int b = static_cast<int>(rng.uniform_below(50));
        Instance inst;
        inst.prompt = digit_tokens(vocab, a);
        inst.prompt.push_back(vocab.plus_id());
        for (int t : digit_tokens(vocab, b)) inst.prompt.push_back(t);
        inst.prompt.push_back(vocab.equals_id());
        inst.answer = digit_tokens(vocab, a + b);
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> gen_verbose_qa(const Vocabulary& vocab, Rng& rng, std::size_t n) {
    const std::vector<int> pool = word_pool(vocab);
    std::vector<Instance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        inst.prompt.push_back(vocab.id("question"));
        inst.prompt.push_back(vocab.sep_id());
        int first_word = -1;
        for (int j = 0; j < 4; ++j) {
            const int w = pool[rng.uniform_below(pool.size())];
            if (j == 0) first_word = w;
            inst.prompt.push_back(w);
        }
        inst.prompt.push_back(vocab.id("?"));
        inst.answer = {vocab.id("answer"), vocab.id("is"), first_word};
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> generate_instances(const TaskSpec& spec, const Vocabulary& vocab,
                                         std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<Instance> out;
    if (spec.name == "copyk" || spec.name == "copyk-long") {
        out = gen_copyk(vocab, rng, n, spec.k_min, spec.k_max, spec.k_pad);
    } else if (spec.name == "arith") {
        out = gen_arith(vocab, rng, n);
    } else if (spec.name == "verbose-qa") {
        out = gen_verbose_qa(vocab, rng, n);
    } else {
        throw std::invalid_argument("generate_instances: unknown task " + spec.name);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = item_id(spec.name, i);
    return out;
}

double exact_match(const std::vector<int>& candidate, const std::vector<int>& reference) {
    return candidate == reference ? 1.0 : 0.0;
}

double rouge1_f(const std::vector<int>& candidate, const std::vector<int>& reference) {
    if (candidate.empty() && reference.empty()) return 1.0;
    if (candidate.empty() || reference.empty()) return 0.0;
    std::unordered_map<int, int> cand_counts;
    std::unordered_map<int, int> ref_counts;
    for (int t : candidate) ++cand_counts[t];
    for (int t : reference) ++ref_counts[t];
    double overlap = 0.0;
    for (const auto& [token, count] : cand_counts) {
        auto it = ref_counts.find(token);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    const double precision = overlap / static_cast<double>(candidate.size());
    const double recall = overlap / static_cast<double>(reference.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double score_answer(const std::string& metric, const std::vector<int>& candidate,
                    const std::vector<int>& reference) {
    if (metric == "exact_match") return exact_match(candidate, reference);
    if (metric == "rouge1") return rouge1_f(candidate, reference);
    throw std::invalid_argument("unknown metric: " + metric);
}

void write_instances_jsonl(const std::vector<Instance>& instances, std::ostream& os) {
    for (const Instance& inst : instances) {
        nlohmann::json j = {{"id", inst.id}, {"prompt", inst.prompt}, {"answer", inst.answer}};
        os << j.dump() << '\n';
    }
}

std::vector<Instance> read_instances_jsonl(std::istream& is) {
    std::vector<Instance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            Instance inst;
            inst.id = j.at("id").get<std::string>();
            inst.prompt = j.at("prompt").get<std::vector<int>>();
            inst.answer = j.at("answer").get<std::vector<int>>();
            out.push_back(std::move(inst));
        } catch (const std::exception& e) {
            throw std::runtime_error("read_instances_jsonl: line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return out;
}

}  // namespace smartcrop
