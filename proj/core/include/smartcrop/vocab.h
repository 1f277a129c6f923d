#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace smartcrop {

// Token inventory for the synthetic setting: reserved ids plus a fixed
// text<->id mapping. The toy vocabulary has exactly 64 tokens.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> tokens, int mask_id, int eos_id);

    // The built-in 64-token vocabulary: <mask>, <eos>, digits, a handful
    // of punctuation tokens, letters a-z and a small word list.
    static Vocabulary toy();

    int size() const { return static_cast<int>(tokens_.size()); }
    int mask_id() const { return mask_id_; }
    int eos_id() const { return eos_id_; }

    const std::string& text(int id) const;
    int id(const std::string& text) const;           // throws on unknown token
    bool contains(const std::string& text) const { return by_text_.count(text) != 0; }

    // First/last ids of the letter block, used as the scripted oracle's
    // default filler set and as copy-task payloads.
    int first_letter_id() const { return first_letter_; }
    int letter_count() const { return letter_count_; }
    int digit_id(int digit) const;                   // 0..9
    int sep_id() const { return sep_id_; }
    int plus_id() const { return plus_id_; }
    int equals_id() const { return equals_id_; }

    // Encodes whitespace-separated token text. Throws on unknown tokens.
    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids, const std::string& sep = " ") const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> by_text_;
    int mask_id_ = 0;
    int eos_id_ = 1;
    int first_digit_ = -1;
    int sep_id_ = -1;
    int plus_id_ = -1;
    int equals_id_ = -1;
    int first_letter_ = -1;
    int letter_count_ = 0;
};

}  // namespace smartcrop
