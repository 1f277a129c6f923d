#include "smartcrop/vocab.h"

#include <stdexcept>

namespace smartcrop {

Vocabulary::Vocabulary(std::vector<std::string> tokens, int mask_id, int eos_id)
    : tokens_(std::move(tokens)), mask_id_(mask_id), eos_id_(eos_id) {
    if (mask_id_ == eos_id_) throw std::invalid_argument("Vocabulary: mask_id must differ from eos_id");
    if (mask_id_ < 0 || mask_id_ >= size() || eos_id_ < 0 || eos_id_ >= size()) {
        throw std::invalid_argument("Vocabulary: reserved ids must be < vocabulary size");
    }
    for (int i = 0; i < size(); ++i) {
        if (!by_text_.emplace(tokens_[static_cast<std::size_t>(i)], i).second) {
            throw std::invalid_argument("Vocabulary: duplicate token text " + tokens_[static_cast<std::size_t>(i)]);
        }
    }
    if (by_text_.count("0")) first_digit_ = by_text_.at("0");
    if (by_text_.count(":")) sep_id_ = by_text_.at(":");
    if (by_text_.count("+")) plus_id_ = by_text_.at("+");
    if (by_text_.count("=")) equals_id_ = by_text_.at("=");
    if (by_text_.count("a")) {
        first_letter_ = by_text_.at("a");
        while (letter_count_ < 26 &&
               by_text_.count(std::string(1, static_cast<char>('a' + letter_count_)))) {
            ++letter_count_;
        }
    }
}

Vocabulary Vocabulary::toy() {
    std::vector<std::string> t;
    t.reserve(64);
    t.push_back("<mask>");
    t.push_back("<eos>");
    for (char c = '0'; c <= '9'; ++c) t.push_back(std::string(1, c));
    t.push_back(":");
    t.push_back("+");
    t.push_back("=");
    t.push_back(".");
    t.push_back("?");
    for (char c = 'a'; c <= 'z'; ++c) t.push_back(std::string(1, c));
    const char* words[] = {"the",  "is",    "was",   "of",     "and",  "to",   "in",
                           "it",   "story", "answer", "question", "time", "place", "thing",
                           "good", "long",  "short", "very",   "end",  "tell", "about"};
    for (const char* w : words) t.push_back(w);
    return Vocabulary(std::move(t), 0, 1);
}

const std::string& Vocabulary::text(int id) const {
    if (id < 0 || id >= size()) throw std::invalid_argument("Vocabulary: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::id(const std::string& text) const {
    auto it = by_text_.find(text);
    if (it == by_text_.end()) throw std::invalid_argument("Vocabulary: unknown token '" + text + "'");
    return it->second;
}

int Vocabulary::digit_id(int digit) const {
    if (digit < 0 || digit > 9 || first_digit_ < 0) throw std::invalid_argument("Vocabulary: bad digit");
    return first_digit_ + digit;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.push_back(id(text.substr(i, j - i)));
        i = j;
    }
    return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids, const std::string& sep) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += sep;
        out += text(ids[i]);
    }
    return out;
}

}  // namespace smartcrop
