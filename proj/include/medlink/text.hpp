#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medlink {

using TokenSequence = std::vector<std::string>;

// Maps numeral surface forms (arabic digits, roman numerals, ordinal/cardinal
// spellings) to spelled-out English words. Keys and images are stored
// lowercase; lookups happen after lowercasing, so roman numerals match
// case-insensitively and only as whole tokens.
class NumeralDictionary {
 public:
    static NumeralDictionary load(const std::string& path);
    static NumeralDictionary from_pairs(
        const std::vector<std::pair<std::string, std::string>>& pairs);

    // Returns the replacement tokens for `token`, or empty if no entry.
    const std::vector<std::string>* find(const std::string& token) const;
    std::size_t size() const { return entries_.size(); }

 private:
    void insert(const std::string& form, const std::string& image);
    void validate() const;
    std::map<std::string, std::vector<std::string>> entries_;
};

// Punctuation and symbols (Unicode categories P*, S*, Z*) become spaces, the
// text is lowercased, split on whitespace, and each token is replaced by its
// numeral-dictionary image when present. Empty input yields an empty sequence.
TokenSequence normalize_text(std::string_view raw, const NumeralDictionary& numerals);

bool is_space_class_cp(char32_t cp);
char32_t lower_cp(char32_t cp);

enum class AbbrevSource { GlobalDictionary, DocumentLocal };

struct AbbrevEntry {
    std::string long_form;
    AbbrevSource source = AbbrevSource::GlobalDictionary;
};

// Short forms are case-sensitive; a short form never maps to itself.
class AbbreviationDictionary {
 public:
    static AbbreviationDictionary load(const std::string& path);

    void add(const std::string& short_form, const std::string& long_form,
             AbbrevSource source);
    const AbbrevEntry* find(const std::string& short_form) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, AbbrevEntry>& entries() const { return entries_; }

 private:
    std::map<std::string, AbbrevEntry> entries_;
};

// Harvests document-local "Long Form (SHORT)" definitions. SHORT must be a
// single parenthesized token of 2-10 codepoints, at least half of them
// uppercase or digits. The long form is taken as one preceding token per
// uppercase letter of SHORT (at most 8), and is accepted when the greedy
// left-to-right pass matches at least one token initial into SHORT.
AbbreviationDictionary detect_local_abbreviations(std::string_view text);

// Replaces the first matching short form in `surface`: the whole surface
// first, then token by token. Local entries win over global ones. Returns the
// surface unchanged when nothing matches.
std::string expand_abbreviation_string(std::string_view surface,
                                       const AbbreviationDictionary& local,
                                       const AbbreviationDictionary& global);

}  // namespace medlink
