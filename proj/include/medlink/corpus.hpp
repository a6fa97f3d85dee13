#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "medlink/text.hpp"
#include "medlink/util.hpp"

namespace medlink {

// Reserved gold marker for unlinkable mentions; forbidden as an entity id.
inline constexpr const char* kNilMarker = "NIL";

struct EntityName {
    std::string raw;
    TokenSequence tokens;  // normalized form
    bool augmented = false;
};

struct Entity {
    std::string id;
    std::vector<EntityName> names;  // names[0] is canonical
    std::string normalized_key(std::size_t i) const { return join(names[i].tokens, " "); }
};

struct KnowledgeBase {
    std::vector<Entity> entities;  // file order
    std::unordered_map<std::string, int> by_id;
    // normalized name -> entity indices holding that name (set semantics)
    std::unordered_map<std::string, std::vector<int>> name_index;

    const Entity* find(const std::string& id) const {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &entities[static_cast<std::size_t>(it->second)];
    }
    // Adds `tokens` as an augmented name unless the normalized form is already
    // present on the entity. Returns true when a name was added.
    bool add_augmented_name(int entity_idx, const TokenSequence& tokens);
};

struct MentionRecord {
    int start = 0, end = 0;        // byte offsets, [start, end)
    std::string surface;           // document substring
    std::string expanded;          // surface after abbreviation expansion
    TokenSequence tokens;          // preprocessed token sequence
    std::optional<std::string> gold;  // entity id or kNilMarker; nullopt = unlabeled

    bool has_gold() const { return gold.has_value(); }
    bool gold_is_nil() const { return gold && *gold == kNilMarker; }
};

struct Document {
    std::string doc_id;
    std::string text;
    std::vector<MentionRecord> mentions;
};

struct WarningLog {
    std::vector<std::string> messages;
    void add(std::string msg) { messages.push_back(std::move(msg)); }
    std::size_t count() const { return messages.size(); }
};

// KB file: UTF-8 TSV rows `entity_id<TAB>name<TAB>flag`, flag C|S, first row
// per id must be C. Names are normalized on load; names that normalize to
// nothing are dropped with a warning.
KnowledgeBase load_kb(const std::string& path, const NumeralDictionary& numerals,
                      WarningLog* warnings = nullptr);

// Corpus file: JSON Lines, one document per line.
std::vector<Document> load_corpus(const std::string& path);
std::string corpus_to_jsonl(const std::vector<Document>& docs);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

// Expands abbreviations in every mention of `doc`: document-local entries
// (harvested from the text) take precedence over the global dictionary.
// Spans and document text are never altered, only MentionRecord::expanded.
void expand_abbreviations(Document& doc, const AbbreviationDictionary& global);

// expand_abbreviations + normalize_text over every mention.
void preprocess_document(Document& doc, const AbbreviationDictionary& global,
                         const NumeralDictionary& numerals);
void preprocess_corpus(std::vector<Document>& docs, const AbbreviationDictionary& global,
                       const NumeralDictionary& numerals);

// Adds every preprocessed (mention, gold) pair of the training documents to
// the gold entity's names. Mentions whose gold id is missing from the KB are
// skipped and reported. Monotone and idempotent.
void augment_kb(KnowledgeBase& kb, const std::vector<Document>& training_docs,
                WarningLog* warnings = nullptr);

// The sentence (bounded by '.', '!', '?' or newline) around byte offset
// `start`, as raw text.
std::string sentence_around(const std::string& text, int start);

}  // namespace medlink
