#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "medlink/corpus.hpp"

namespace medlink {

// Pre-trained word vectors in word2vec text format. Immutable after load.
class WordEmbeddingTable {
 public:
    // Loads `count dim` header followed by `token v1 ... v_dim` rows.
    // Duplicate tokens keep the first occurrence and are reported.
    static WordEmbeddingTable load(const std::string& path, WarningLog* warnings = nullptr);
    static WordEmbeddingTable from_rows(
        int dim, const std::vector<std::pair<std::string, std::vector<float>>>& rows);

    int dim() const { return dim_; }
    std::size_t size() const { return tokens_in_order_.size(); }
    const std::vector<std::string>& tokens_in_order() const { return tokens_in_order_; }

    // Stored vector and true when present; zero vector and false otherwise.
    std::pair<std::span<const float>, bool> lookup(const std::string& token) const;

    // Component-wise mean of all vectors (used for missing entity embeddings).
    const std::vector<float>& mean_vector() const;

 private:
    int dim_ = 0;
    std::vector<std::string> tokens_in_order_;
    std::unordered_map<std::string, int> index_;
    std::vector<float> data_;        // row-major [size x dim]
    std::vector<float> zero_;        // OOV result
    mutable std::vector<float> mean_;  // computed on first use
};

// Character inventory for the char-level pathway. Index 0 is the unknown
// character; real characters get contiguous indices from 1, ordered by
// codepoint. Frozen before training.
class CharVocab {
 public:
    static CharVocab build(const std::vector<Document>& docs, const KnowledgeBase& kb);
    static CharVocab from_codepoint_list(const std::vector<char32_t>& cps);

    int size() const { return static_cast<int>(chars_.size()) + 1; }  // incl. unknown
    int index_of(char32_t cp) const;
    std::vector<int> encode(const std::string& token, int max_chars) const;

    // UTF-8 string of the known characters in index order (for checkpoints).
    std::string serialize() const;
    static CharVocab deserialize(const std::string& utf8_chars);

 private:
    std::vector<char32_t> chars_;                 // index i+1 -> chars_[i]
    std::unordered_map<char32_t, int> index_;
};

}  // namespace medlink
