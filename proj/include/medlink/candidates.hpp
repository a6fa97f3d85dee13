#pragma once

#include <string>
#include <vector>

#include "medlink/corpus.hpp"
#include "medlink/embedding.hpp"

namespace medlink {

struct CandidateItem {
    std::string entity_id;
    TokenSequence name;  // the entity name that produced the score
    double score = 0.0;

    std::string name_key() const { return join(name, " "); }
};

struct CandidateSet {
    std::string doc_id;
    int mention_index = 0;
    std::vector<CandidateItem> items;  // score desc, ties by entity id asc
    bool unlinkable = false;           // mention had no usable tokens
};

// Pairwise cosine with the lexical fallback: when either token is missing
// from the table or has a zero vector, the value is 1 for identical strings
// and 0 otherwise.
double token_cosine(const std::string& a, const std::string& b,
                    const WordEmbeddingTable& table);

// max over s in S of cos(m_token, s). S must be non-empty.
double acos_similarity(const std::string& m_token, const TokenSequence& S,
                       const WordEmbeddingTable& table);

// Symmetric aligned-cosine similarity of two token sequences. Summands are
// accumulated in sorted order so the result is exactly invariant under token
// permutations on either side.
double name_similarity(const TokenSequence& M, const TokenSequence& S,
                       const WordEmbeddingTable& table);

// Top-k entities by the best name_similarity over each entity's names.
// Within an entity, ties between names prefer the lexicographically smaller
// normalized name; across entities, ties prefer the smaller entity id. When
// any retained score is >= 1 - 1e-6, lower-scoring items are dropped.
CandidateSet generate_candidates(const TokenSequence& mention_tokens,
                                 const KnowledgeBase& kb,
                                 const WordEmbeddingTable& table, int k);

// One CandidateSet per mention, in corpus order. `threads` > 1 shards the
// mention loop; outputs are identical to the single-threaded run.
std::vector<CandidateSet> generate_all_candidates(const std::vector<Document>& docs,
                                                  const KnowledgeBase& kb,
                                                  const WordEmbeddingTable& table,
                                                  int k, int threads = 1);

// Fraction of non-NIL gold mentions whose gold entity appears in its set.
// Errors when there is no non-NIL gold mention.
double recall_at_k(const std::vector<Document>& docs,
                   const std::vector<CandidateSet>& sets);

// JSON Lines cache: a `_meta` header line, then one record per mention.
std::string candidate_cache_to_jsonl(const std::vector<CandidateSet>& sets,
                                     const std::string& meta_json);
void save_candidate_cache(const std::string& path, const std::vector<CandidateSet>& sets,
                          const std::string& meta_json);
std::vector<CandidateSet> load_candidate_cache(const std::string& path,
                                               std::string* meta_json = nullptr);

}  // namespace medlink
