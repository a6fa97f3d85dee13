#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "medlink/candidates.hpp"
#include "medlink/checkpoint.hpp"
#include "medlink/embedding.hpp"
#include "medlink/graph.hpp"
#include "medlink/rng.hpp"

namespace medlink {

struct ModelConfig {
    int word_dim = 200;
    int char_emb_dim = 128;
    int char_lstm_dim = 64;
    int cnn_feature_maps = 32;
    std::vector<int> cnn_windows{1, 2, 3};
    int context_lstm_dim = 32;
    int entity_emb_dim = 50;
    int hidden_dim = 64;
    double dropout = 0.1;
    int max_tokens = 20;
    int max_chars = 25;
    // extra features
    bool use_prior = false;
    bool use_context = false;
    bool use_coherence = false;
    // ablation switches; all on = full base model
    bool use_char = true;
    bool use_alignment = true;
    bool use_cnn = true;

    int repr_dim() const { return word_dim + (use_char ? 2 * char_lstm_dim : 0); }
    int aligned_dim() const { return use_alignment ? 4 * repr_dim() : repr_dim(); }
    int side_dim() const {
        return use_cnn ? static_cast<int>(cnn_windows.size()) * cnn_feature_maps
                       : aligned_dim();
    }
    int n_extras() const {
        return (use_prior ? 1 : 0) + (use_context ? 1 : 0) + (use_coherence ? 1 : 0);
    }
    int f_out_dim() const { return 2 * side_dim() + n_extras(); }

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

template <typename Real>
struct LstmParams {
    ad::Mat<Real> wx, wh, b;
};

template <typename Real>
struct ConvParams {
    ad::Mat<Real> w, b;
};

// All learned weights. Enumeration order is fixed so that initialization,
// checkpointing and the optimizer state all agree.
template <typename Real>
struct RankingParams {
    ModelConfig cfg;
    CharVocab chars;

    ad::Mat<Real> char_emb;
    LstmParams<Real> char_fwd, char_bwd;  // shared between mention and entity side
    std::vector<ConvParams<Real>> cnn_mention, cnn_entity;  // one per window
    ad::Mat<Real> out_w1, out_b1, out_w2, out_b2;
    LstmParams<Real> ctx_sent_fwd, ctx_sent_bwd, ctx_ent_fwd, ctx_ent_bwd;

    static RankingParams init(const ModelConfig& cfg, const CharVocab& chars, Rng& rng);

    void for_each(const std::function<void(const std::string&, ad::Mat<Real>&)>& fn);
    void for_each_const(
        const std::function<void(const std::string&, const ad::Mat<Real>&)>& fn) const;

    long total_parameters(std::vector<std::pair<std::string, long>>* ledger = nullptr) const;

    RankingParams<double> to_double() const;
};

// Per-(mention, candidate) side inputs beyond the two token sequences.
struct PairExtras {
    std::optional<double> prior;
    const TokenSequence* sentence = nullptr;  // required iff use_context
    std::optional<double> coherence;
};

// Builds score subgraphs over one Graph. Token representations and pair
// scores are cached within the builder so shared subexpressions (same token
// or same pair inside a batch) are computed once and accumulate gradient
// across uses.
template <typename Real>
class ScoreBuilder {
 public:
    ScoreBuilder(ad::Graph<Real>& g, const RankingParams<Real>& params,
                 const WordEmbeddingTable& words, bool training, Rng* dropout_rng);

    // Row i = [word vector || char BiLSTM feature] of token i. Truncates to
    // cfg.max_tokens; errors on an empty sequence.
    int sequence_repr(const TokenSequence& tokens);

    // Full pipeline: represent -> align -> encode -> MLP -> sigmoid, [1 x 1].
    // `dedup_key`, when non-empty, memoizes the resulting node.
    int pair_score(const TokenSequence& mention, const TokenSequence& name,
                   const PairExtras& extras, const std::string& dedup_key = {});

    // cos(cxt_M, cxt_E) per the context feature definition, [1 x 1].
    int context_score(const TokenSequence& sentence, const TokenSequence& name);

    ad::Graph<Real>& graph() { return g_; }

    // Leaf ids of every parameter, in registry order (for reading gradients).
    const std::vector<std::pair<std::string, int>>& param_leaves() const {
        return param_leaves_;
    }
    int param_leaf(const std::string& name) const;

 private:
    int word_leaf(const std::string& token);
    int char_feature(const std::string& token);
    int token_repr(const std::string& token);
    int encode_side(int xhat, const std::vector<std::pair<int, int>>& cnn_nodes);
    int bilstm_last(const std::vector<int>& xs,
                    const typename ad::Graph<Real>::LstmWeights& fwd,
                    const typename ad::Graph<Real>::LstmWeights& bwd);

    ad::Graph<Real>& g_;
    const RankingParams<Real>& params_;
    const WordEmbeddingTable& words_;
    bool training_;
    Rng* dropout_rng_;

    std::vector<std::pair<std::string, int>> param_leaves_;
    std::unordered_map<std::string, int> leaf_by_name_;
    typename ad::Graph<Real>::LstmWeights char_fwd_w_{}, char_bwd_w_{};
    typename ad::Graph<Real>::LstmWeights ctx_sf_w_{}, ctx_sb_w_{}, ctx_ef_w_{}, ctx_eb_w_{};
    std::vector<std::pair<int, int>> cnn_m_nodes_, cnn_e_nodes_;  // (w, b) per window
    std::unordered_map<std::string, int> repr_cache_;
    std::unordered_map<std::string, int> word_cache_;
    std::unordered_map<std::string, int> pair_cache_;
};

// Convenience single-pair inference score in (0, 1).
double score_pair(const RankingParams<float>& params, const WordEmbeddingTable& words,
                  const TokenSequence& mention, const TokenSequence& name,
                  const PairExtras& extras);

// Mention-entity prior counts harvested from training links.
class PriorTable {
 public:
    static PriorTable build(const std::vector<Document>& training_docs);

    void add(const std::string& mention_key, const std::string& entity_id);
    // log(1 + count); 0 for unseen pairs.
    double feature(const std::string& mention_key, const std::string& entity_id) const;

    nlohmann::json to_json() const;
    static PriorTable from_json(const nlohmann::json& j);

 private:
    std::map<std::string, std::map<std::string, int>> counts_;
};

// Mean cosine between the candidate's entity vector and the presumed (top-1)
// entities of the nearest other mentions in the document; 0 when there are no
// neighbors. Missing entity vectors fall back to the mean embedding.
double coherence_feature(const Document& doc, const std::vector<CandidateSet>& doc_sets,
                         int mention_index, const std::string& entity_id,
                         const WordEmbeddingTable& entity_emb, int neighbor_cap = 10);

// Checkpoint glue: tensors in registry order plus model config, char vocab
// and tau in the manifest.
void save_model(const std::string& path, const RankingParams<float>& params, double tau,
                const nlohmann::json& manifest_extra);
struct LoadedModel {
    RankingParams<float> params;
    double tau = 0.0;
    PriorTable prior;
    nlohmann::json manifest;
};
LoadedModel load_model(const std::string& path);

extern template struct RankingParams<float>;
extern template struct RankingParams<double>;
extern template class ScoreBuilder<float>;
extern template class ScoreBuilder<double>;

}  // namespace medlink
