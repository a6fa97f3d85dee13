#include "medlink/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "medlink/util.hpp"

namespace medlink {

using nlohmann::json;

void ModelConfig::validate() const {
    const auto positive = [&](int v, const char* name) {
        if (v < 1) throw ValidationError(std::string("model config: ") + name + " must be >= 1");
    };
    positive(word_dim, "word_dim");
    positive(char_emb_dim, "char_emb_dim");
    positive(char_lstm_dim, "char_lstm_dim");
    positive(cnn_feature_maps, "cnn_feature_maps");
    positive(context_lstm_dim, "context_lstm_dim");
    positive(entity_emb_dim, "entity_emb_dim");
    positive(hidden_dim, "hidden_dim");
    positive(max_tokens, "max_tokens");
    positive(max_chars, "max_chars");
    if (cnn_windows.empty())
        throw ValidationError("model config: cnn_windows must be non-empty");
    for (std::size_t i = 0; i < cnn_windows.size(); i++) {
        if (cnn_windows[i] < 1)
            throw ValidationError("model config: cnn window must be >= 1");
        if (i > 0 && cnn_windows[i] <= cnn_windows[i - 1])
            throw ValidationError("model config: cnn_windows must be ascending");
    }
    if (dropout < 0.0 || dropout >= 1.0)
        throw ValidationError("model config: dropout must be in [0, 1)");
}

json ModelConfig::to_json() const {
    return json{{"word_dim", word_dim},
                {"char_emb_dim", char_emb_dim},
                {"char_lstm_dim", char_lstm_dim},
                {"cnn_feature_maps", cnn_feature_maps},
                {"cnn_windows", cnn_windows},
                {"context_lstm_dim", context_lstm_dim},
                {"entity_emb_dim", entity_emb_dim},
                {"hidden_dim", hidden_dim},
                {"dropout", dropout},
                {"max_tokens", max_tokens},
                {"max_chars", max_chars},
                {"use_prior", use_prior},
                {"use_context", use_context},
                {"use_coherence", use_coherence},
                {"use_char", use_char},
                {"use_alignment", use_alignment},
                {"use_cnn", use_cnn}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    c.word_dim = j.value("word_dim", c.word_dim);
    c.char_emb_dim = j.value("char_emb_dim", c.char_emb_dim);
    c.char_lstm_dim = j.value("char_lstm_dim", c.char_lstm_dim);
    c.cnn_feature_maps = j.value("cnn_feature_maps", c.cnn_feature_maps);
    c.cnn_windows = j.value("cnn_windows", c.cnn_windows);
    c.context_lstm_dim = j.value("context_lstm_dim", c.context_lstm_dim);
    c.entity_emb_dim = j.value("entity_emb_dim", c.entity_emb_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.dropout = j.value("dropout", c.dropout);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.max_chars = j.value("max_chars", c.max_chars);
    c.use_prior = j.value("use_prior", c.use_prior);
    c.use_context = j.value("use_context", c.use_context);
    c.use_coherence = j.value("use_coherence", c.use_coherence);
    c.use_char = j.value("use_char", c.use_char);
    c.use_alignment = j.value("use_alignment", c.use_alignment);
    c.use_cnn = j.value("use_cnn", c.use_cnn);
    c.validate();
    return c;
}

namespace {

template <typename Real>
ad::Mat<Real> glorot(int rows, int cols, Rng& rng) {
    ad::Mat<Real> m(rows, cols);
    double bound = std::sqrt(6.0 / (rows + cols));
    for (auto& v : m.a) v = static_cast<Real>(rng.uniform(-bound, bound));
    return m;
}

template <typename Real>
LstmParams<Real> init_lstm(int in_dim, int hidden, Rng& rng) {
    LstmParams<Real> p;
    p.wx = glorot<Real>(in_dim, 4 * hidden, rng);
    p.wh = glorot<Real>(hidden, 4 * hidden, rng);
    p.b = ad::Mat<Real>(1, 4 * hidden);
    // forget-gate bias starts at 1 (gate order: i, f, g, o)
    for (int j = hidden; j < 2 * hidden; j++) p.b.at(0, j) = Real(1);
    return p;
}

}  // namespace

template <typename Real>
RankingParams<Real> RankingParams<Real>::init(const ModelConfig& cfg, const CharVocab& chars,
                                              Rng& rng) {
    cfg.validate();
    RankingParams<Real> p;
    p.cfg = cfg;
    p.chars = chars;
    if (cfg.use_char) {
        p.char_emb = ad::Mat<Real>(chars.size(), cfg.char_emb_dim);
        double std = std::sqrt(2.0 / cfg.char_emb_dim);
        for (auto& v : p.char_emb.a) v = static_cast<Real>(rng.normal(0.0, std));
        p.char_fwd = init_lstm<Real>(cfg.char_emb_dim, cfg.char_lstm_dim, rng);
        p.char_bwd = init_lstm<Real>(cfg.char_emb_dim, cfg.char_lstm_dim, rng);
    }
    if (cfg.use_cnn) {
        for (int w : cfg.cnn_windows) {
            ConvParams<Real> cm{glorot<Real>(w * cfg.aligned_dim(), cfg.cnn_feature_maps, rng),
                                ad::Mat<Real>(1, cfg.cnn_feature_maps)};
            p.cnn_mention.push_back(std::move(cm));
        }
        for (int w : cfg.cnn_windows) {
            ConvParams<Real> ce{glorot<Real>(w * cfg.aligned_dim(), cfg.cnn_feature_maps, rng),
                                ad::Mat<Real>(1, cfg.cnn_feature_maps)};
            p.cnn_entity.push_back(std::move(ce));
        }
    }
    p.out_w1 = glorot<Real>(cfg.f_out_dim(), cfg.hidden_dim, rng);
    p.out_b1 = ad::Mat<Real>(1, cfg.hidden_dim);
    p.out_w2 = glorot<Real>(cfg.hidden_dim, 1, rng);
    p.out_b2 = ad::Mat<Real>(1, 1);
    if (cfg.use_context) {
        p.ctx_sent_fwd = init_lstm<Real>(cfg.word_dim, cfg.context_lstm_dim, rng);
        p.ctx_sent_bwd = init_lstm<Real>(cfg.word_dim, cfg.context_lstm_dim, rng);
        p.ctx_ent_fwd = init_lstm<Real>(cfg.word_dim, cfg.context_lstm_dim, rng);
        p.ctx_ent_bwd = init_lstm<Real>(cfg.word_dim, cfg.context_lstm_dim, rng);
    }
    return p;
}

template <typename Real>
void RankingParams<Real>::for_each(
    const std::function<void(const std::string&, ad::Mat<Real>&)>& fn) {
    const auto lstm = [&](const std::string& prefix, LstmParams<Real>& l) {
        fn(prefix + "_wx", l.wx);
        fn(prefix + "_wh", l.wh);
        fn(prefix + "_b", l.b);
    };
    if (cfg.use_char) {
        fn("char_emb", char_emb);
        lstm("char_lstm_fwd", char_fwd);
        lstm("char_lstm_bwd", char_bwd);
    }
    if (cfg.use_cnn) {
        for (std::size_t i = 0; i < cnn_mention.size(); i++) {
            std::string base = "cnn_mention_win" + std::to_string(cfg.cnn_windows[i]);
            fn(base + "_w", cnn_mention[i].w);
            fn(base + "_b", cnn_mention[i].b);
        }
        for (std::size_t i = 0; i < cnn_entity.size(); i++) {
            std::string base = "cnn_entity_win" + std::to_string(cfg.cnn_windows[i]);
            fn(base + "_w", cnn_entity[i].w);
            fn(base + "_b", cnn_entity[i].b);
        }
    }
    fn("out_w1", out_w1);
    fn("out_b1", out_b1);
    fn("out_w2", out_w2);
    fn("out_b2", out_b2);
    if (cfg.use_context) {
        lstm("ctx_sent_fwd", ctx_sent_fwd);
        lstm("ctx_sent_bwd", ctx_sent_bwd);
        lstm("ctx_ent_fwd", ctx_ent_fwd);
        lstm("ctx_ent_bwd", ctx_ent_bwd);
    }
}

template <typename Real>
void RankingParams<Real>::for_each_const(
    const std::function<void(const std::string&, const ad::Mat<Real>&)>& fn) const {
    const_cast<RankingParams<Real>*>(this)->for_each(
        [&](const std::string& name, ad::Mat<Real>& m) { fn(name, m); });
}

template <typename Real>
long RankingParams<Real>::total_parameters(
    std::vector<std::pair<std::string, long>>* ledger) const {
    long total = 0;
    for_each_const([&](const std::string& name, const ad::Mat<Real>& m) {
        long n = static_cast<long>(m.size());
        total += n;
        if (ledger) ledger->emplace_back(name, n);
    });
    return total;
}

template <typename Real>
RankingParams<double> RankingParams<Real>::to_double() const {
    RankingParams<double> out;
    out.cfg = cfg;
    out.chars = chars;
    out.char_emb = char_emb.template cast<double>();
    const auto conv_lstm = [](const LstmParams<Real>& l) {
        return LstmParams<double>{l.wx.template cast<double>(), l.wh.template cast<double>(),
                                  l.b.template cast<double>()};
    };
    out.char_fwd = conv_lstm(char_fwd);
    out.char_bwd = conv_lstm(char_bwd);
    for (const auto& c : cnn_mention)
        out.cnn_mention.push_back(
            {c.w.template cast<double>(), c.b.template cast<double>()});
    for (const auto& c : cnn_entity)
        out.cnn_entity.push_back({c.w.template cast<double>(), c.b.template cast<double>()});
    out.out_w1 = out_w1.template cast<double>();
    out.out_b1 = out_b1.template cast<double>();
    out.out_w2 = out_w2.template cast<double>();
    out.out_b2 = out_b2.template cast<double>();
    out.ctx_sent_fwd = conv_lstm(ctx_sent_fwd);
    out.ctx_sent_bwd = conv_lstm(ctx_sent_bwd);
    out.ctx_ent_fwd = conv_lstm(ctx_ent_fwd);
    out.ctx_ent_bwd = conv_lstm(ctx_ent_bwd);
    return out;
}

template <typename Real>
ScoreBuilder<Real>::ScoreBuilder(ad::Graph<Real>& g, const RankingParams<Real>& params,
                                 const WordEmbeddingTable& words, bool training,
                                 Rng* dropout_rng)
    : g_(g), params_(params), words_(words), training_(training), dropout_rng_(dropout_rng) {
    if (params_.cfg.word_dim != words.dim())
        throw ValidationError("word embedding dim " + std::to_string(words.dim()) +
                              " does not match model word_dim " +
                              std::to_string(params_.cfg.word_dim));
    if (training_ && params_.cfg.dropout > 0.0 && dropout_rng_ == nullptr)
        throw std::invalid_argument("ScoreBuilder: training with dropout needs an rng");

    const_cast<RankingParams<Real>&>(params_).for_each(
        [&](const std::string& name, ad::Mat<Real>& m) {
            int id = g_.leaf(m, training_);
            param_leaves_.emplace_back(name, id);
            leaf_by_name_.emplace(name, id);
        });

    const auto lstm_nodes = [&](const std::string& prefix, int hidden) {
        typename ad::Graph<Real>::LstmWeights w;
        w.wx = param_leaf(prefix + "_wx");
        w.wh = param_leaf(prefix + "_wh");
        w.b = param_leaf(prefix + "_b");
        w.hidden = hidden;
        return w;
    };
    if (params_.cfg.use_char) {
        char_fwd_w_ = lstm_nodes("char_lstm_fwd", params_.cfg.char_lstm_dim);
        char_bwd_w_ = lstm_nodes("char_lstm_bwd", params_.cfg.char_lstm_dim);
    }
    if (params_.cfg.use_cnn) {
        for (int w : params_.cfg.cnn_windows) {
            std::string base = "cnn_mention_win" + std::to_string(w);
            cnn_m_nodes_.emplace_back(param_leaf(base + "_w"), param_leaf(base + "_b"));
            base = "cnn_entity_win" + std::to_string(w);
            cnn_e_nodes_.emplace_back(param_leaf(base + "_w"), param_leaf(base + "_b"));
        }
    }
    if (params_.cfg.use_context) {
        ctx_sf_w_ = lstm_nodes("ctx_sent_fwd", params_.cfg.context_lstm_dim);
        ctx_sb_w_ = lstm_nodes("ctx_sent_bwd", params_.cfg.context_lstm_dim);
        ctx_ef_w_ = lstm_nodes("ctx_ent_fwd", params_.cfg.context_lstm_dim);
        ctx_eb_w_ = lstm_nodes("ctx_ent_bwd", params_.cfg.context_lstm_dim);
    }
}

template <typename Real>
int ScoreBuilder<Real>::param_leaf(const std::string& name) const {
    auto it = leaf_by_name_.find(name);
    if (it == leaf_by_name_.end())
        throw std::logic_error("no parameter leaf named " + name);
    return it->second;
}

template <typename Real>
int ScoreBuilder<Real>::word_leaf(const std::string& token) {
    auto it = word_cache_.find(token);
    if (it != word_cache_.end()) return it->second;
    auto [vec, in_vocab] = words_.lookup(token);
    ad::Mat<Real> row(1, words_.dim());
    if (in_vocab)
        for (int j = 0; j < words_.dim(); j++)
            row.at(0, j) = static_cast<Real>(vec[static_cast<std::size_t>(j)]);
    int id = g_.leaf(std::move(row), false);
    word_cache_.emplace(token, id);
    return id;
}

template <typename Real>
int ScoreBuilder<Real>::char_feature(const std::string& token) {
    std::vector<int> codes = params_.chars.encode(token, params_.cfg.max_chars);
    int emb_leaf = param_leaf("char_emb");
    std::vector<int> xs;
    xs.reserve(codes.size());
    for (int c : codes) xs.push_back(g_.gather_rows(emb_leaf, {c}));
    std::vector<int> fwd = g_.lstm_run(xs, char_fwd_w_);
    std::vector<int> rev(xs.rbegin(), xs.rend());
    std::vector<int> bwd = g_.lstm_run(rev, char_bwd_w_);
    return g_.concat_cols({fwd.back(), bwd.back()});
}

template <typename Real>
int ScoreBuilder<Real>::token_repr(const std::string& token) {
    auto it = repr_cache_.find(token);
    if (it != repr_cache_.end()) return it->second;
    int id;
    if (params_.cfg.use_char)
        id = g_.concat_cols({word_leaf(token), char_feature(token)});
    else
        id = word_leaf(token);
    repr_cache_.emplace(token, id);
    return id;
}

template <typename Real>
int ScoreBuilder<Real>::sequence_repr(const TokenSequence& tokens) {
    if (tokens.empty())
        throw std::invalid_argument("sequence_repr: empty token sequence");
    std::vector<int> rows;
    int limit = std::min<int>(params_.cfg.max_tokens, static_cast<int>(tokens.size()));
    rows.reserve(static_cast<std::size_t>(limit));
    for (int i = 0; i < limit; i++) rows.push_back(token_repr(tokens[static_cast<std::size_t>(i)]));
    return g_.concat_rows(rows);
}

template <typename Real>
int ScoreBuilder<Real>::encode_side(int xhat, const std::vector<std::pair<int, int>>& cnn_nodes) {
    if (!params_.cfg.use_cnn) return g_.mean_rows(xhat);
    std::vector<int> pooled;
    for (std::size_t i = 0; i < params_.cfg.cnn_windows.size(); i++) {
        int u = g_.unfold(xhat, params_.cfg.cnn_windows[i]);
        int c = g_.relu(g_.add_rowvec(g_.matmul(u, cnn_nodes[i].first), cnn_nodes[i].second));
        pooled.push_back(g_.max_over_time(c));
    }
    return g_.concat_cols(pooled);
}

template <typename Real>
int ScoreBuilder<Real>::bilstm_last(const std::vector<int>& xs,
                                    const typename ad::Graph<Real>::LstmWeights& fwd,
                                    const typename ad::Graph<Real>::LstmWeights& bwd) {
    std::vector<int> f = g_.lstm_run(xs, fwd);
    std::vector<int> rev(xs.rbegin(), xs.rend());
    std::vector<int> b = g_.lstm_run(rev, bwd);
    return g_.concat_cols({f.back(), b.back()});
}

template <typename Real>
int ScoreBuilder<Real>::context_score(const TokenSequence& sentence, const TokenSequence& name) {
    if (sentence.empty()) return g_.scalar_leaf(Real(0));
    const int cap = 2 * params_.cfg.max_tokens;
    std::vector<int> sent_xs;
    for (int i = 0; i < std::min<int>(cap, static_cast<int>(sentence.size())); i++)
        sent_xs.push_back(word_leaf(sentence[static_cast<std::size_t>(i)]));

    std::vector<int> fwd = g_.lstm_run(sent_xs, ctx_sf_w_);
    std::vector<int> rev(sent_xs.rbegin(), sent_xs.rend());
    std::vector<int> bwd = g_.lstm_run(rev, ctx_sb_w_);
    std::vector<int> h_rows;
    std::size_t n = sent_xs.size();
    for (std::size_t i = 0; i < n; i++)
        h_rows.push_back(g_.concat_cols({fwd[i], bwd[n - 1 - i]}));
    int H = g_.concat_rows(h_rows);  // [T x 2C]

    std::vector<int> name_xs;
    int limit = std::min<int>(params_.cfg.max_tokens, static_cast<int>(name.size()));
    for (int i = 0; i < limit; i++)
        name_xs.push_back(word_leaf(name[static_cast<std::size_t>(i)]));
    int cxt_e = bilstm_last(name_xs, ctx_ef_w_, ctx_eb_w_);  // [1 x 2C]

    int scores = g_.transpose(g_.matmul(H, g_.transpose(cxt_e)));  // [1 x T]
    int alpha = g_.softmax_rows(scores);
    int cxt_m = g_.matmul(alpha, H);  // [1 x 2C]
    return g_.cosine(cxt_m, cxt_e);
}

template <typename Real>
int ScoreBuilder<Real>::pair_score(const TokenSequence& mention, const TokenSequence& name,
                                   const PairExtras& extras, const std::string& dedup_key) {
    if (!dedup_key.empty()) {
        auto it = pair_cache_.find(dedup_key);
        if (it != pair_cache_.end()) return it->second;
    }
    const ModelConfig& cfg = params_.cfg;
    int mbar = sequence_repr(mention);
    int sbar = sequence_repr(name);

    int mhat, shat;
    if (cfg.use_alignment) {
        int w = g_.matmul(mbar, g_.transpose(sbar));  // [Tm x Ts]
        int wr = g_.softmax_rows(w);
        int mtil = g_.matmul(wr, sbar);
        int wc = g_.softmax_cols(w);
        int stil = g_.matmul(g_.transpose(wc), mbar);
        int dm = g_.sub(mbar, mtil);
        mhat = g_.concat_cols({mbar, mtil, g_.mul(dm, dm), g_.mul(mbar, mtil)});
        int ds = g_.sub(sbar, stil);
        shat = g_.concat_cols({sbar, stil, g_.mul(ds, ds), g_.mul(sbar, stil)});
    } else {
        mhat = mbar;
        shat = sbar;
    }

    std::vector<int> parts{encode_side(mhat, cnn_m_nodes_), encode_side(shat, cnn_e_nodes_)};
    if (cfg.use_prior) {
        if (!extras.prior)
            throw std::invalid_argument("pair_score: prior feature enabled but not provided");
        parts.push_back(g_.scalar_leaf(static_cast<Real>(*extras.prior)));
    }
    if (cfg.use_context) {
        if (!extras.sentence)
            throw std::invalid_argument("pair_score: context feature enabled but no sentence");
        parts.push_back(context_score(*extras.sentence, name));
    }
    if (cfg.use_coherence) {
        if (!extras.coherence)
            throw std::invalid_argument("pair_score: coherence feature enabled but not provided");
        parts.push_back(g_.scalar_leaf(static_cast<Real>(*extras.coherence)));
    }
    int f_out = g_.concat_cols(parts);
    if (g_.val(f_out).cols != cfg.f_out_dim())
        throw std::logic_error("pair_score: f_out width " +
                               std::to_string(g_.val(f_out).cols) + " != configured " +
                               std::to_string(cfg.f_out_dim()));
    if (training_ && cfg.dropout > 0.0)
        f_out = g_.dropout(f_out, cfg.dropout, *dropout_rng_);

    int hidden = g_.relu(g_.add(g_.matmul(f_out, param_leaf("out_w1")), param_leaf("out_b1")));
    int score = g_.sigmoid(g_.add(g_.matmul(hidden, param_leaf("out_w2")), param_leaf("out_b2")));
    if (!dedup_key.empty()) pair_cache_.emplace(dedup_key, score);
    return score;
}

double score_pair(const RankingParams<float>& params, const WordEmbeddingTable& words,
                  const TokenSequence& mention, const TokenSequence& name,
                  const PairExtras& extras) {
    ad::Graph<float> g;
    ScoreBuilder<float> builder(g, params, words, /*training=*/false, nullptr);
    int s = builder.pair_score(mention, name, extras);
    return static_cast<double>(g.val(s).at(0, 0));
}

PriorTable PriorTable::build(const std::vector<Document>& training_docs) {
    PriorTable t;
    for (const auto& doc : training_docs)
        for (const auto& m : doc.mentions) {
            if (!m.has_gold() || m.gold_is_nil() || m.tokens.empty()) continue;
            t.add(join(m.tokens, " "), *m.gold);
        }
    return t;
}

void PriorTable::add(const std::string& mention_key, const std::string& entity_id) {
    counts_[mention_key][entity_id]++;
}

double PriorTable::feature(const std::string& mention_key, const std::string& entity_id) const {
    auto it = counts_.find(mention_key);
    if (it == counts_.end()) return 0.0;
    auto jt = it->second.find(entity_id);
    if (jt == it->second.end()) return 0.0;
    return std::log1p(static_cast<double>(jt->second));
}

json PriorTable::to_json() const {
    json j = json::object();
    for (const auto& [mention, per_entity] : counts_) {
        json inner = json::object();
        for (const auto& [entity, count] : per_entity) inner[entity] = count;
        j[mention] = std::move(inner);
    }
    return j;
}

PriorTable PriorTable::from_json(const json& j) {
    PriorTable t;
    for (auto it = j.begin(); it != j.end(); ++it)
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
            t.counts_[it.key()][jt.key()] = jt.value().get<int>();
    return t;
}

namespace {

double cos_or_zero(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double coherence_feature(const Document& doc, const std::vector<CandidateSet>& doc_sets,
                         int mention_index, const std::string& entity_id,
                         const WordEmbeddingTable& entity_emb, int neighbor_cap) {
    if (mention_index < 0 || mention_index >= static_cast<int>(doc.mentions.size()))
        throw std::invalid_argument("coherence_feature: mention index out of range");
    const int my_start = doc.mentions[static_cast<std::size_t>(mention_index)].start;

    struct Neighbor {
        int distance;
        int index;
        const std::string* top_entity;
    };
    std::vector<Neighbor> neighbors;
    for (int j = 0; j < static_cast<int>(doc.mentions.size()); j++) {
        if (j == mention_index) continue;
        if (j >= static_cast<int>(doc_sets.size())) break;
        const CandidateSet& cs = doc_sets[static_cast<std::size_t>(j)];
        if (cs.items.empty()) continue;
        neighbors.push_back(Neighbor{
            std::abs(doc.mentions[static_cast<std::size_t>(j)].start - my_start), j,
            &cs.items[0].entity_id});
    }
    std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    if (neighbors.size() > static_cast<std::size_t>(neighbor_cap))
        neighbors.resize(static_cast<std::size_t>(neighbor_cap));
    if (neighbors.empty()) return 0.0;

    const auto vec_of = [&](const std::string& id) -> std::span<const float> {
        auto [v, present] = entity_emb.lookup(id);
        if (present) return v;
        return std::span<const float>(entity_emb.mean_vector());
    };
    std::span<const float> pe = vec_of(entity_id);
    double sum = 0.0;
    for (const auto& nb : neighbors) sum += cos_or_zero(vec_of(*nb.top_entity), pe);
    return sum / static_cast<double>(neighbors.size());
}

void save_model(const std::string& path, const RankingParams<float>& params, double tau,
                const json& manifest_extra) {
    json manifest = manifest_extra.is_object() ? manifest_extra : json::object();
    manifest["model_config"] = params.cfg.to_json();
    manifest["char_vocab"] = params.chars.serialize();
    manifest["tau"] = tau;
    std::vector<std::pair<std::string, const ad::Mat<float>*>> tensors;
    params.for_each_const([&](const std::string& name, const ad::Mat<float>& m) {
        tensors.emplace_back(name, &m);
    });
    save_checkpoint(path, tensors, manifest);
}

LoadedModel load_model(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    LoadedModel out;
    out.manifest = ckpt.manifest;
    if (!ckpt.manifest.contains("model_config"))
        throw ValidationError(path + ": checkpoint has no model_config");
    ModelConfig cfg = ModelConfig::from_json(ckpt.manifest.at("model_config"));
    CharVocab chars = CharVocab::deserialize(ckpt.manifest.value("char_vocab", ""));
    out.tau = ckpt.manifest.value("tau", 0.0);
    if (ckpt.manifest.contains("prior"))
        out.prior = PriorTable::from_json(ckpt.manifest.at("prior"));

    // Shape the parameter set from the manifest config, then fill by name.
    Rng dummy(0);
    out.params = RankingParams<float>::init(cfg, chars, dummy);
    std::size_t used = 0;
    out.params.for_each([&](const std::string& name, ad::Mat<float>& m) {
        const ad::Mat<float>* src = ckpt.find(name);
        if (!src) throw ValidationError(path + ": checkpoint missing tensor '" + name + "'");
        if (src->rows != m.rows || src->cols != m.cols)
            throw ValidationError(path + ": tensor '" + name + "' has shape [" +
                                  std::to_string(src->rows) + "," + std::to_string(src->cols) +
                                  "], expected [" + std::to_string(m.rows) + "," +
                                  std::to_string(m.cols) + "]");
        m = *src;
        used++;
    });
    if (used != ckpt.tensors.size())
        throw ValidationError(path + ": checkpoint holds " +
                              std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                              std::to_string(used));
    return out;
}

template struct RankingParams<float>;
template struct RankingParams<double>;
template class ScoreBuilder<float>;
template class ScoreBuilder<double>;

}  // namespace medlink
