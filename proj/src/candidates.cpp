#include "medlink/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "medlink/util.hpp"

namespace medlink {

using nlohmann::json;

namespace {

constexpr double kExactMatchTol = 1e-6;

bool is_zero_vec(std::span<const float> v) {
    for (float x : v)
        if (x != 0.0f) return false;
    return true;
}

}  // namespace

double token_cosine(const std::string& a, const std::string& b,
                    const WordEmbeddingTable& table) {
    auto [va, in_a] = table.lookup(a);
    auto [vb, in_b] = table.lookup(b);
    if (!in_a || !in_b || is_zero_vec(va) || is_zero_vec(vb))
        return a == b ? 1.0 : 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < va.size(); i++) {
        dot += static_cast<double>(va[i]) * vb[i];
        na += static_cast<double>(va[i]) * va[i];
        nb += static_cast<double>(vb[i]) * vb[i];
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double acos_similarity(const std::string& m_token, const TokenSequence& S,
                       const WordEmbeddingTable& table) {
    if (S.empty()) throw std::invalid_argument("acos_similarity: empty name sequence");
    double best = -1.0;
    for (const auto& s : S) best = std::max(best, token_cosine(m_token, s, table));
    return best;
}

double name_similarity(const TokenSequence& M, const TokenSequence& S,
                       const WordEmbeddingTable& table) {
    if (M.empty() || S.empty())
        throw std::invalid_argument("name_similarity: empty token sequence");
    // Sorted accumulation keeps the sum bit-identical under permutations.
    std::vector<double> parts;
    parts.reserve(M.size());
    for (const auto& m : M) parts.push_back(acos_similarity(m, S, table));
    std::sort(parts.begin(), parts.end());
    double sum_m = 0.0;
    for (double v : parts) sum_m += v;

    parts.clear();
    for (const auto& s : S) parts.push_back(acos_similarity(s, M, table));
    std::sort(parts.begin(), parts.end());
    double sum_s = 0.0;
    for (double v : parts) sum_s += v;

    return (sum_m + sum_s) / static_cast<double>(M.size() + S.size());
}

CandidateSet generate_candidates(const TokenSequence& mention_tokens,
                                 const KnowledgeBase& kb,
                                 const WordEmbeddingTable& table, int k) {
    if (k < 1) throw std::invalid_argument("generate_candidates: k must be >= 1");
    if (kb.entities.empty()) throw std::invalid_argument("generate_candidates: empty KB");
    CandidateSet out;
    if (mention_tokens.empty()) {
        out.unlinkable = true;
        return out;
    }

    struct Scored {
        double score;
        int entity_idx;
        const EntityName* name;
        std::string name_key;
    };
    // `a` ranks strictly better than `b`.
    const auto better = [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return kb.entities[static_cast<std::size_t>(a.entity_idx)].id <
               kb.entities[static_cast<std::size_t>(b.entity_idx)].id;
    };

    // Bounded heap of the best k entities; heap top is the current worst.
    std::vector<Scored> heap;
    heap.reserve(static_cast<std::size_t>(k) + 1);
    for (int ei = 0; ei < static_cast<int>(kb.entities.size()); ei++) {
        const Entity& e = kb.entities[static_cast<std::size_t>(ei)];
        double best_score = -2.0;
        const EntityName* best_name = nullptr;
        std::string best_key;
        for (const auto& n : e.names) {
            double s = name_similarity(mention_tokens, n.tokens, table);
            std::string key = join(n.tokens, " ");
            if (s > best_score || (s == best_score && key < best_key)) {
                best_score = s;
                best_name = &n;
                best_key = std::move(key);
            }
        }
        if (!best_name) continue;
        Scored cand{best_score, ei, best_name, std::move(best_key)};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(std::move(cand));
            std::push_heap(heap.begin(), heap.end(), better);
        } else if (better(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), better);
            heap.back() = std::move(cand);
            std::push_heap(heap.begin(), heap.end(), better);
        }
    }
    std::sort(heap.begin(), heap.end(), better);

    bool has_exact = !heap.empty() && heap.front().score >= 1.0 - kExactMatchTol;
    for (const auto& s : heap) {
        if (has_exact && s.score < 1.0 - kExactMatchTol) break;
        out.items.push_back(CandidateItem{
            kb.entities[static_cast<std::size_t>(s.entity_idx)].id, s.name->tokens, s.score});
    }
    return out;
}

std::vector<CandidateSet> generate_all_candidates(const std::vector<Document>& docs,
                                                  const KnowledgeBase& kb,
                                                  const WordEmbeddingTable& table,
                                                  int k, int threads) {
    struct Job {
        const Document* doc;
        int mention_index;
    };
    std::vector<Job> jobs;
    for (const auto& doc : docs)
        for (int mi = 0; mi < static_cast<int>(doc.mentions.size()); mi++)
            jobs.push_back(Job{&doc, mi});

    std::vector<CandidateSet> sets(jobs.size());
    const auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; i++) {
            const Job& job = jobs[i];
            CandidateSet cs = generate_candidates(
                job.doc->mentions[static_cast<std::size_t>(job.mention_index)].tokens, kb,
                table, k);
            cs.doc_id = job.doc->doc_id;
            cs.mention_index = job.mention_index;
            sets[i] = std::move(cs);
        }
    };
    int n_threads = std::max(1, threads);
    if (n_threads == 1 || jobs.size() < 2) {
        run(0, jobs.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (jobs.size() + static_cast<std::size_t>(n_threads) - 1) /
                            static_cast<std::size_t>(n_threads);
        for (int t = 0; t < n_threads; t++) {
            std::size_t b = static_cast<std::size_t>(t) * chunk;
            std::size_t e = std::min(jobs.size(), b + chunk);
            if (b >= e) break;
            pool.emplace_back(run, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return sets;
}

double recall_at_k(const std::vector<Document>& docs,
                   const std::vector<CandidateSet>& sets) {
    std::size_t si = 0;
    long total = 0, hit = 0;
    for (const auto& doc : docs) {
        for (const auto& m : doc.mentions) {
            const CandidateSet& cs = sets.at(si++);
            if (!m.has_gold() || m.gold_is_nil()) continue;
            total++;
            for (const auto& item : cs.items)
                if (item.entity_id == *m.gold) {
                    hit++;
                    break;
                }
        }
    }
    if (total == 0)
        throw std::invalid_argument("recall_at_k: no non-NIL gold mentions");
    return static_cast<double>(hit) / static_cast<double>(total);
}

std::string candidate_cache_to_jsonl(const std::vector<CandidateSet>& sets,
                                     const std::string& meta_json) {
    std::string out;
    if (!meta_json.empty()) {
        json meta{{"_meta", json::parse(meta_json)}};
        out += meta.dump();
        out += '\n';
    }
    for (const auto& cs : sets) {
        json items = json::array();
        for (const auto& item : cs.items)
            items.push_back(json{{"entity", item.entity_id},
                                 {"name", item.name_key()},
                                 {"score", item.score}});
        json j{{"doc_id", cs.doc_id}, {"mention", cs.mention_index},
               {"candidates", std::move(items)}};
        if (cs.unlinkable) j["unlinkable"] = true;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_candidate_cache(const std::string& path, const std::vector<CandidateSet>& sets,
                          const std::string& meta_json) {
    write_file(path, candidate_cache_to_jsonl(sets, meta_json));
}

std::vector<CandidateSet> load_candidate_cache(const std::string& path,
                                               std::string* meta_json) {
    std::vector<CandidateSet> sets;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); i++) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw ValidationError(where + ": bad JSON: " + e.what());
        }
        if (j.contains("_meta")) {
            if (meta_json) *meta_json = j["_meta"].dump();
            continue;
        }
        CandidateSet cs;
        cs.doc_id = j.at("doc_id").get<std::string>();
        cs.mention_index = j.at("mention").get<int>();
        cs.unlinkable = j.value("unlinkable", false);
        for (const auto& item : j.at("candidates")) {
            CandidateItem ci;
            ci.entity_id = item.at("entity").get<std::string>();
            ci.name = split_ws(item.at("name").get<std::string>());
            ci.score = item.at("score").get<double>();
            cs.items.push_back(std::move(ci));
        }
        sets.push_back(std::move(cs));
    }
    return sets;
}

}  // namespace medlink
