#include "medlink/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "medlink/util.hpp"

namespace medlink {

WordEmbeddingTable WordEmbeddingTable::load(const std::string& path, WarningLog* warnings) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError(path + ": empty embedding file");
    auto header = split_ws(lines[0]);
    if (header.size() != 2)
        throw ValidationError(path + ":1: header must be 'count dim'");
    char* endp = nullptr;
    long count = std::strtol(header[0].c_str(), &endp, 10);
    if (*endp != '\0' || count < 0)
        throw ValidationError(path + ":1: bad count '" + header[0] + "'");
    long dim = std::strtol(header[1].c_str(), &endp, 10);
    if (*endp != '\0' || dim <= 0)
        throw ValidationError(path + ":1: bad dim '" + header[1] + "'");

    WordEmbeddingTable table;
    table.dim_ = static_cast<int>(dim);
    table.zero_.assign(static_cast<std::size_t>(dim), 0.0f);
    int duplicates = 0;
    for (std::size_t i = 1; i < lines.size(); i++) {
        if (lines[i].empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        auto cols = split_ws(lines[i]);
        if (static_cast<long>(cols.size()) != dim + 1)
            throw ValidationError(where + ": expected token plus " + std::to_string(dim) +
                                  " values, got " + std::to_string(cols.size() - 1));
        const std::string& token = cols[0];
        if (table.index_.count(token)) {
            duplicates++;
            continue;
        }
        std::vector<float> row(static_cast<std::size_t>(dim));
        for (long d = 0; d < dim; d++) {
            const std::string& cell = cols[static_cast<std::size_t>(d) + 1];
            char* vend = nullptr;
            double v = std::strtod(cell.c_str(), &vend);
            if (*vend != '\0' || !std::isfinite(v))
                throw ValidationError(where + ": non-finite or malformed value '" + cell + "'");
            row[static_cast<std::size_t>(d)] = static_cast<float>(v);
        }
        table.index_.emplace(token, static_cast<int>(table.tokens_in_order_.size()));
        table.tokens_in_order_.push_back(token);
        table.data_.insert(table.data_.end(), row.begin(), row.end());
    }
    if (duplicates && warnings)
        warnings->add(path + ": " + std::to_string(duplicates) +
                      " duplicate token row(s); first occurrence kept");
    if (count != static_cast<long>(table.tokens_in_order_.size()) && warnings)
        warnings->add(path + ": header count " + std::to_string(count) + " != " +
                      std::to_string(table.tokens_in_order_.size()) + " unique rows");
    return table;
}

WordEmbeddingTable WordEmbeddingTable::from_rows(
    int dim, const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
    WordEmbeddingTable table;
    table.dim_ = dim;
    table.zero_.assign(static_cast<std::size_t>(dim), 0.0f);
    for (const auto& [token, vec] : rows) {
        if (static_cast<int>(vec.size()) != dim)
            throw ValidationError("embedding row '" + token + "' has wrong dimension");
        if (table.index_.count(token)) continue;
        table.index_.emplace(token, static_cast<int>(table.tokens_in_order_.size()));
        table.tokens_in_order_.push_back(token);
        table.data_.insert(table.data_.end(), vec.begin(), vec.end());
    }
    return table;
}

std::pair<std::span<const float>, bool> WordEmbeddingTable::lookup(
    const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return {std::span<const float>(zero_), false};
    const float* row = data_.data() + static_cast<std::size_t>(it->second) * dim_;
    return {std::span<const float>(row, static_cast<std::size_t>(dim_)), true};
}

const std::vector<float>& WordEmbeddingTable::mean_vector() const {
    if (mean_.empty()) {
        mean_.assign(static_cast<std::size_t>(dim_), 0.0f);
        if (!tokens_in_order_.empty()) {
            std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
            for (std::size_t r = 0; r < tokens_in_order_.size(); r++)
                for (int d = 0; d < dim_; d++)
                    acc[static_cast<std::size_t>(d)] +=
                        data_[r * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(d)];
            for (int d = 0; d < dim_; d++)
                mean_[static_cast<std::size_t>(d)] = static_cast<float>(
                    acc[static_cast<std::size_t>(d)] / static_cast<double>(tokens_in_order_.size()));
        }
    }
    return mean_;
}

CharVocab CharVocab::build(const std::vector<Document>& docs, const KnowledgeBase& kb) {
    std::set<char32_t> seen;
    const auto take = [&](const TokenSequence& toks) {
        for (const auto& t : toks)
            for (char32_t cp : to_codepoints(t)) seen.insert(cp);
    };
    for (const auto& doc : docs)
        for (const auto& m : doc.mentions) take(m.tokens);
    for (const auto& e : kb.entities)
        for (const auto& n : e.names) take(n.tokens);
    std::vector<char32_t> cps(seen.begin(), seen.end());
    return from_codepoint_list(cps);
}

CharVocab CharVocab::from_codepoint_list(const std::vector<char32_t>& cps) {
    CharVocab v;
    std::vector<char32_t> sorted(cps);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    v.chars_ = std::move(sorted);
    for (std::size_t i = 0; i < v.chars_.size(); i++)
        v.index_.emplace(v.chars_[i], static_cast<int>(i) + 1);
    return v;
}

int CharVocab::index_of(char32_t cp) const {
    auto it = index_.find(cp);
    return it == index_.end() ? 0 : it->second;
}

std::vector<int> CharVocab::encode(const std::string& token, int max_chars) const {
    std::vector<int> out;
    for (char32_t cp : to_codepoints(token)) {
        if (static_cast<int>(out.size()) >= max_chars) break;
        out.push_back(index_of(cp));
    }
    return out;
}

std::string CharVocab::serialize() const {
    std::string out;
    for (char32_t cp : chars_) encode_utf8(cp, out);
    return out;
}

CharVocab CharVocab::deserialize(const std::string& utf8_chars) {
    return from_codepoint_list(to_codepoints(utf8_chars));
}

}  // namespace medlink
