#include "medlink/corpus.hpp"

#include <nlohmann/json.hpp>

#include "medlink/util.hpp"

namespace medlink {

using nlohmann::json;

bool KnowledgeBase::add_augmented_name(int entity_idx, const TokenSequence& tokens) {
    if (tokens.empty()) return false;
    Entity& e = entities[static_cast<std::size_t>(entity_idx)];
    std::string key = join(tokens, " ");
    for (const auto& n : e.names)
        if (join(n.tokens, " ") == key) return false;
    e.names.push_back(EntityName{key, tokens, true});
    auto& ids = name_index[key];
    for (int id : ids)
        if (id == entity_idx) return true;
    ids.push_back(entity_idx);
    return true;
}

KnowledgeBase load_kb(const std::string& path, const NumeralDictionary& numerals,
                      WarningLog* warnings) {
    KnowledgeBase kb;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); i++) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_char(line, '\t');
        const std::string where = path + ":" + std::to_string(i + 1);
        if (cols.size() != 3)
            throw ValidationError(where + ": expected entity_id<TAB>name<TAB>flag");
        const std::string& id = cols[0];
        const std::string& name = cols[1];
        const std::string& flag = cols[2];
        if (id.empty()) throw ValidationError(where + ": empty entity id");
        if (id == kNilMarker)
            throw ValidationError(where + ": '" + std::string(kNilMarker) +
                                  "' is reserved and cannot be an entity id");
        if (flag != "C" && flag != "S")
            throw ValidationError(where + ": flag must be C or S, got '" + flag + "'");

        auto it = kb.by_id.find(id);
        int idx;
        if (it == kb.by_id.end()) {
            if (flag != "C")
                throw ValidationError(where + ": first row for entity '" + id +
                                      "' must be flagged C");
            idx = static_cast<int>(kb.entities.size());
            kb.entities.push_back(Entity{id, {}});
            kb.by_id.emplace(id, idx);
        } else {
            if (flag == "C")
                throw ValidationError(where + ": duplicate canonical row for entity '" +
                                      id + "'");
            idx = it->second;
        }

        TokenSequence tokens = normalize_text(name, numerals);
        Entity& e = kb.entities[static_cast<std::size_t>(idx)];
        if (tokens.empty()) {
            if (warnings)
                warnings->add(where + ": name '" + name + "' normalizes to nothing; dropped");
            continue;
        }
        std::string key = join(tokens, " ");
        bool dup = false;
        for (const auto& n : e.names)
            if (join(n.tokens, " ") == key) dup = true;
        if (dup) {
            if (warnings)
                warnings->add(where + ": duplicate normalized name '" + key +
                              "' within entity '" + id + "'; dropped");
            continue;
        }
        e.names.push_back(EntityName{name, std::move(tokens), false});
        auto& ids = kb.name_index[key];
        bool seen = false;
        for (int v : ids)
            if (v == idx) seen = true;
        if (!seen) ids.push_back(idx);
    }
    for (const auto& e : kb.entities)
        if (e.names.empty())
            throw ValidationError(path + ": entity '" + e.id + "' has no usable names");
    return kb;
}

std::vector<Document> load_corpus(const std::string& path) {
    std::vector<Document> docs;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); i++) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError(where + ": bad JSON: " + e.what());
        }
        if (j.contains("_meta")) continue;
        Document doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        doc.text = j.at("text").get<std::string>();
        for (const auto& m : j.at("mentions")) {
            MentionRecord rec;
            rec.start = m.at("start").get<int>();
            rec.end = m.at("end").get<int>();
            if (rec.start < 0 || rec.end > static_cast<int>(doc.text.size()) ||
                rec.start >= rec.end)
                throw ValidationError(where + ": mention span [" + std::to_string(rec.start) +
                                      ", " + std::to_string(rec.end) + ") out of bounds");
            rec.surface = doc.text.substr(static_cast<std::size_t>(rec.start),
                                          static_cast<std::size_t>(rec.end - rec.start));
            rec.expanded = rec.surface;
            if (m.contains("gold") && !m.at("gold").is_null())
                rec.gold = m.at("gold").get<std::string>();
            doc.mentions.push_back(std::move(rec));
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::string corpus_to_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& doc : docs) {
        json mentions = json::array();
        for (const auto& m : doc.mentions) {
            json jm{{"start", m.start}, {"end", m.end}};
            if (m.gold)
                jm["gold"] = *m.gold;
            else
                jm["gold"] = nullptr;
            mentions.push_back(std::move(jm));
        }
        json j{{"doc_id", doc.doc_id}, {"text", doc.text}, {"mentions", std::move(mentions)}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
    write_file(path, corpus_to_jsonl(docs));
}

void expand_abbreviations(Document& doc, const AbbreviationDictionary& global) {
    AbbreviationDictionary local = detect_local_abbreviations(doc.text);
    for (auto& m : doc.mentions)
        m.expanded = expand_abbreviation_string(m.surface, local, global);
}

void preprocess_document(Document& doc, const AbbreviationDictionary& global,
                         const NumeralDictionary& numerals) {
    expand_abbreviations(doc, global);
    for (auto& m : doc.mentions) m.tokens = normalize_text(m.expanded, numerals);
}

void preprocess_corpus(std::vector<Document>& docs, const AbbreviationDictionary& global,
                       const NumeralDictionary& numerals) {
    for (auto& doc : docs) preprocess_document(doc, global, numerals);
}

void augment_kb(KnowledgeBase& kb, const std::vector<Document>& training_docs,
                WarningLog* warnings) {
    for (const auto& doc : training_docs) {
        for (const auto& m : doc.mentions) {
            if (!m.has_gold() || m.gold_is_nil()) continue;
            auto it = kb.by_id.find(*m.gold);
            if (it == kb.by_id.end()) {
                if (warnings)
                    warnings->add("augment_kb: gold entity '" + *m.gold + "' of doc '" +
                                  doc.doc_id + "' not in KB; skipped");
                continue;
            }
            kb.add_augmented_name(it->second, m.tokens);
        }
    }
}

std::string sentence_around(const std::string& text, int start) {
    if (text.empty()) return {};
    std::size_t pos = std::min<std::size_t>(static_cast<std::size_t>(std::max(start, 0)),
                                            text.size() - 1);
    const auto is_boundary = [](char c) {
        return c == '.' || c == '!' || c == '?' || c == '\n';
    };
    std::size_t b = pos;
    while (b > 0 && !is_boundary(text[b - 1])) b--;
    std::size_t e = pos;
    while (e < text.size() && !is_boundary(text[e])) e++;
    return text.substr(b, e - b);
}

}  // namespace medlink
