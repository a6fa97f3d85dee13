#include "medlink/text.hpp"

#include <algorithm>
#include <cctype>

#include "medlink/util.hpp"

namespace medlink {

namespace {

struct CpRange {
    char32_t lo, hi;
};
struct CpPair {
    char32_t from, to;
};

#include "unicode_tables.inc"

}  // namespace

bool is_space_class_cp(char32_t cp) {
    auto it = std::upper_bound(std::begin(kSpaceClassRanges), std::end(kSpaceClassRanges),
                               cp, [](char32_t v, const CpRange& r) { return v < r.lo; });
    if (it == std::begin(kSpaceClassRanges)) return false;
    --it;
    return cp >= it->lo && cp <= it->hi;
}

char32_t lower_cp(char32_t cp) {
    if (cp < 0x80) {
        if (cp >= U'A' && cp <= U'Z') return cp + 32;
        return cp;
    }
    auto it = std::lower_bound(std::begin(kLowerMap), std::end(kLowerMap), cp,
                               [](const CpPair& p, char32_t v) { return p.from < v; });
    if (it != std::end(kLowerMap) && it->from == cp) return it->to;
    return cp;
}

void NumeralDictionary::insert(const std::string& form, const std::string& image) {
    std::string key;
    for (char32_t cp : to_codepoints(form)) encode_utf8(lower_cp(cp), key);
    std::vector<std::string> toks = split_ws(image);
    for (auto& t : toks) {
        std::string lowered;
        for (char32_t cp : to_codepoints(t)) encode_utf8(lower_cp(cp), lowered);
        t = lowered;
    }
    if (key.empty() || toks.empty())
        throw ValidationError("numeral dictionary: empty form or image");
    entries_[key] = std::move(toks);
}

void NumeralDictionary::validate() const {
    // Images must be fixed points so that normalize_text stays idempotent.
    for (const auto& [form, image] : entries_) {
        for (const auto& tok : image) {
            auto it = entries_.find(tok);
            if (it != entries_.end() && !(it->second.size() == 1 && it->second[0] == tok))
                throw ValidationError("numeral dictionary: image token '" + tok +
                                      "' of form '" + form + "' is not a fixed point");
            for (char32_t cp : to_codepoints(tok))
                if (is_space_class_cp(cp) || lower_cp(cp) != cp)
                    throw ValidationError("numeral dictionary: image token '" + tok +
                                          "' is not a normalized token");
        }
    }
}

NumeralDictionary NumeralDictionary::load(const std::string& path) {
    NumeralDictionary dict;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); i++) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_char(line, '\t');
        if (cols.size() != 2)
            throw ValidationError(path + ":" + std::to_string(i + 1) +
                                  ": expected form<TAB>english");
        dict.insert(cols[0], cols[1]);
    }
    dict.validate();
    return dict;
}

NumeralDictionary NumeralDictionary::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    NumeralDictionary dict;
    for (const auto& [form, image] : pairs) dict.insert(form, image);
    dict.validate();
    return dict;
}

const std::vector<std::string>* NumeralDictionary::find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
}

TokenSequence normalize_text(std::string_view raw, const NumeralDictionary& numerals) {
    std::string cleaned;
    cleaned.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        char32_t cp = decode_utf8(raw, i);
        if (cp == 0xFFFD || is_space_class_cp(cp) || cp < 0x21) {
            cleaned.push_back(' ');
        } else {
            encode_utf8(lower_cp(cp), cleaned);
        }
    }
    TokenSequence out;
    for (const auto& tok : split_ws(cleaned)) {
        if (const auto* image = numerals.find(tok)) {
            out.insert(out.end(), image->begin(), image->end());
        } else {
            out.push_back(tok);
        }
    }
    return out;
}

AbbreviationDictionary AbbreviationDictionary::load(const std::string& path) {
    AbbreviationDictionary dict;
    auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); i++) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_char(line, '\t');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            throw ValidationError(path + ":" + std::to_string(i + 1) +
                                  ": expected short<TAB>long");
        if (cols[0] == cols[1])
            throw ValidationError(path + ":" + std::to_string(i + 1) +
                                  ": short form maps to itself");
        dict.add(cols[0], cols[1], AbbrevSource::GlobalDictionary);
    }
    return dict;
}

void AbbreviationDictionary::add(const std::string& short_form,
                                 const std::string& long_form, AbbrevSource source) {
    if (short_form == long_form) return;
    entries_.emplace(short_form, AbbrevEntry{long_form, source});
}

const AbbrevEntry* AbbreviationDictionary::find(const std::string& short_form) const {
    auto it = entries_.find(short_form);
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

bool is_ascii_alpha(char32_t cp) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}
bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }
bool is_ascii_upper(char32_t cp) { return cp >= U'A' && cp <= U'Z'; }

std::string trim_punct(std::string_view chunk) {
    auto cps = to_codepoints(chunk);
    std::size_t b = 0, e = cps.size();
    while (b < e && !is_ascii_alpha(cps[b]) && !is_ascii_digit(cps[b])) b++;
    while (e > b && !is_ascii_alpha(cps[e - 1]) && !is_ascii_digit(cps[e - 1])) e--;
    return from_codepoints(std::vector<char32_t>(cps.begin() + static_cast<long>(b),
                                                 cps.begin() + static_cast<long>(e)));
}

std::string lower_ascii(std::string_view s) {
    std::string out;
    for (char32_t cp : to_codepoints(s)) encode_utf8(lower_cp(cp), out);
    return out;
}

// True when the candidate short form looks like an abbreviation.
bool short_form_shape_ok(const std::vector<char32_t>& cps) {
    if (cps.size() < 2 || cps.size() > 10) return false;
    std::size_t strong = 0;
    for (char32_t cp : cps) {
        if (is_space_class_cp(cp) || cp <= 0x20) return false;
        if (is_ascii_upper(cp) || is_ascii_digit(cp)) strong++;
    }
    return strong * 2 >= cps.size();
}

}  // namespace

AbbreviationDictionary detect_local_abbreviations(std::string_view text) {
    AbbreviationDictionary dict;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find('(', pos);
        if (open == std::string_view::npos) break;
        std::size_t close = text.find(')', open + 1);
        if (close == std::string_view::npos) break;
        pos = open + 1;
        std::string_view inner = text.substr(open + 1, close - open - 1);
        if (inner.find('(') != std::string_view::npos) continue;

        auto inner_toks = split_ws(inner);
        if (inner_toks.size() != 1) continue;
        const std::string& short_form = inner_toks[0];
        auto cps = to_codepoints(short_form);
        if (!short_form_shape_ok(cps)) continue;

        std::size_t n_upper = 0;
        for (char32_t cp : cps)
            if (is_ascii_upper(cp)) n_upper++;
        if (n_upper < 1 || n_upper > 8) continue;

        // Collect the preceding n_upper tokens, not crossing a sentence break.
        auto before = split_ws(text.substr(0, open));
        std::vector<std::string> window;
        bool blocked = false;
        for (std::size_t got = 0; got < n_upper; got++) {
            if (before.size() < got + 1) {
                blocked = true;
                break;
            }
            const std::string& chunk = before[before.size() - 1 - got];
            if (chunk.find_first_of(".!?;()") != std::string::npos) {
                blocked = true;
                break;
            }
            std::string tok = trim_punct(chunk);
            if (tok.empty()) {
                blocked = true;
                break;
            }
            window.insert(window.begin(), tok);
        }
        if (blocked || window.size() != n_upper) continue;

        // Greedy left-to-right: each window token's initial must be found in
        // SHORT after the previous hit; at least one hit required.
        std::string short_lower = lower_ascii(short_form);
        std::size_t cursor = 0, hits = 0;
        for (const auto& tok : window) {
            char32_t initial = lower_cp(to_codepoints(tok)[0]);
            if (initial > 0x7F) continue;
            std::size_t found = short_lower.find(static_cast<char>(initial), cursor);
            if (found != std::string::npos) {
                hits++;
                cursor = found + 1;
            }
        }
        if (hits < 1) continue;

        std::string long_form = lower_ascii(join(window, " "));
        if (long_form == lower_ascii(short_form)) continue;
        dict.add(short_form, long_form, AbbrevSource::DocumentLocal);
    }
    return dict;
}

std::string expand_abbreviation_string(std::string_view surface,
                                       const AbbreviationDictionary& local,
                                       const AbbreviationDictionary& global) {
    const auto lookup = [&](const std::string& key) -> const AbbrevEntry* {
        if (const auto* e = local.find(key)) return e;
        return global.find(key);
    };

    std::string whole = trim_punct(surface);
    if (const auto* e = lookup(whole)) return e->long_form;

    // Expand the first matching token only.
    auto chunks = split_ws(surface);
    for (std::size_t ci = 0; ci < chunks.size(); ci++) {
        std::string tok = trim_punct(chunks[ci]);
        if (tok.empty()) continue;
        if (const auto* e = lookup(tok)) {
            std::size_t at = chunks[ci].find(tok);
            std::string replaced = chunks[ci];
            replaced.replace(at, tok.size(), e->long_form);
            std::vector<std::string> out(chunks);
            out[ci] = replaced;
            return join(out, " ");
        }
    }
    return std::string(surface);
}

}  // namespace medlink
