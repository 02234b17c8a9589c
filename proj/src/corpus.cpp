#include "reread/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "reread/error.hpp"

namespace reread {

using ordered_json = nlohmann::ordered_json;

VerificationLabel label_from_index(std::size_t index) {
    if (index >= kNumLabels) throw IndexError("label index " + std::to_string(index) + " out of range");
    return static_cast<VerificationLabel>(index);
}

std::string_view label_code(VerificationLabel label) {
    switch (label) {
        case VerificationLabel::Refuted: return "REF";
        case VerificationLabel::Supported: return "SUP";
        case VerificationLabel::NotEnoughInfo: return "NEI";
    }
    return "NEI";
}

std::optional<VerificationLabel> parse_label(std::string_view code) {
    if (code == "REF") return VerificationLabel::Refuted;
    if (code == "SUP") return VerificationLabel::Supported;
    if (code == "NEI") return VerificationLabel::NotEnoughInfo;
    return std::nullopt;
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::istringstream is{std::string(text)};
    std::string tok;
    while (is >> tok) out.push_back(std::move(tok));
    return out;
}

std::string join_tokens(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

bool ClaimDocument::has_gold_evidence() const {
    for (auto g : gold_evidence)
        if (g) return true;
    return false;
}

std::string_view split_name(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "train";
}

void validate_example(const ClaimDocument& ex) {
    if (ex.id.empty()) throw ValidationError("example has an empty id");
    if (ex.claim.empty()) throw ValidationError("example '" + ex.id + "' has an empty claim");
    if (ex.doc_sentences.empty()) throw ValidationError("example '" + ex.id + "' has no document sentences");
    for (std::size_t i = 0; i < ex.doc_sentences.size(); ++i) {
        if (ex.doc_sentences[i].empty()) {
            throw ValidationError("example '" + ex.id + "' has an empty sentence at position " + std::to_string(i));
        }
    }
    if (ex.gold_evidence.size() != ex.doc_sentences.size()) {
        throw ValidationError("example '" + ex.id + "': gold_evidence has " + std::to_string(ex.gold_evidence.size()) +
                              " entries but the document has " + std::to_string(ex.doc_sentences.size()) +
                              " sentences");
    }
    for (auto g : ex.gold_evidence) {
        if (g > 1) throw ValidationError("example '" + ex.id + "': gold_evidence entries must be 0 or 1");
    }
}

namespace {

ClaimDocument parse_example(const ordered_json& j) {
    if (!j.is_object()) throw ValidationError("expected a JSON object");
    for (const char* key : {"id", "claim", "document", "gold_evidence", "label"}) {
        if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
    }
    ClaimDocument ex;
    try {
        ex.id = j.at("id").get<std::string>();
        ex.claim = tokenize(j.at("claim").get<std::string>());
        for (const auto& s : j.at("document")) ex.doc_sentences.push_back(tokenize(s.get<std::string>()));
        for (const auto& g : j.at("gold_evidence")) {
            const int v = g.get<int>();
            if (v != 0 && v != 1) throw ValidationError("gold_evidence entries must be 0 or 1");
            ex.gold_evidence.push_back(static_cast<std::uint8_t>(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("field has the wrong type: ") + e.what());
    }
    const auto label_str = j.at("label").is_string() ? j.at("label").get<std::string>() : std::string{};
    const auto label = parse_label(label_str);
    if (!label) throw ValidationError("unknown label '" + label_str + "'");
    ex.label = *label;
    validate_example(ex);
    return ex;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, Split split, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());

    Dataset ds;
    ds.split = split;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + "malformed JSON: " + e.what());
        }
        ClaimDocument ex;
        try {
            ex = parse_example(j);
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        if (!seen.insert(ex.id).second) throw ValidationError(where + "duplicate id '" + ex.id + "'");
        if (warnings && ex.label != VerificationLabel::NotEnoughInfo && !ex.has_gold_evidence()) {
            warnings->push_back(where + "example '" + ex.id + "' is " + std::string(label_code(ex.label)) +
                                " but has no gold evidence");
        }
        ds.examples.push_back(std::move(ex));
    }
    if (in.bad()) throw IoError("error reading " + path.string());
    return ds;
}

std::string example_to_json_line(const ClaimDocument& ex) {
    ordered_json j;
    j["id"] = ex.id;
    j["claim"] = join_tokens(ex.claim);
    j["document"] = ordered_json::array();
    for (const auto& s : ex.doc_sentences) j["document"].push_back(join_tokens(s));
    j["gold_evidence"] = ordered_json::array();
    for (auto g : ex.gold_evidence) j["gold_evidence"].push_back(static_cast<int>(g));
    j["label"] = std::string(label_code(ex.label));
    return j.dump();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& ex : ds.examples) out << example_to_json_line(ex) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace reread
