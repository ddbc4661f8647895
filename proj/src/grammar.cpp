#include "cvc/grammar.hpp"

#include <fstream>
#include <sstream>

#include "cvc/errors.hpp"

namespace cvc {

namespace {

const char* size_word(Size s) { return s == Size::Many ? "many" : "few"; }
const char* movement_word(Movement m) { return m == Movement::Walk ? "walk" : "run"; }
const char* direction_word(Direction d) { return d == Direction::In ? "in" : "out"; }

// Content tokens in id order: the six attribute words, then the constant
// word "people".
const std::vector<std::string>& content_tokens() {
    static const std::vector<std::string> tokens = {"many", "few", "walk", "run",
                                                    "in",   "out", "people"};
    return tokens;
}

} // namespace

std::size_t class_id(const AttributeTriple& triple) {
    return static_cast<std::size_t>(triple.size) * 4 +
           static_cast<std::size_t>(triple.movement) * 2 +
           static_cast<std::size_t>(triple.direction);
}

AttributeTriple triple_from_class_id(std::size_t id) {
    if (id >= kNumLabels) throw NotALabel("class id out of range");
    AttributeTriple t;
    t.size = static_cast<Size>((id >> 2) & 1);
    t.movement = static_cast<Movement>((id >> 1) & 1);
    t.direction = static_cast<Direction>(id & 1);
    return t;
}

std::string Caption::text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

Caption caption_from_text(const std::string& line) {
    Caption c;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) c.tokens.push_back(tok);
    return c;
}

Caption render_caption(const AttributeTriple& triple) {
    Caption c;
    c.tokens = {size_word(triple.size), "people", movement_word(triple.movement),
                direction_word(triple.direction)};
    return c;
}

AttributeTriple parse_caption(const Caption& caption) {
    for (std::size_t id = 0; id < kNumLabels; ++id) {
        AttributeTriple t = triple_from_class_id(id);
        if (render_caption(t) == caption) return t;
    }
    throw NotALabel("not one of the 8 label sentences: \"" + caption.text() + "\"");
}

std::vector<Caption> all_labels() {
    std::vector<Caption> labels;
    labels.reserve(kNumLabels);
    for (std::size_t id = 0; id < kNumLabels; ++id) {
        labels.push_back(render_caption(triple_from_class_id(id)));
    }
    return labels;
}

Vocabulary::Vocabulary() {
    tokens_ = {"<pad>", "<bos>", "<eos>"};
    for (const auto& t : content_tokens()) tokens_.push_back(t);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}

std::size_t Vocabulary::id_of(const std::string& token) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i] == token) return i;
    }
    throw UnknownToken("token not in vocabulary: \"" + token + "\"");
}

const std::string& Vocabulary::token_of(std::size_t id) const {
    if (id >= tokens_.size()) throw UnknownToken("token id out of range");
    return tokens_[id];
}

bool Vocabulary::contains(const std::string& token) const {
    for (const auto& t : tokens_) {
        if (t == token) return true;
    }
    return false;
}

std::string Vocabulary::serialize() const {
    std::string out;
    for (const auto& t : tokens_) {
        out += t;
        out += '\n';
    }
    return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open vocabulary file for writing: " + path.string());
    out << serialize();
    if (!out) throw IoFailure("failed writing vocabulary file: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open vocabulary file: " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) tokens.push_back(line);
    }
    if (tokens.size() < 3 || tokens[0] != "<pad>" || tokens[1] != "<bos>" || tokens[2] != "<eos>") {
        throw CorruptFile("vocabulary file must start with <pad>, <bos>, <eos>: " + path.string());
    }
    return Vocabulary(std::move(tokens));
}

std::uint64_t Vocabulary::hash() const {
    // FNV-1a, 64-bit
    std::uint64_t h = 14695981039346656037ull;
    for (char c : serialize()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::size_t> encode_tokens(const Caption& caption, const Vocabulary& vocab,
                                       std::size_t max_caption_len) {
    if (caption.length() > max_caption_len) {
        throw LengthMismatch("caption longer than max_caption_len");
    }
    std::vector<std::size_t> ids;
    ids.reserve(max_caption_len + 2);
    ids.push_back(Vocabulary::kBosId);
    for (const auto& tok : caption.tokens) ids.push_back(vocab.id_of(tok));
    ids.push_back(Vocabulary::kEosId);
    while (ids.size() < max_caption_len + 2) ids.push_back(Vocabulary::kPadId);
    return ids;
}

Caption decode_tokens(const std::vector<std::size_t>& ids, const Vocabulary& vocab) {
    Caption c;
    for (std::size_t id : ids) {
        if (id == Vocabulary::kEosId) break;
        if (vocab.is_special(id)) continue;
        c.tokens.push_back(vocab.token_of(id));
    }
    return c;
}

} // namespace cvc
