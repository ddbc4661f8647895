#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cvc {

// The caption language is closed: three binary attributes, eight sentences.
enum class Size : std::uint8_t { Many = 0, Few = 1 };
enum class Movement : std::uint8_t { Walk = 0, Run = 1 };
enum class Direction : std::uint8_t { In = 0, Out = 1 };

struct AttributeTriple {
    Size size = Size::Many;
    Movement movement = Movement::Walk;
    Direction direction = Direction::In;

    bool operator==(const AttributeTriple&) const = default;
};

inline constexpr std::size_t kNumLabels = 8; // 2^3 attribute combinations

// Class ids are size-major: id = size*4 + movement*2 + direction.
std::size_t class_id(const AttributeTriple& triple);
AttributeTriple triple_from_class_id(std::size_t id);

// A caption is an ordered sequence of content tokens, no specials.
struct Caption {
    std::vector<std::string> tokens;

    std::size_t length() const { return tokens.size(); }
    std::string text() const;
    bool operator==(const Caption&) const = default;
};

Caption caption_from_text(const std::string& line);

// "<size> people <movement> <direction>", lowercase.
Caption render_caption(const AttributeTriple& triple);

// Inverse of render_caption. Throws NotALabel when the token sequence is
// not one of the eight label sentences.
AttributeTriple parse_caption(const Caption& caption);

// The eight label sentences in class-id order.
std::vector<Caption> all_labels();

// Token <-> id map. Specials occupy the first ids: PAD=0, BOS=1, EOS=2;
// content tokens follow in a fixed documented order.
class Vocabulary {
public:
    Vocabulary();

    static constexpr std::size_t kPadId = 0;
    static constexpr std::size_t kBosId = 1;
    static constexpr std::size_t kEosId = 2;

    std::size_t size() const { return tokens_.size(); }
    std::size_t content_size() const { return tokens_.size() - 3; }

    // Throws UnknownToken for tokens outside the vocabulary.
    std::size_t id_of(const std::string& token) const;
    const std::string& token_of(std::size_t id) const;
    bool contains(const std::string& token) const;
    bool is_special(std::size_t id) const { return id < 3; }

    // One token per line, line number = id, specials first (PAD, BOS, EOS).
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    // FNV-1a over the serialized form; pinned into checkpoints.
    std::uint64_t hash() const;

private:
    explicit Vocabulary(std::vector<std::string> tokens);
    std::vector<std::string> tokens_;
};

// Encodes as [BOS, token ids..., EOS, PAD...] with total length
// max_caption_len + 2. Throws UnknownToken for out-of-vocabulary tokens.
std::vector<std::size_t> encode_tokens(const Caption& caption, const Vocabulary& vocab,
                                       std::size_t max_caption_len = 8);

// Strips specials and maps ids back to tokens.
Caption decode_tokens(const std::vector<std::size_t>& ids, const Vocabulary& vocab);

} // namespace cvc
