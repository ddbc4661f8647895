#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "cvc/errors.hpp"
#include "cvc/grammar.hpp"

using namespace cvc;

TEST_CASE("render_caption follows the <size> people <movement> <direction> template") {
    CHECK(render_caption({Size::Many, Movement::Walk, Direction::In}).text() ==
          "many people walk in");
    CHECK(render_caption({Size::Few, Movement::Run, Direction::Out}).text() ==
          "few people run out");
    CHECK(render_caption({Size::Many, Movement::Run, Direction::In}).text() ==
          "many people run in");
}

TEST_CASE("parse_caption inverts render_caption") {
    AttributeTriple t = parse_caption(caption_from_text("many people walk in"));
    CHECK(t == AttributeTriple{Size::Many, Movement::Walk, Direction::In});
    t = parse_caption(caption_from_text("few people run out"));
    CHECK(t == AttributeTriple{Size::Few, Movement::Run, Direction::Out});
    CHECK_THROWS_AS(parse_caption(caption_from_text("people many walk in")), NotALabel);
    CHECK_THROWS_AS(parse_caption(caption_from_text("many people walk")), NotALabel);
    CHECK_THROWS_AS(parse_caption(Caption{}), NotALabel);
}

TEST_CASE("parse after render is the identity for all 8 triples") {
    for (std::size_t id = 0; id < kNumLabels; ++id) {
        AttributeTriple t = triple_from_class_id(id);
        CHECK(parse_caption(render_caption(t)) == t);
        CHECK(class_id(t) == id);
    }
}

TEST_CASE("all_labels is the 8 distinct sentences in class-id order") {
    auto labels = all_labels();
    REQUIRE(labels.size() == 8);
    CHECK(labels[0].text() == "many people walk in");
    std::set<std::string> texts;
    for (const auto& label : labels) texts.insert(label.text());
    CHECK(texts.size() == 8); // render is injective over the domain
}

TEST_CASE("vocabulary has 7 content tokens behind the 3 specials") {
    Vocabulary vocab;
    CHECK(vocab.size() == 10);
    CHECK(vocab.content_size() == 7);
    CHECK(vocab.token_of(Vocabulary::kPadId) == "<pad>");
    CHECK(vocab.token_of(Vocabulary::kBosId) == "<bos>");
    CHECK(vocab.token_of(Vocabulary::kEosId) == "<eos>");
    for (const char* word : {"many", "few", "walk", "run", "in", "out", "people"}) {
        CHECK(vocab.contains(word));
        CHECK(vocab.id_of(word) >= 3);
    }
    CHECK_THROWS_AS(vocab.id_of("red"), UnknownToken);
}

TEST_CASE("vocabulary ids are dense, unique and stable across save/load") {
    Vocabulary vocab;
    std::set<std::size_t> ids;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        ids.insert(vocab.id_of(vocab.token_of(i)));
    }
    CHECK(ids.size() == vocab.size());
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == vocab.size() - 1);

    auto path = std::filesystem::temp_directory_path() / "cvc_vocab_test.txt";
    vocab.save(path);
    Vocabulary loaded = Vocabulary::load(path);
    CHECK(loaded.size() == vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        CHECK(loaded.token_of(i) == vocab.token_of(i));
    }
    CHECK(loaded.hash() == vocab.hash());
    std::filesystem::remove(path);
}

TEST_CASE("encode_tokens pads to max_caption_len + 2") {
    Vocabulary vocab;
    auto ids = encode_tokens(caption_from_text("many people walk in"), vocab, 8);
    REQUIRE(ids.size() == 10);
    std::vector<std::size_t> expected = {
        Vocabulary::kBosId,  vocab.id_of("many"), vocab.id_of("people"), vocab.id_of("walk"),
        vocab.id_of("in"),   Vocabulary::kEosId,  Vocabulary::kPadId,    Vocabulary::kPadId,
        Vocabulary::kPadId,  Vocabulary::kPadId};
    CHECK(ids == expected);

    auto empty = encode_tokens(Caption{}, vocab, 8);
    REQUIRE(empty.size() == 10);
    CHECK(empty[0] == Vocabulary::kBosId);
    CHECK(empty[1] == Vocabulary::kEosId);
    for (std::size_t i = 2; i < empty.size(); ++i) CHECK(empty[i] == Vocabulary::kPadId);

    CHECK_THROWS_AS(encode_tokens(caption_from_text("many people walk red"), vocab, 8),
                    UnknownToken);
}

TEST_CASE("encode/decode round-trips every label caption") {
    Vocabulary vocab;
    for (const auto& label : all_labels()) {
        CHECK(decode_tokens(encode_tokens(label, vocab, 8), vocab) == label);
    }
}
