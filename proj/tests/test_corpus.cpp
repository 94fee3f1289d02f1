#include <sstream>

#include "doctest.h"
#include "mect/error.hpp"
#include "oracles.hpp"

using namespace mect;

namespace {

std::vector<Sentence> parse(const std::string& text, Scheme scheme = Scheme::BMES) {
  std::istringstream in(text);
  return parse_conll(in, scheme, "test.txt");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Contract;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("two line sentence") {
  auto s = parse("中\tB-LOC\n国\tE-LOC\n");
  REQUIRE(s.size() == 1);
  CHECK(s[0].chars == std::vector<std::string>{"中", "国"});
  CHECK(spans_from_labels(s[0].labels, Scheme::BMES) == std::vector<EntitySpan>{{1, 2, "LOC"}});
  CHECK(parse("").empty());
  CHECK(parse("\n\n").empty());
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse("中\tB-LOC\n国\tE-LOC\textra\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("test.txt:2") != std::string::npos);
  }
  CHECK(kind_of([] { parse("中\tX-LOC\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("中\tB-LOC\n国\tI-LOC\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("中\tS-LOC\n", Scheme::BIO); }) == ErrorKind::Parse);
}

TEST_CASE("BIO input is canonicalised to BMES") {
  auto s = parse("张\tB-PER\n三\tI-PER\n在\tO\n京\tB-LOC\n", Scheme::BIO);
  REQUIRE(s.size() == 1);
  CHECK(s[0].labels == std::vector<std::string>{"B-PER", "E-PER", "O", "S-LOC"});
  CHECK(s[0].scheme == Scheme::BIO);
  std::ostringstream out;
  write_conll(out, s[0].chars, s[0].labels, Scheme::BIO);
  CHECK(out.str() == "张\tB-PER\n三\tI-PER\n在\tO\n京\tB-LOC\n\n");
}

TEST_CASE("stats count sentences and entities") {
  const std::string text =
      "我\tO\n在\tO\n北\tB-LOC\n京\tE-LOC\n\n"
      "张\tB-PER\n三\tE-PER\n和\tO\n李\tS-PER\n\n"
      "华\tB-ORG\n为\tE-ORG\n";
  auto sentences = parse(text);
  std::size_t brute = 0;
  for (const auto& s : sentences) brute += oracle::brute_spans(s.labels, Scheme::BMES).size();
  auto stats = compute_stats(sentences);
  CHECK(stats.sentences == 3);
  CHECK(stats.entities == brute);
  CHECK(stats.entities == 4);
  CHECK(stats.entities_by_type.at("PER") == 2);
  auto table = format_stats({{"Toy", stats}});
  CHECK(table.find("Sentences") != std::string::npos);
  CHECK(table.find("Entities") != std::string::npos);
}

TEST_CASE("bundled toy corpus") {
  auto train = load_conll(MECT_TEST_DATA_DIR "/train.txt", Scheme::BMES);
  CHECK(train.size() == 20);
  std::size_t brute = 0;
  for (const auto& s : train) brute += oracle::brute_spans(s.labels, Scheme::BMES).size();
  CHECK(compute_stats(train).entities == brute);
}

TEST_CASE("radical table") {
  std::istringstream in("题\t日一走页\n渡\t氵 广 廿 又\n# comment\n脸\t月人一ツ一\n");
  auto table = parse_radical_table(in);
  CHECK(table.lookup("题") == std::vector<std::string>{"日", "一", "走", "页"});
  CHECK(table.lookup("渡") == std::vector<std::string>{"氵", "广", "廿", "又"});
  CHECK(table.lookup("脸").size() == 5);
  CHECK(table.lookup("X") == std::vector<std::string>{"X"});
  CHECK_FALSE(table.contains("X"));

  std::istringstream same("题\t日一走页\n题\t日一走页\n");
  CHECK(parse_radical_table(same).size() == 1);

  std::istringstream conflict("题\t日一走页\n题\t日走\n");
  try {
    parse_radical_table(conflict);
    FAIL("expected a conflict error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("日一走页") != std::string::npos);
    CHECK(msg.find("日走") != std::string::npos);
  }
}

TEST_CASE("lexicon trie") {
  std::istringstream in("重庆\n药店\n");
  auto lex = parse_lexicon(in);
  CHECK(lex.contains("重庆"));
  CHECK(lex.contains("药店"));
  CHECK_FALSE(lex.contains("重店"));
  CHECK_FALSE(lex.add("重"));
  CHECK_FALSE(lex.add("重庆"));

  auto ten = load_lexicon(MECT_TEST_DATA_DIR "/lexicon.txt");
  CHECK(ten.size() == 10);
  CHECK(ten.node_count() == oracle::prefix_count(ten.words()));
  for (const auto& w : ten.words()) CHECK(ten.contains(w));
}

TEST_CASE("embeddings") {
  std::istringstream ok("2 3\n中 0.1 0.2 0.3\n国 1 2 3\n");
  auto e = parse_embeddings(ok, 3);
  CHECK(e.vectors.at("国") == std::vector<double>{1, 2, 3});

  std::istringstream dim("2 3\n中 0.1 0.2 0.3\n国 1 2 3\n");
  CHECK(kind_of([&] { parse_embeddings(dim, 4); }) == ErrorKind::Config);

  std::istringstream cols("2 3\n中 0.1 0.2 0.3\n国 1 2\n");
  try {
    parse_embeddings(cols, 3, "emb.txt");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("emb.txt:3") != std::string::npos);
  }
}

TEST_CASE("span decoding examples") {
  CHECK(spans_from_labels({"B-PER", "E-PER", "O"}, Scheme::BMES) ==
        std::vector<EntitySpan>{{1, 2, "PER"}});
  CHECK(spans_from_labels({"O", "O"}, Scheme::BMES).empty());
  auto d = decode_spans({"E-PER", "O", "B-LOC", "M-LOC"}, Scheme::BMES);
  CHECK(d.spans.empty());
  CHECK(d.repairs == 2);
}

TEST_CASE("span decoding equals the brute-force scanner") {
  Rng rng(11);
  for (auto scheme : {Scheme::BMES, Scheme::BIO}) {
    for (int trial = 0; trial < 50; ++trial) {
      auto labels = oracle::random_labels(rng, 1 + rng.below(12), scheme);
      CAPTURE(trial);
      CHECK(spans_from_labels(labels, scheme) == oracle::brute_spans(labels, scheme));
    }
  }
}

TEST_CASE("labels round trip through spans") {
  Rng rng(12);
  for (auto scheme : {Scheme::BMES, Scheme::BIO}) {
    for (int trial = 0; trial < 50; ++trial) {
      auto labels = oracle::random_labels(rng, 1 + rng.below(12), scheme);
      auto spans = spans_from_labels(labels, scheme);
      auto clean = labels_from_spans(spans, labels.size(), scheme);
      CHECK(spans_from_labels(clean, scheme) == spans);
      CHECK(labels_from_spans(spans_from_labels(clean, scheme), clean.size(), scheme) == clean);
    }
  }
}

TEST_CASE("vocabulary") {
  auto train = parse("北\tB-LOC\n京\tE-LOC\n\n我\tO\n");
  std::istringstream lin("北京\n上海\n");
  auto lex = parse_lexicon(lin);
  RadicalTable radicals;
  radicals.insert("北", {"丬", "匕"});
  auto v = build_vocab(train, lex, radicals);
  CHECK(v.chars.symbol(SymbolTable::kPad) == SymbolTable::kPadSymbol);
  CHECK(v.chars.id("北") == 2);
  CHECK(v.chars.id("不") == SymbolTable::kUnk);
  CHECK(v.words.id("上海") == 3);
  CHECK(v.labels.id("O") == 0);
  CHECK(v.labels.contains("S-LOC"));
  CHECK_FALSE(v.labels.contains("B-PER"));
  CHECK(v.components.contains("丬"));
  CHECK(v.components.contains("京"));
}

}  // TEST_SUITE
