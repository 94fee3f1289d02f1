#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mect {

enum class Scheme { BMES, BIO };

Scheme parse_scheme(std::string_view name);
std::string scheme_name(Scheme scheme);

// Splits UTF-8 text into code points, each kept as its own byte string.
// Throws a parse error on malformed UTF-8.
std::vector<std::string> utf8_chars(std::string_view text);

// (start, end, type) with 1-based inclusive character positions.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;

  auto operator<=>(const EntitySpan&) const = default;
};

// A tagged sentence. Labels are always held in BMES form; `scheme` records
// the scheme of the file it came from so output can be written back in it.
struct Sentence {
  std::vector<std::string> chars;
  std::vector<std::string> labels;
  Scheme scheme = Scheme::BMES;
  std::size_t repairs = 0;  // malformed runs dropped while loading
};

struct SpanDecode {
  std::vector<EntitySpan> spans;  // sorted, unique
  std::size_t repairs = 0;        // malformed runs that were dropped
};

// Decodes maximal well-formed entity runs. Malformed runs (an E or M with
// no matching open B, a B left open, a type switch mid-entity) are dropped
// and counted instead of raising.
SpanDecode decode_spans(const std::vector<std::string>& labels, Scheme scheme);
std::vector<EntitySpan> spans_from_labels(const std::vector<std::string>& labels,
                                          Scheme scheme);
std::vector<std::string> labels_from_spans(const std::vector<EntitySpan>& spans,
                                           std::size_t length, Scheme scheme);

struct DatasetStats {
  std::size_t sentences = 0;
  std::size_t characters = 0;
  std::size_t entities = 0;
  std::size_t repairs = 0;
  std::map<std::string, std::size_t> entities_by_type;
};

DatasetStats compute_stats(const std::vector<Sentence>& sentences);
// Plain-text table with Sentences / Entities rows, one column per split.
std::string format_stats(
    const std::vector<std::pair<std::string, DatasetStats>>& splits);

// CoNLL-style reader: `char<TAB>label` per line (a single space is also
// accepted), blank line between sentences. Labels must follow `scheme`.
std::vector<Sentence> parse_conll(std::istream& in, Scheme scheme,
                                  const std::string& source = "<stream>");
std::vector<Sentence> load_conll(const std::string& path, Scheme scheme);
// Writes `char<TAB>label` lines with labels converted to `scheme`.
void write_conll(std::ostream& out, const std::vector<std::string>& chars,
                 const std::vector<std::string>& bmes_labels, Scheme scheme);

// Character -> ordered structural components. Unmapped characters decompose
// to themselves.
class RadicalTable {
 public:
  void insert(const std::string& ch, std::vector<std::string> components);
  bool contains(const std::string& ch) const;
  std::vector<std::string> lookup(const std::string& ch) const;
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return table_;
  }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

RadicalTable parse_radical_table(std::istream& in,
                                 const std::string& source = "<stream>");
RadicalTable load_radical_table(const std::string& path);

// Character trie over lexicon words of length >= 2.
class Lexicon {
 public:
  Lexicon();

  // Returns false (and stores nothing) for words shorter than two
  // characters or already present.
  bool add(const std::string& word);
  bool contains(const std::string& word) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t max_word_length() const { return max_len_; }
  // Trie nodes excluding the root, i.e. the number of distinct non-empty
  // prefixes of the stored words.
  std::size_t node_count() const { return nodes_.size() - 1; }

  // Calls visit(end) for every stored word chars[start..end] (0-based,
  // inclusive), in increasing end order.
  template <typename Visit>
  void match_from(const std::vector<std::string>& chars, std::size_t start,
                  Visit&& visit) const {
    std::int32_t node = 0;
    const std::size_t limit = std::min(chars.size(), start + max_len_);
    for (std::size_t j = start; j < limit; ++j) {
      node = child(node, chars[j]);
      if (node < 0) return;
      if (nodes_[node].terminal && j > start) visit(j);
    }
  }

 private:
  struct TrieNode {
    std::map<std::string, std::int32_t> children;
    bool terminal = false;
  };
  std::int32_t child(std::int32_t node, const std::string& ch) const;

  std::vector<TrieNode> nodes_;
  std::vector<std::string> words_;
  std::size_t max_len_ = 0;
};

Lexicon parse_lexicon(std::istream& in);
Lexicon load_lexicon(const std::string& path);

struct Embeddings {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};

// Header `count dim`, then `token v1 ... v_dim` rows. When expected_dim is
// non-zero a different header dim is a config error.
Embeddings parse_embeddings(std::istream& in, std::size_t expected_dim,
                            const std::string& source = "<stream>");
Embeddings load_embeddings(const std::string& path, std::size_t expected_dim);

// Dense string <-> id map. Optionally reserves PAD = 0 and UNK = 1.
class SymbolTable {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadSymbol = "<pad>";
  static constexpr const char* kUnkSymbol = "<unk>";

  explicit SymbolTable(bool reserve_special = true);

  std::size_t add(const std::string& symbol);
  // Falls back to UNK when reserved, otherwise throws.
  std::size_t id(const std::string& symbol) const;
  bool contains(const std::string& symbol) const;
  const std::string& symbol(std::size_t id) const;
  std::size_t size() const { return symbols_.size(); }
  bool has_special() const { return reserve_special_; }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  bool reserve_special_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct Vocab {
  SymbolTable chars{true};
  SymbolTable words{true};
  SymbolTable components{true};
  SymbolTable labels{false};  // "O" is always id 0
};

// Characters and components come from the training sentences in order of
// first occurrence, words from the lexicon in file order, labels as the
// full B/M/E/S family of each entity type seen in training.
Vocab build_vocab(const std::vector<Sentence>& train, const Lexicon& lexicon,
                  const RadicalTable& radicals);

}  // namespace mect
