#include "mect/corpus.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mect/error.hpp"

namespace mect {

namespace {

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string located(const std::string& source, std::size_t line,
                    const std::string& what) {
  return source + ":" + std::to_string(line) + ": " + what;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return in;
}

bool getline_clean(std::istream& in, std::string& line, bool first) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (first && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  return true;
}

struct Tag {
  char prefix = 'O';  // 'O' for the outside tag
  std::string type;
};

enum class TagError { None, UnknownPrefix, OtherScheme };

TagError parse_tag(const std::string& label, Scheme scheme, Tag& tag) {
  if (label == "O") {
    tag = {'O', {}};
    return TagError::None;
  }
  if (label.size() < 3 || label[1] != '-') return TagError::UnknownPrefix;
  const char p = label[0];
  const std::string_view own = scheme == Scheme::BMES ? "BMES" : "BI";
  const std::string_view other = scheme == Scheme::BMES ? "I" : "MES";
  if (own.find(p) != std::string_view::npos) {
    tag = {p, label.substr(2)};
    return TagError::None;
  }
  if (other.find(p) != std::string_view::npos) return TagError::OtherScheme;
  return TagError::UnknownPrefix;
}

Tag parse_tag_or_throw(const std::string& label, Scheme scheme) {
  Tag tag;
  if (parse_tag(label, scheme, tag) != TagError::None) {
    fail(ErrorKind::Contract, "label '" + label + "' is not valid under " +
                                  scheme_name(scheme));
  }
  return tag;
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
  if (name == "BMES" || name == "bmes") return Scheme::BMES;
  if (name == "BIO" || name == "bio") return Scheme::BIO;
  fail(ErrorKind::Config, "unknown tagging scheme '" + std::string(name) +
                              "' (expected BMES or BIO)");
}

std::string scheme_name(Scheme scheme) {
  return scheme == Scheme::BMES ? "BMES" : "BIO";
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = lead < 0x80 ? 1
                      : (lead >> 5) == 0x6 ? 2
                      : (lead >> 4) == 0xE ? 3
                      : (lead >> 3) == 0x1E ? 4
                                            : 0;
    if (len == 0 || i + len > text.size()) {
      fail(ErrorKind::Parse,
           "malformed UTF-8 at byte offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) {
        fail(ErrorKind::Parse,
             "malformed UTF-8 at byte offset " + std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

SpanDecode decode_spans(const std::vector<std::string>& labels,
                        Scheme scheme) {
  enum class State { None, Open, Orphan };
  SpanDecode out;
  State state = State::None;
  std::size_t start = 0;
  std::string type;

  auto emit = [&](std::size_t end) { out.spans.push_back({start, end, type}); };

  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t pos = i + 1;
    const Tag tag = parse_tag_or_throw(labels[i], scheme);
    if (scheme == Scheme::BMES) {
      switch (tag.prefix) {
        case 'O':
          if (state == State::Open) ++out.repairs;
          state = State::None;
          break;
        case 'S':
          if (state == State::Open) ++out.repairs;
          start = pos;
          type = tag.type;
          emit(pos);
          state = State::None;
          break;
        case 'B':
          if (state == State::Open) ++out.repairs;
          start = pos;
          type = tag.type;
          state = State::Open;
          break;
        case 'M':
          if ((state == State::Open || state == State::Orphan) &&
              type == tag.type)
            break;
          if (state == State::Open) ++out.repairs;
          ++out.repairs;
          type = tag.type;
          state = State::Orphan;
          break;
        case 'E':
          if (state == State::Open && type == tag.type) {
            emit(pos);
          } else if (!(state == State::Orphan && type == tag.type)) {
            if (state == State::Open) ++out.repairs;
            ++out.repairs;
          }
          state = State::None;
          break;
      }
    } else {
      switch (tag.prefix) {
        case 'O':
          if (state == State::Open) emit(pos - 1);
          state = State::None;
          break;
        case 'B':
          if (state == State::Open) emit(pos - 1);
          start = pos;
          type = tag.type;
          state = State::Open;
          break;
        case 'I':
          if ((state == State::Open || state == State::Orphan) &&
              type == tag.type)
            break;
          if (state == State::Open) emit(pos - 1);
          ++out.repairs;
          type = tag.type;
          state = State::Orphan;
          break;
      }
    }
  }
  if (state == State::Open) {
    if (scheme == Scheme::BMES) ++out.repairs;
    else emit(labels.size());
  }
  std::sort(out.spans.begin(), out.spans.end());
  return out;
}

std::vector<EntitySpan> spans_from_labels(const std::vector<std::string>& labels,
                                          Scheme scheme) {
  return decode_spans(labels, scheme).spans;
}

std::vector<std::string> labels_from_spans(const std::vector<EntitySpan>& spans,
                                           std::size_t length, Scheme scheme) {
  std::vector<std::string> labels(length, "O");
  for (const auto& s : spans) {
    if (s.start < 1 || s.end < s.start || s.end > length) {
      fail(ErrorKind::Contract, "span (" + std::to_string(s.start) + "," +
                                    std::to_string(s.end) +
                                    ") outside a sentence of length " +
                                    std::to_string(length));
    }
    const std::size_t b = s.start - 1;
    const std::size_t e = s.end - 1;
    if (scheme == Scheme::BMES) {
      if (b == e) {
        labels[b] = "S-" + s.type;
        continue;
      }
      labels[b] = "B-" + s.type;
      for (std::size_t k = b + 1; k < e; ++k) labels[k] = "M-" + s.type;
      labels[e] = "E-" + s.type;
    } else {
      labels[b] = "B-" + s.type;
      for (std::size_t k = b + 1; k <= e; ++k) labels[k] = "I-" + s.type;
    }
  }
  return labels;
}

DatasetStats compute_stats(const std::vector<Sentence>& sentences) {
  DatasetStats st;
  for (const auto& s : sentences) {
    ++st.sentences;
    st.repairs += s.repairs;
    st.characters += s.chars.size();
    for (const auto& span : spans_from_labels(s.labels, Scheme::BMES)) {
      ++st.entities;
      ++st.entities_by_type[span.type];
    }
  }
  return st;
}

std::string format_stats(
    const std::vector<std::pair<std::string, DatasetStats>>& splits) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "Types";
  for (const auto& [name, _] : splits) os << std::right << std::setw(12) << name;
  os << '\n' << std::left << std::setw(12) << "Sentences";
  for (const auto& [_, st] : splits) os << std::right << std::setw(12) << st.sentences;
  os << '\n' << std::left << std::setw(12) << "Entities";
  for (const auto& [_, st] : splits) os << std::right << std::setw(12) << st.entities;
  os << '\n';
  return os.str();
}

std::vector<Sentence> parse_conll(std::istream& in, Scheme scheme,
                                  const std::string& source) {
  std::vector<Sentence> out;
  Sentence cur;
  cur.scheme = scheme;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (cur.chars.empty()) return;
    SpanDecode dec = decode_spans(cur.labels, scheme);
    cur.labels = labels_from_spans(dec.spans, cur.chars.size(), Scheme::BMES);
    cur.repairs = dec.repairs;
    out.push_back(std::move(cur));
    cur = Sentence{};
    cur.scheme = scheme;
  };

  std::string line;
  while (getline_clean(in, line, line_no == 0)) {
    ++line_no;
    if (trim(line).empty()) {
      flush();
      continue;
    }
    std::vector<std::string> fields;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      fields = {line.substr(0, tab), trim(line.substr(tab + 1))};
      if (fields[1].find('\t') != std::string::npos) fields.push_back("");
    } else {
      fields = split_ws(line);
    }
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      fail(ErrorKind::Parse,
           located(source, line_no, "expected 'char<TAB>label', got '" + line + "'"));
    }
    Tag tag;
    switch (parse_tag(fields[1], scheme, tag)) {
      case TagError::UnknownPrefix:
        fail(ErrorKind::Parse,
             located(source, line_no, "unknown tag prefix in '" + fields[1] + "'"));
      case TagError::OtherScheme:
        fail(ErrorKind::Parse,
             located(source, line_no, "tag '" + fields[1] + "' mixes schemes (file declared " +
                                          scheme_name(scheme) + ")"));
      case TagError::None:
        break;
    }
    cur.chars.push_back(fields[0]);
    cur.labels.push_back(fields[1]);
  }
  flush();
  return out;
}

std::vector<Sentence> load_conll(const std::string& path, Scheme scheme) {
  auto in = open_input(path);
  return parse_conll(in, scheme, path);
}

void write_conll(std::ostream& out, const std::vector<std::string>& chars,
                 const std::vector<std::string>& bmes_labels, Scheme scheme) {
  std::vector<std::string> labels = bmes_labels;
  if (scheme != Scheme::BMES) {
    labels = labels_from_spans(spans_from_labels(bmes_labels, Scheme::BMES),
                               chars.size(), scheme);
  }
  for (std::size_t i = 0; i < chars.size(); ++i)
    out << chars[i] << '\t' << labels[i] << '\n';
  out << '\n';
}

void RadicalTable::insert(const std::string& ch,
                          std::vector<std::string> components) {
  if (components.empty()) {
    fail(ErrorKind::Parse, "empty decomposition for '" + ch + "'");
  }
  auto [it, inserted] = table_.emplace(ch, components);
  if (!inserted && it->second != components) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& c : v) s += c;
      return s;
    };
    fail(ErrorKind::Parse, "conflicting decompositions for '" + ch + "': " +
                               join(it->second) + " vs " + join(components));
  }
}

bool RadicalTable::contains(const std::string& ch) const {
  return table_.count(ch) != 0;
}

std::vector<std::string> RadicalTable::lookup(const std::string& ch) const {
  auto it = table_.find(ch);
  if (it == table_.end()) return {ch};
  return it->second;
}

RadicalTable parse_radical_table(std::istream& in, const std::string& source) {
  RadicalTable table;
  std::string line;
  std::size_t line_no = 0;
  while (getline_clean(in, line, line_no == 0)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    std::string ch, rest;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      ch = trim(line.substr(0, tab));
      rest = trim(line.substr(tab + 1));
    } else {
      auto fields = split_ws(line);
      if (fields.size() < 2) {
        fail(ErrorKind::Parse,
             located(source, line_no, "expected 'char<TAB>components'"));
      }
      ch = fields[0];
      rest = trim(std::string_view(line).substr(line.find(fields[0]) + fields[0].size()));
    }
    if (ch.empty() || rest.empty()) {
      fail(ErrorKind::Parse,
           located(source, line_no, "expected 'char<TAB>components'"));
    }
    std::vector<std::string> comps;
    try {
      comps = rest.find_first_of(" \t") != std::string::npos ? split_ws(rest)
                                                              : utf8_chars(rest);
      table.insert(ch, std::move(comps));
    } catch (const Error& e) {
      fail(e.kind(), located(source, line_no, e.what()));
    }
  }
  return table;
}

RadicalTable load_radical_table(const std::string& path) {
  auto in = open_input(path);
  return parse_radical_table(in, path);
}

Lexicon::Lexicon() : nodes_(1) {}

std::int32_t Lexicon::child(std::int32_t node, const std::string& ch) const {
  const auto& kids = nodes_[node].children;
  auto it = kids.find(ch);
  return it == kids.end() ? -1 : it->second;
}

bool Lexicon::add(const std::string& word) {
  auto chars = utf8_chars(word);
  if (chars.size() < 2) return false;
  std::int32_t node = 0;
  for (const auto& ch : chars) {
    std::int32_t next = child(node, ch);
    if (next < 0) {
      next = static_cast<std::int32_t>(nodes_.size());
      nodes_[node].children.emplace(ch, next);
      nodes_.emplace_back();
    }
    node = next;
  }
  if (nodes_[node].terminal) return false;
  nodes_[node].terminal = true;
  words_.push_back(word);
  max_len_ = std::max(max_len_, chars.size());
  return true;
}

bool Lexicon::contains(const std::string& word) const {
  std::int32_t node = 0;
  for (const auto& ch : utf8_chars(word)) {
    node = child(node, ch);
    if (node < 0) return false;
  }
  return node != 0 && nodes_[node].terminal;
}

Lexicon parse_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  bool first = true;
  while (getline_clean(in, line, first)) {
    first = false;
    auto fields = split_ws(line);
    if (!fields.empty()) lex.add(fields[0]);
  }
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_lexicon(in);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

Embeddings parse_embeddings(std::istream& in, std::size_t expected_dim,
                            const std::string& source) {
  Embeddings emb;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  while (getline_clean(in, line, line_no == 0)) {
    ++line_no;
    auto fields = split_ws(line);
    if (line_no == 1) {
      if (fields.size() != 2) {
        fail(ErrorKind::Parse, located(source, 1, "expected header 'count dim'"));
      }
      try {
        declared = std::stoul(fields[0]);
        emb.dim = std::stoul(fields[1]);
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, located(source, 1, "non-numeric header"));
      }
      if (expected_dim != 0 && emb.dim != expected_dim) {
        fail(ErrorKind::Config,
             located(source, 1, "embedding dim " + std::to_string(emb.dim) +
                                    " does not match configured " +
                                    std::to_string(expected_dim)));
      }
      continue;
    }
    if (fields.empty()) continue;
    if (fields.size() != emb.dim + 1) {
      fail(ErrorKind::Parse,
           located(source, line_no, "expected " + std::to_string(emb.dim + 1) +
                                        " columns, found " +
                                        std::to_string(fields.size())));
    }
    std::vector<double> v(emb.dim);
    for (std::size_t k = 0; k < emb.dim; ++k) {
      try {
        v[k] = std::stod(fields[k + 1]);
      } catch (const std::exception&) {
        fail(ErrorKind::Parse,
             located(source, line_no, "bad number '" + fields[k + 1] + "'"));
      }
    }
    emb.vectors[fields[0]] = std::move(v);
  }
  if (line_no == 0) fail(ErrorKind::Parse, source + ": empty embedding file");
  if (emb.vectors.size() != declared) {
    fail(ErrorKind::Parse, source + ": header declares " +
                               std::to_string(declared) + " rows, found " +
                               std::to_string(emb.vectors.size()));
  }
  return emb;
}

Embeddings load_embeddings(const std::string& path, std::size_t expected_dim) {
  auto in = open_input(path);
  return parse_embeddings(in, expected_dim, path);
}

SymbolTable::SymbolTable(bool reserve_special)
    : reserve_special_(reserve_special) {
  if (reserve_special_) {
    add(kPadSymbol);
    add(kUnkSymbol);
  }
}

std::size_t SymbolTable::add(const std::string& symbol) {
  auto [it, inserted] = ids_.emplace(symbol, symbols_.size());
  if (inserted) symbols_.push_back(symbol);
  return it->second;
}

std::size_t SymbolTable::id(const std::string& symbol) const {
  auto it = ids_.find(symbol);
  if (it != ids_.end()) return it->second;
  if (reserve_special_) return kUnk;
  fail(ErrorKind::Contract, "unknown symbol '" + symbol + "'");
}

bool SymbolTable::contains(const std::string& symbol) const {
  return ids_.count(symbol) != 0;
}

const std::string& SymbolTable::symbol(std::size_t id) const {
  if (id >= symbols_.size()) {
    fail(ErrorKind::Contract, "symbol id " + std::to_string(id) +
                                  " outside table of size " +
                                  std::to_string(symbols_.size()));
  }
  return symbols_[id];
}

Vocab build_vocab(const std::vector<Sentence>& train, const Lexicon& lexicon,
                  const RadicalTable& radicals) {
  Vocab v;
  v.labels.add("O");
  std::set<std::string> seen_types;
  for (const auto& s : train) {
    for (const auto& ch : s.chars) {
      if (v.chars.contains(ch)) continue;
      v.chars.add(ch);
      for (const auto& c : radicals.lookup(ch)) v.components.add(c);
    }
    for (const auto& span : spans_from_labels(s.labels, Scheme::BMES)) {
      if (!seen_types.insert(span.type).second) continue;
      for (const char* p : {"B-", "M-", "E-", "S-"}) v.labels.add(p + span.type);
    }
  }
  for (const auto& w : lexicon.words()) v.words.add(w);
  return v;
}

}  // namespace mect
