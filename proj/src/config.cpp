#include "mect/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "mect/error.hpp"

namespace mect {

namespace {

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    fail(ErrorKind::Config, key + ": '" + v + "' is not a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    fail(ErrorKind::Config, key + ": '" + v + "' is not a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::Config, key + ": '" + v + "' is not true/false");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
  bool is_path = false;
};

#define MECT_DOUBLE(name)                                                   \
  Field{#name, [](Config& c, const std::string& v) { c.name = to_double(#name, v); }, \
        [](const Config& c) { return fmt_double(c.name); }}
#define MECT_UINT(name)                                                     \
  Field{#name, [](Config& c, const std::string& v) {                        \
          c.name = static_cast<decltype(c.name)>(to_uint(#name, v)); },     \
        [](const Config& c) { return std::to_string(c.name); }}
#define MECT_BOOL(name)                                                     \
  Field{#name, [](Config& c, const std::string& v) { c.name = to_bool(#name, v); }, \
        [](const Config& c) { return std::string(c.name ? "true" : "false"); }}
#define MECT_PATH(name)                                                     \
  Field{#name, [](Config& c, const std::string& v) { c.name = v; },         \
        [](const Config& c) { return c.name; }, true}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MECT_DOUBLE(output_dropout),
      MECT_DOUBLE(lattice_dropout),
      MECT_DOUBLE(radical_dropout),
      MECT_DOUBLE(warm_up),
      MECT_UINT(head_num),
      MECT_UINT(d_head),
      MECT_UINT(d_model),
      MECT_DOUBLE(lr),
      MECT_DOUBLE(radical_lr),
      MECT_DOUBLE(momentum),
      MECT_UINT(batch_size),
      MECT_UINT(max_len),
      MECT_UINT(epochs),
      MECT_UINT(seed),
      Field{"variant",
            [](Config& c, const std::string& v) { c.variant = parse_variant(v); },
            [](const Config& c) { return variant_name(c.variant); }},
      Field{"scheme",
            [](Config& c, const std::string& v) { c.scheme = parse_scheme(v); },
            [](const Config& c) { return scheme_name(c.scheme); }},
      MECT_PATH(train),
      MECT_PATH(dev),
      MECT_PATH(test),
      MECT_PATH(lexicon),
      MECT_PATH(radical_table),
      MECT_PATH(embeddings),
      MECT_UINT(kernels),
      MECT_UINT(kernel_width),
      MECT_UINT(d_comp),
      MECT_BOOL(zero_word_radicals),
      Field{"span_variant",
            [](Config& c, const std::string& v) {
              if (v == "two") c.span_variant = SpanVariant::TwoSpan;
              else if (v == "four") c.span_variant = SpanVariant::FourSpan;
              else fail(ErrorKind::Config, "span_variant: expected two or four, got '" + v + "'");
            },
            [](const Config& c) {
              return std::string(c.span_variant == SpanVariant::TwoSpan ? "two" : "four");
            }},
      MECT_BOOL(scale_attention),
      MECT_BOOL(ffn),
      MECT_BOOL(crf_constrained),
      MECT_BOOL(skip_long),
  };
  return table;
}

#undef MECT_DOUBLE
#undef MECT_UINT
#undef MECT_BOOL
#undef MECT_PATH

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

void assign(Config& c, const std::string& key, const std::string& value,
            const std::string& base_dir) {
  const Field& f = find_field(key);
  if (f.is_path && !value.empty() && !base_dir.empty()) {
    std::filesystem::path p(value);
    if (p.is_relative()) {
      f.set(c, (std::filesystem::path(base_dir) / p).lexically_normal().string());
      return;
    }
  }
  f.set(c, value);
}

}  // namespace

Config parse_config(std::string_view text, const std::string& source,
                    const std::string& base_dir) {
  Config c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, source + ":" + std::to_string(line_no) +
                                  ": expected key=value, got '" + body + "'");
    }
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) {
      fail(ErrorKind::Config, source + ":" + std::to_string(line_no) +
                                  ": key '" + key + "' repeated");
    }
    try {
      assign(c, key, value, base_dir);
    } catch (const Error& e) {
      fail(ErrorKind::Config, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(ss.str(), path, dir.empty() ? "." : dir);
}

void apply_override(Config& config, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorKind::Config, "override '" + std::string(assignment) + "' is not key=value");
  }
  assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), "");
  validate(config);
}

void validate(const Config& c) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, what);
  };
  for (auto [name, p] : {std::pair{"output_dropout", c.output_dropout},
                         std::pair{"lattice_dropout", c.lattice_dropout},
                         std::pair{"radical_dropout", c.radical_dropout}}) {
    check(p >= 0.0 && p < 1.0, std::string(name) + " must lie in [0, 1)");
  }
  check(c.warm_up >= 0.0 && c.warm_up <= 1.0, "warm_up must lie in [0, 1]");
  check(c.head_num > 0 && c.d_head > 0, "head_num and d_head must be positive");
  check(c.head_num * c.d_head == c.d_model,
        "head_num * d_head must equal d_model (" + std::to_string(c.head_num) +
            " * " + std::to_string(c.d_head) + " != " + std::to_string(c.d_model) + ")");
  check(c.d_model % 2 == 0, "d_model must be even");
  check(c.lr > 0.0 && c.radical_lr > 0.0, "learning rates must be positive");
  check(c.momentum >= 0.0 && c.momentum < 1.0, "momentum must lie in [0, 1)");
  check(c.batch_size > 0, "batch_size must be positive");
  check(c.max_len > 0, "max_len must be positive");
  check(c.kernels > 0 && c.kernel_width > 0 && c.d_comp > 0,
        "kernels, kernel_width and d_comp must be positive");
}

std::string format_config(const Config& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

bool operator==(const Config& a, const Config& b) {
  for (const auto& f : fields())
    if (f.get(a) != f.get(b)) return false;
  return true;
}

}  // namespace mect
