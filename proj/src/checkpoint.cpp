#include "mect/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mect/error.hpp"

namespace mect {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'M', 'E', 'C', 'T', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void strings(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(ErrorKind::Parse, path_ + ": checkpoint is truncated");
    }
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  // Guards allocations against corrupt length fields.
  std::uint64_t count(std::uint64_t limit = 1ull << 32) {
    auto n = u64();
    if (n > limit) fail(ErrorKind::Parse, path_ + ": checkpoint is corrupt (length " +
                                              std::to_string(n) + ")");
    return n;
  }
  std::string str() {
    std::string s(count(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(count());
    for (auto& s : v) s = str();
    return v;
  }
  const std::string& path() const { return path_; }

 private:
  std::istream& in_;
  std::string path_;
};

void write_table(Writer& w, const SymbolTable& t) {
  w.u32(t.has_special() ? 1 : 0);
  w.strings(t.symbols());
}

SymbolTable read_table(Reader& r) {
  const bool special = r.u32() != 0;
  auto symbols = r.strings();
  SymbolTable t(special);
  for (const auto& s : symbols) t.add(s);
  if (t.size() != symbols.size()) {
    fail(ErrorKind::Parse, r.path() + ": vocabulary in checkpoint is inconsistent");
  }
  return t;
}

struct Blob {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Contents {
  Config config;
  Vocab vocab;
  Lexicon lexicon;
  RadicalTable radicals;
  std::vector<Blob> params;
};

Contents read_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    fail(ErrorKind::Parse, path + ": not a checkpoint file");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::Parse, path + ": checkpoint version " + std::to_string(version) +
                               " is not supported (expected " +
                               std::to_string(kCheckpointVersion) + ")");
  }
  Contents c;
  c.config = parse_config(r.str(), path + "#config");
  c.vocab.chars = read_table(r);
  c.vocab.words = read_table(r);
  c.vocab.components = read_table(r);
  c.vocab.labels = read_table(r);
  for (const auto& w : r.strings()) c.lexicon.add(w);
  const auto n_radicals = r.count();
  for (std::uint64_t i = 0; i < n_radicals; ++i) {
    std::string ch = r.str();
    c.radicals.insert(ch, r.strings());
  }
  const auto n_params = r.count();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    Blob b;
    b.name = r.str();
    b.shape.resize(r.count(8));
    for (auto& d : b.shape) d = r.count();
    b.data.resize(numel(b.shape));
    r.bytes(b.data.data(), b.data.size() * sizeof(double));
    c.params.push_back(std::move(b));
  }
  char trailer[4];
  r.bytes(trailer, sizeof trailer);
  if (std::memcmp(trailer, kTrailer, sizeof trailer) != 0) {
    fail(ErrorKind::Parse, path + ": checkpoint trailer missing");
  }
  return c;
}

void restore(Model& model, const std::vector<Blob>& blobs, const std::string& path) {
  auto& params = model.params();
  if (blobs.size() != params.size()) {
    fail(ErrorKind::Dimension, path + ": checkpoint holds " + std::to_string(blobs.size()) +
                                   " parameters, model has " + std::to_string(params.size()));
  }
  // Validate everything before touching the model.
  for (const auto& b : blobs) {
    const Parameter* p = params.find(b.name);
    if (!p) fail(ErrorKind::Dimension, path + ": model has no parameter " + b.name);
    if (p->tensor.shape() != b.shape) {
      fail(ErrorKind::Dimension, path + ": parameter " + b.name + " has shape " +
                                     shape_str(b.shape) + " in the checkpoint but " +
                                     shape_str(p->tensor.shape()) + " in the model");
    }
  }
  for (const auto& b : blobs) {
    auto dst = params.find(b.name)->tensor.mutable_data();
    std::copy(b.data.begin(), b.data.end(), dst.begin());
  }
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + tmp);
    Writer w(out);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.str(format_config(model.config()));
    write_table(w, model.vocab().chars);
    write_table(w, model.vocab().words);
    write_table(w, model.vocab().components);
    write_table(w, model.vocab().labels);
    w.strings(model.lexicon().words());
    const auto& entries = model.radicals().entries();
    w.u64(entries.size());
    for (const auto& [ch, comps] : entries) {
      w.str(ch);
      w.strings(comps);
    }
    const auto& params = model.params().all();
    w.u64(params.size());
    for (const auto& p : params) {
      w.str(p.name);
      w.u64(p.tensor.rank());
      for (auto d : p.tensor.shape()) w.u64(d);
      w.bytes(p.tensor.data().data(), p.tensor.size() * sizeof(double));
    }
    w.bytes(kTrailer, sizeof kTrailer);
    out.flush();
    if (!out) fail(ErrorKind::Io, "failed writing checkpoint " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into place at " + path + ": " + ec.message());
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  Contents c = read_contents(path);
  auto model = std::make_unique<Model>(c.config, std::move(c.vocab), std::move(c.lexicon),
                                       std::move(c.radicals));
  restore(*model, c.params, path);
  return model;
}

void load_parameters(Model& model, const std::string& path) {
  Contents c = read_contents(path);
  restore(model, c.params, path);
}

}  // namespace mect
