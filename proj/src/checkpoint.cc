#include "vaxsurge/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "vaxsurge/error.h"

namespace vaxsurge {

namespace {

constexpr char kMagic[8] = {'V', 'X', 'S', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("checkpoint header: missing key " + key);
  T v{};
  const std::string& s = it->second;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw DataError("checkpoint header: bad value for " + key + ": " + s);
  }
  return v;
}

}  // namespace

std::string checkpoint_bytes(const ModelParams& params, const CheckpointMeta& meta) {
  const EncoderConfig& c = params.config;
  std::ostringstream header;
  header << "vocab_size=" << c.vocab_size << '\n'
         << "d_model=" << c.d_model << '\n'
         << "n_layers=" << c.n_layers << '\n'
         << "n_heads=" << c.n_heads << '\n'
         << "d_ff=" << c.d_ff << '\n'
         << "max_len=" << c.max_len << '\n'
         << "n_classes=" << c.n_classes << '\n'
         << "dropout_rate=" << format_double(c.dropout_rate) << '\n'
         << "vocab_sha256=" << meta.vocab_sha256 << '\n'
         << "seed=" << meta.seed << '\n';
  params.visit([&](const std::string& name, TensorKind, const Matrix& m) {
    header << "tensor=" << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  });
  const std::string h = header.str();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out.reserve(out.size() + params.parameter_count() * 4);
  params.visit([&](const std::string&, TensorKind, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
    }
  });
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << checkpoint_bytes(params, meta);
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("checkpoint: bad magic bytes");
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(bytes, 12);
  if (16 + static_cast<std::size_t>(header_len) > bytes.size()) {
    throw DataError("checkpoint: truncated header");
  }
  std::string_view header = bytes.substr(16, header_len);

  std::map<std::string, std::string> kv;
  std::vector<std::string> tensor_lines;
  std::size_t pos = 0;
  while (pos < header.size()) {
    std::size_t nl = header.find('\n', pos);
    if (nl == std::string_view::npos) nl = header.size();
    std::string_view line = header.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("checkpoint header: malformed line");
    std::string key(line.substr(0, eq));
    std::string value(line.substr(eq + 1));
    if (key == "tensor") {
      tensor_lines.push_back(std::move(value));
    } else {
      kv[key] = std::move(value);
    }
  }

  EncoderConfig c;
  c.vocab_size = parse_number<int>(kv, "vocab_size");
  c.d_model = parse_number<int>(kv, "d_model");
  c.n_layers = parse_number<int>(kv, "n_layers");
  c.n_heads = parse_number<int>(kv, "n_heads");
  c.d_ff = parse_number<int>(kv, "d_ff");
  c.max_len = parse_number<int>(kv, "max_len");
  c.n_classes = parse_number<int>(kv, "n_classes");
  c.dropout_rate = parse_number<double>(kv, "dropout_rate");
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  Checkpoint ck;
  ck.meta.vocab_sha256 = kv.count("vocab_sha256") ? kv["vocab_sha256"] : "";
  ck.meta.seed = parse_number<std::uint64_t>(kv, "seed");
  ck.params = ModelParams::zeros(c);

  std::size_t index = 0;
  std::size_t offset = 16 + header_len;
  ck.params.visit([&](const std::string& name, TensorKind, Matrix& m) {
    std::ostringstream expected;
    expected << name << ' ' << m.rows() << ' ' << m.cols();
    if (index >= tensor_lines.size()) throw DataError("checkpoint: missing tensor " + name);
    if (tensor_lines[index] != expected.str()) {
      throw DataError("checkpoint: header lists '" + tensor_lines[index] + "', config implies '" +
                      expected.str() + "'");
    }
    ++index;
    const std::size_t need = static_cast<std::size_t>(m.size()) * 4;
    if (offset + need > bytes.size()) throw DataError("checkpoint: truncated tensor " + name);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::bit_cast<float>(get_u32(bytes, offset));
      offset += 4;
    }
  });
  if (index != tensor_lines.size()) throw DataError("checkpoint: header lists extra tensors");
  if (offset != bytes.size()) {
    throw DataError("checkpoint: " + std::to_string(bytes.size() - offset) +
                    " trailing bytes after the last tensor");
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

void round_to_float(ModelParams& params) {
  params.visit([](const std::string&, TensorKind, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
    }
  });
}

}  // namespace vaxsurge
