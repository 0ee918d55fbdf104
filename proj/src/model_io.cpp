#include "s2ica/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace s2ica {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

/// Little-endian cursor over a byte string; every read checks bounds.
class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void need(std::uint64_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated file while reading ") + what, pos_);
  }

  std::string bytes(std::uint64_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

 private:
  const std::string& bytes_;
  std::uint64_t pos_ = 0;
};

json layer_to_json(const LayerSpec& spec) {
  json j;
  j["kind"] = layer_kind(spec);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConvSpec>) {
          j["out_channels"] = s.out_channels;
          j["kernel"] = s.kernel;
          j["stride"] = s.stride;
          j["pad"] = s.pad;
        } else if constexpr (std::is_same_v<S, LrnSpec>) {
          j["alpha"] = s.alpha;
          j["beta"] = s.beta;
          j["gamma"] = s.gamma;
          j["sigma"] = s.sigma;
        } else if constexpr (std::is_same_v<S, SubSampleSpec>) {
          j["window"] = s.window;
        } else if constexpr (std::is_same_v<S, SuSpec>) {
          j["blocks"] = s.blocks;
          j["probability"] = s.probability;
          j["infer_apply"] = s.infer_apply;
        } else if constexpr (std::is_same_v<S, MaxPoolSpec>) {
          j["window"] = s.window;
          j["stride"] = s.stride;
        } else {
          j["out"] = s.out;
          j["hidden"] = s.hidden;
        }
      },
      spec);
  return j;
}

LayerSpec layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv") {
    return ConvSpec{j.at("out_channels").get<Index>(), j.at("kernel").get<Index>(), j.at("stride").get<Index>(),
                    j.at("pad").get<Index>()};
  }
  if (kind == "lrn") {
    return LrnSpec{j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("gamma").get<double>(),
                   j.at("sigma").get<double>()};
  }
  if (kind == "subsample") return SubSampleSpec{j.at("window").get<Index>()};
  if (kind == "su") {
    return SuSpec{j.at("blocks").get<Index>(), j.at("probability").get<double>(), j.at("infer_apply").get<bool>()};
  }
  if (kind == "maxpool") return MaxPoolSpec{j.at("window").get<Index>(), j.at("stride").get<Index>()};
  if (kind == "fc") return FcSpec{j.at("out").get<Index>(), j.at("hidden").get<bool>()};
  throw SpecificationError("unknown layer kind '" + kind + "'");
}

json spec_to_json(const NetworkSpec& spec) {
  json j;
  j["input"] = {spec.input.height, spec.input.width, spec.input.channels};
  j["profile"] = to_string(spec.profile);
  j["layers"] = json::array();
  for (const auto& l : spec.layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  const auto& in = j.at("input");
  spec.input = {in.at(0).get<Index>(), in.at(1).get<Index>(), in.at(2).get<Index>()};
  spec.profile = profile_from_string(j.at("profile").get<std::string>());
  for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
  return spec;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string encode_container(const Container& c) {
  if (c.magic.size() != 4) throw ConfigurationError("container magic must be 4 bytes");
  std::string out = c.magic;
  put_u32(out, c.version);
  put_u32(out, std::uint32_t(c.header.size()));
  out += c.header;
  out.reserve(out.size() + 4 * c.blob.size());
  for (float f : c.blob) put_f32(out, f);
  return out;
}

Container decode_container(const std::string& bytes, const std::string& magic) {
  Reader r(bytes);
  Container c;
  c.magic = r.bytes(4, "magic");
  if (c.magic != magic) throw FormatError("bad magic, expected \"" + magic + "\"", 0);
  c.version = r.u32("version");
  if (c.version != kContainerVersion) {
    throw FormatError("unsupported format version " + std::to_string(c.version) + " (this build reads version " +
                          std::to_string(kContainerVersion) + ")",
                      4);
  }
  const std::uint32_t header_len = r.u32("header length");
  c.header = r.bytes(header_len, "header");
  c.blob_offset = r.offset();
  if (r.remaining() % 4 != 0) throw FormatError("parameter blob is not a whole number of floats", bytes.size());
  c.blob.resize(std::size_t(r.remaining() / 4));
  for (auto& f : c.blob) f = r.f32("parameters");
  return c;
}

void write_container(const fs::path& path, const Container& c) { write_file_atomic(path, encode_container(c)); }

Container read_container(const fs::path& path, const std::string& magic) {
  return decode_container(read_file(path), magic);
}

std::string spec_to_text(const NetworkSpec& spec) { return spec_to_json(spec).dump(); }

NetworkSpec spec_from_text(const std::string& text) { return spec_from_json(json::parse(text)); }

std::string encode_model(const Net& net) {
  Container c;
  c.magic = "S2IC";
  json header;
  header["variant"] = net.variant();
  header["spec"] = spec_to_json(net.spec());
  c.header = header.dump();
  for (const auto* p : net.params()) c.blob.insert(c.blob.end(), p->data().data(), p->data().data() + p->size());
  return encode_container(c);
}

Net decode_model(const std::string& bytes) {
  Container c = decode_container(bytes, "S2IC");
  const std::uint64_t header_offset = 12;
  json header;
  try {
    header = json::parse(c.header);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed model header: ") + e.what(), header_offset + e.byte);
  }
  NetworkSpec spec;
  std::string variant;
  try {
    spec = spec_from_json(header.at("spec"));
    variant = header.at("variant").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header is missing fields: ") + e.what(), header_offset);
  } catch (const SpecificationError& e) {
    throw FormatError(e.what(), header_offset);
  }
  std::uint64_t expected = 0;
  try {
    spec.validate();
    expected = std::uint64_t(spec.parameter_count());
  } catch (const Error& e) {
    throw FormatError(std::string("model header describes an invalid network: ") + e.what(), header_offset);
  }
  // Checked before building so a corrupted header cannot request huge layers.
  if (c.blob.size() != expected) {
    throw FormatError("expected " + std::to_string(expected) + " parameters, found " +
                          std::to_string(c.blob.size()),
                      c.blob_offset + 4 * std::min<std::uint64_t>(expected, c.blob.size()));
  }
  Net net(spec, variant);
  std::size_t k = 0;
  for (auto* p : net.params()) {
    std::copy(c.blob.begin() + std::ptrdiff_t(k), c.blob.begin() + std::ptrdiff_t(k + std::size_t(p->size())),
              p->data().data());
    k += std::size_t(p->size());
  }
  return net;
}

void save_model(const fs::path& path, const Net& net) { write_file_atomic(path, encode_model(net)); }

Net load_model(const fs::path& path) { return decode_model(read_file(path)); }

std::string encode_descriptor_table(const std::vector<Vec<float>>& rows) {
  const std::size_t length = rows.empty() ? 0 : std::size_t(rows.front().size());
  std::string out = "S2FV";
  put_u32(out, std::uint32_t(rows.size()));
  put_u32(out, std::uint32_t(length));
  for (const auto& r : rows) {
    if (std::size_t(r.size()) != length) throw DimensionError("descriptor rows differ in length");
    for (Index i = 0; i < r.size(); ++i) put_f32(out, r[i]);
  }
  return out;
}

std::vector<Vec<float>> decode_descriptor_table(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(4, "magic") != "S2FV") throw FormatError("bad magic, expected \"S2FV\"", 0);
  const std::uint32_t count = r.u32("row count");
  const std::uint32_t length = r.u32("row length");
  r.need(std::uint64_t(count) * length * 4, "descriptor values");
  std::vector<Vec<float>> rows(count, Vec<float>(Index(length)));
  for (auto& row : rows)
    for (Index i = 0; i < row.size(); ++i) row[i] = r.f32("descriptor values");
  if (r.remaining() != 0) throw FormatError("trailing bytes after descriptor table", r.offset());
  return rows;
}

void save_descriptor_table(const fs::path& path, const std::vector<Vec<float>>& rows) {
  write_file_atomic(path, encode_descriptor_table(rows));
}

std::vector<Vec<float>> load_descriptor_table(const fs::path& path) {
  return decode_descriptor_table(read_file(path));
}

void save_labels(const fs::path& path, const std::vector<Index>& labels) {
  std::string out;
  for (Index l : labels) out += std::to_string(l) + "\n";
  write_file_atomic(path, out);
}

std::vector<Index> load_labels(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Index> labels;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      try {
        std::size_t used = 0;
        labels.push_back(Index(std::stoll(line, &used)));
        if (used != line.size()) throw std::invalid_argument(line);
      } catch (const std::exception&) {
        throw FormatError("label line is not an integer: '" + line + "'", offset);
      }
    }
    offset += line.size() + 1;
  }
  return labels;
}

void save_descriptor_csv(const fs::path& path, const std::vector<Vec<float>>& rows, const std::vector<Index>& labels) {
  std::ostringstream out;
  out.precision(9);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << (i < labels.size() ? labels[i] : -1);
    for (Index j = 0; j < rows[i].size(); ++j) out << ',' << rows[i][j];
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace s2ica
