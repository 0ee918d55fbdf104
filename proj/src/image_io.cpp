#include <cctype>
#include <cmath>

#include "s2ica/image.hpp"
#include "s2ica/model_io.hpp"

namespace s2ica {

namespace {

class HeaderParser {
 public:
  HeaderParser(const std::string& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw FormatError(std::string(what) + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw FormatError(std::string("truncated header before ") + what, pos_);
      throw FormatError(std::string("expected ") + what, pos_);
    }
    return v;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size()) throw FormatError("truncated header after maxval", pos_);
    if (!std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_netpbm(const std::string& bytes) {
  if (bytes.size() < 2) throw FormatError("truncated header", bytes.size());
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("not a binary PGM/PPM (expected P5 or P6)", 0);
  }
  const Index channels = bytes[1] == '5' ? 1 : 3;
  HeaderParser header(bytes, 2);
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (width < 1 || height < 1) throw FormatError("image extents must be positive", header.pos());
  if (maxval != 255) {
    throw FormatError("only maxval 255 is supported, got " + std::to_string(maxval), header.pos());
  }
  header.single_whitespace();
  const std::size_t raster = header.pos();
  const std::size_t need = std::size_t(width) * std::size_t(height) * std::size_t(channels);
  if (bytes.size() - raster < need) {
    throw FormatError("truncated raster: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - raster),
                      bytes.size());
  }
  Image img(height, width, channels);
  for (std::size_t i = 0; i < need; ++i) {
    img.data[Index(i)] = float(static_cast<unsigned char>(bytes[raster + i])) / 255.0f;
  }
  return img;
}

std::string encode_netpbm(const Image& image) {
  if (image.empty()) throw DimensionError("cannot encode an empty image");
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + std::size_t(image.data.size()));
  for (Index i = 0; i < image.data.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    out.push_back(char(static_cast<unsigned char>(std::lround(v * 255.0f))));
  }
  return out;
}

Image load_image(const std::filesystem::path& path) { return decode_netpbm(read_file(path)); }

void save_image(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, encode_netpbm(image));
}

Image to_grayscale(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.height, image.width, 1);
  for (Index y = 0; y < image.height; ++y)
    for (Index x = 0; x < image.width; ++x) {
      out.at(y, x) = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) + 0.114f * image.at(y, x, 2);
    }
  return out;
}

void quantize_8bit(Image& image) {
  for (Index i = 0; i < image.data.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    image.data[i] = float(std::lround(v * 255.0f)) / 255.0f;
  }
}

}  // namespace s2ica
