#include <gtest/gtest.h>

#include <filesystem>

#include "s2ica/image.hpp"
#include "s2ica/model_io.hpp"
#include "s2ica/svm.hpp"

using namespace s2ica;
namespace fs = std::filesystem;

namespace {

Image random_image(Index h, Index w, Index c, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, c);
  for (Index i = 0; i < img.data.size(); ++i) img.data[i] = float(rng.below(256)) / 255.0f;
  return img;
}

SvmModel random_svm(std::uint64_t seed) {
  Rng rng(seed);
  SvmModel m;
  m.weights = Eigen::MatrixXf(3, 5);
  for (Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = float(rng.normal(0, 1));
  m.bias = Eigen::Vector3f(float(rng.normal(0, 1)), -0.0f, 1e-30f);
  m.C = 100;
  m.normalize = false;
  return m;
}

std::vector<Vec<float>> random_rows(Index count, Index length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec<float>> rows;
  for (Index r = 0; r < count; ++r) {
    Vec<float> v(length);
    for (Index i = 0; i < length; ++i) v[i] = float(rng.normal(0, 10));
    rows.push_back(v);
  }
  return rows;
}

// Every prefix and a sweep of single-byte flips must decode or raise a
// library error; nothing else may escape.
template <typename Decode>
void expect_categorized(const std::string& bytes, Decode decode) {
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    try {
      decode(bytes.substr(0, n));
      ADD_FAILURE() << "truncation to " << n << " bytes decoded";
    } catch (const FormatError& e) {
      EXPECT_LE(e.offset(), bytes.size());
    } catch (const Error&) {
    } catch (const std::exception& e) {
      ADD_FAILURE() << "uncategorized error at length " << n << ": " << e.what();
    }
  }
  Rng rng(99);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string corrupt = bytes;
    corrupt[i] = char(corrupt[i] ^ char(1 + rng.below(255)));
    try {
      decode(corrupt);
    } catch (const Error&) {
    } catch (const std::exception& e) {
      ADD_FAILURE() << "uncategorized error flipping byte " << i << ": " << e.what();
    }
  }
}

}  // namespace

TEST(Formats, ModelRoundTripIsBitExact) {
  auto net = Network<float>::build(NetworkSpec::toy(4).with_su(SuSpec{16, 0.3, false}), InitConfig{1}, "W_su");
  const auto back = decode_model(encode_model(net));
  EXPECT_EQ(back, net);
  EXPECT_EQ(back.variant(), "W_su");
  EXPECT_EQ(encode_model(back), encode_model(net));
}

TEST(Formats, ModelFileRoundTrip) {
  const auto dir = fs::temp_directory_path() / "s2ica_formats_model";
  fs::create_directories(dir);
  const auto net = Network<float>::build(NetworkSpec::toy(3), InitConfig{2});
  save_model(dir / "m.bin", net);
  EXPECT_EQ(load_model(dir / "m.bin"), net);
  EXPECT_THROW(load_model(dir / "missing.bin"), IoError);
  fs::remove_all(dir);
}

TEST(Formats, SpecTextRoundTrip) {
  for (const auto& spec : {NetworkSpec::toy(4), NetworkSpec::full(67).with_su(SuSpec{64}), NetworkSpec::toy(2, 48, 3)}) {
    EXPECT_EQ(spec_from_text(spec_to_text(spec)), spec);
  }
}

TEST(Formats, ParameterCountMatchesBuiltNetwork) {
  for (const auto& spec : {NetworkSpec::toy(4), NetworkSpec::toy(5).with_su(SuSpec{}), NetworkSpec::toy(2, 48, 3)}) {
    EXPECT_EQ(spec.parameter_count(), Network<float>(spec).parameter_count());
  }
}

TEST(Formats, ModelCorruptionIsCategorized) {
  const NetworkSpec tiny{{6, 6, 1}, {ConvSpec{2, 3, 1, 1}, SubSampleSpec{2}, FcSpec{3, false}}};
  const auto bytes = encode_model(Network<float>::build(tiny, InitConfig{3}));
  expect_categorized(bytes, [](const std::string& b) { decode_model(b); });
}

TEST(Formats, ModelErrorsCarryOffsets) {
  const auto bytes = encode_model(Network<float>::build(NetworkSpec::toy(3), InitConfig{4}));
  try {
    decode_model("XXXX" + bytes.substr(4));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  try {
    decode_model(bytes.substr(0, bytes.size() - 4));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), bytes.size() - 4);
  }
  std::string version = bytes;
  version[4] = 9;
  try {
    decode_model(version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Formats, DescriptorTableRoundTrip) {
  const auto rows = random_rows(7, 32, 5);
  const auto bytes = encode_descriptor_table(rows);
  EXPECT_EQ(bytes.size(), 12u + 7 * 32 * 4);
  EXPECT_EQ(decode_descriptor_table(bytes), rows);
  EXPECT_TRUE(decode_descriptor_table(encode_descriptor_table({})).empty());
  expect_categorized(encode_descriptor_table(random_rows(2, 3, 6)),
                     [](const std::string& b) { decode_descriptor_table(b); });
  EXPECT_THROW(decode_descriptor_table(bytes + "x"), FormatError);
}

TEST(Formats, LabelsRoundTrip) {
  const auto dir = fs::temp_directory_path() / "s2ica_formats_labels";
  fs::create_directories(dir);
  const std::vector<Index> labels{0, 3, 1, 1, 2};
  save_labels(dir / "l.txt", labels);
  EXPECT_EQ(load_labels(dir / "l.txt"), labels);
  write_file_atomic(dir / "bad.txt", "1\n2x\n");
  try {
    load_labels(dir / "bad.txt");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
  fs::remove_all(dir);
}

TEST(Formats, SvmRoundTripIsBitExact) {
  const auto m = random_svm(7);
  EXPECT_EQ(decode_svm(encode_svm(m)), m);
  expect_categorized(encode_svm(random_svm(8)), [](const std::string& b) { decode_svm(b); });
  EXPECT_THROW(decode_svm(encode_model(Network<float>::build(NetworkSpec::toy(3), InitConfig{1}))), FormatError);
}

TEST(Formats, NetpbmRoundTripIsBitExact) {
  for (Index c : {1, 3}) {
    const auto img = random_image(13, 17, c, 9 + std::uint64_t(c));
    const auto bytes = encode_netpbm(img);
    EXPECT_EQ(bytes.substr(0, 2), c == 1 ? "P5" : "P6");
    EXPECT_EQ(decode_netpbm(bytes), img);
    EXPECT_EQ(encode_netpbm(decode_netpbm(bytes)), bytes);
  }
}

TEST(Formats, NetpbmHeaderGrammar) {
  std::string bytes = "P5 4 4 255\n";
  for (int i = 0; i < 16; ++i) bytes.push_back(char(i * 16));
  const auto img = decode_netpbm(bytes);
  EXPECT_EQ(img.height, 4);
  EXPECT_EQ(img.width, 4);
  EXPECT_FLOAT_EQ(img.at(3, 3), 240.0f / 255.0f);

  std::string commented = "P5\n# made by hand\n2 # width\n1\n255\n";
  commented += "\x10\x20";
  EXPECT_EQ(decode_netpbm(commented).width, 2);
}

TEST(Formats, NetpbmErrors) {
  try {
    decode_netpbm("P5 2 2 65535\n12345678");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("maxval"), std::string::npos);
  }
  EXPECT_THROW(decode_netpbm("P3 1 1 255\n1"), FormatError);
  EXPECT_THROW(decode_netpbm("P5 0 2 255\n"), FormatError);
  EXPECT_THROW(decode_netpbm("P5 2 x 255\n"), FormatError);
  expect_categorized(encode_netpbm(random_image(3, 4, 3, 10)), [](const std::string& b) { decode_netpbm(b); });
}

TEST(Formats, GrayscaleLuma) {
  Image white(1, 1, 3, 1.0f);
  EXPECT_NEAR(to_grayscale(white).at(0, 0), 1.0f, 1e-6f);
  Image green(1, 1, 3);
  green.at(0, 0, 1) = 1.0f;
  EXPECT_FLOAT_EQ(to_grayscale(green).at(0, 0), 0.587f);
  const auto rgb = random_image(5, 6, 3, 11);
  const auto gray = to_grayscale(rgb);
  for (Index y = 0; y < 5; ++y)
    for (Index x = 0; x < 6; ++x) {
      const float expected = 0.299f * rgb.at(y, x, 0) + 0.587f * rgb.at(y, x, 1) + 0.114f * rgb.at(y, x, 2);
      EXPECT_FLOAT_EQ(gray.at(y, x), expected);
    }
  const auto g = random_image(2, 2, 1, 12);
  EXPECT_EQ(to_grayscale(g), g);
}

TEST(Formats, ConfusionCsv) {
  const auto dir = fs::temp_directory_path() / "s2ica_formats_csv";
  fs::create_directories(dir);
  Eigen::MatrixXi m(2, 2);
  m << 3, 1, 0, 4;
  save_confusion_csv(dir / "c.csv", m);
  EXPECT_EQ(read_file(dir / "c.csv"), "3,1\n0,4\n");
  fs::remove_all(dir);
}
