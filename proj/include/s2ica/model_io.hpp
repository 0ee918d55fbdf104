#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2ica/transfer.hpp"

namespace s2ica {

// Binary container shared by network and SVM files:
//   4-byte magic | u32 LE version | u32 LE header length | UTF-8 header |
//   32-bit LE float blob (rest of file)

constexpr std::uint32_t kContainerVersion = 1;

struct Container {
  std::string magic;
  std::uint32_t version = kContainerVersion;
  std::string header;
  std::vector<float> blob;
  /// Byte offset at which the blob starts (set by read_container).
  std::uint64_t blob_offset = 0;
};

/// Writes to a temporary file next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

std::string encode_container(const Container& c);
/// Throws FormatError on a wrong magic, unsupported version or truncation.
Container decode_container(const std::string& bytes, const std::string& magic);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path, const std::string& magic);

/// Structured-text (JSON) form of a network spec.
std::string spec_to_text(const NetworkSpec& spec);
NetworkSpec spec_from_text(const std::string& text);

void save_model(const std::filesystem::path& path, const Net& net);
Net load_model(const std::filesystem::path& path);
std::string encode_model(const Net& net);
Net decode_model(const std::string& bytes);

// Descriptor table: "S2FV" | u32 LE count | u32 LE length | count*length
// 32-bit LE floats, row-major.

void save_descriptor_table(const std::filesystem::path& path, const std::vector<Vec<float>>& rows);
std::vector<Vec<float>> load_descriptor_table(const std::filesystem::path& path);
std::string encode_descriptor_table(const std::vector<Vec<float>>& rows);
std::vector<Vec<float>> decode_descriptor_table(const std::string& bytes);

/// One value per line: a label per descriptor row.
void save_labels(const std::filesystem::path& path, const std::vector<Index>& labels);
std::vector<Index> load_labels(const std::filesystem::path& path);

void save_descriptor_csv(const std::filesystem::path& path, const std::vector<Vec<float>>& rows,
                         const std::vector<Index>& labels);

}  // namespace s2ica
