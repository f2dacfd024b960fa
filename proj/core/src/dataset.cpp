#include "ufpgd/dataset.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ufpgd/errors.hpp"

namespace ufpgd {
namespace {

void put_u32(std::string& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void put_u64(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t value = 0;
  for (int i = 3; i >= 0; --i) value = (value << 8) | p[i];
  return value;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) value = (value << 8) | p[i];
  return value;
}

void append_matrix(std::string& out, const ComplexMatrix& matrix) {
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      put_u64(out, std::bit_cast<std::uint64_t>(matrix(r, c).real()));
      put_u64(out, std::bit_cast<std::uint64_t>(matrix(r, c).imag()));
    }
  }
}

ComplexMatrix read_matrix(std::ifstream& in, int rows, int cols,
                          const std::string& path) {
  std::string buffer(static_cast<std::size_t>(rows) * cols * 16, '\0');
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
    throw DataFormatError("dataset truncated: " + path);
  }
  ComplexMatrix matrix(rows, cols);
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(buffer.data());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double re = std::bit_cast<double>(get_u64(p));
      double im = std::bit_cast<double>(get_u64(p + 8));
      matrix(r, c) = Complex(re, im);
      p += 16;
    }
  }
  return matrix;
}

}  // namespace

void write_dataset(const Dataset& data, const std::string& path) {
  if (data.num_users < 1 || data.num_antennas < 1) {
    throw std::invalid_argument("write_dataset: bad dimensions");
  }
  if (data.has_labels() && data.labels.size() != data.channels.size()) {
    throw std::invalid_argument(
        "write_dataset: label count does not match channel count");
  }
  for (const ChannelMatrix& channel : data.channels) {
    if (channel.rows() != data.num_users ||
        channel.cols() != data.num_antennas) {
      throw std::invalid_argument("write_dataset: channel shape mismatch");
    }
  }
  for (const PrecoderMatrix& label : data.labels) {
    if (label.rows() != data.num_users ||
        label.cols() != data.num_antennas) {
      throw std::invalid_argument("write_dataset: label shape mismatch");
    }
  }

  std::string header;
  header.reserve(kDatasetHeaderBytes);
  put_u32(header, kDatasetMagic);
  put_u32(header, kDatasetVersion);
  put_u32(header, static_cast<std::uint32_t>(data.num_users));
  put_u32(header, static_cast<std::uint32_t>(data.num_antennas));
  put_u64(header, static_cast<std::uint64_t>(data.channels.size()));
  put_u64(header, data.seed);
  put_u32(header, data.has_labels() ? 1u : 0u);

  std::filesystem::path target(path);
  std::filesystem::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + temp.string());
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string buffer;
    for (const ChannelMatrix& channel : data.channels) {
      buffer.clear();
      append_matrix(buffer, channel);
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    }
    for (const PrecoderMatrix& label : data.labels) {
      buffer.clear();
      append_matrix(buffer, label);
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    }
    out.flush();
    if (!out) {
      throw std::runtime_error("write failed: " + temp.string());
    }
  }
  std::filesystem::rename(temp, target);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open dataset: " + path);

  unsigned char header[kDatasetHeaderBytes];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(header))) {
    throw DataFormatError("dataset header truncated: " + path);
  }
  if (get_u32(header) != kDatasetMagic) {
    throw DataFormatError("dataset magic mismatch: " + path);
  }
  if (get_u32(header + 4) != kDatasetVersion) {
    throw DataFormatError("dataset version unsupported: " + path);
  }

  Dataset data;
  data.num_users = static_cast<int>(get_u32(header + 8));
  data.num_antennas = static_cast<int>(get_u32(header + 12));
  std::uint64_t count = get_u64(header + 16);
  data.seed = get_u64(header + 24);
  std::uint32_t flags = get_u32(header + 32);
  bool has_labels = (flags & 1u) != 0;

  if (data.num_users < 1 || data.num_antennas < data.num_users) {
    throw DataFormatError("dataset dimensions invalid: " + path);
  }

  data.channels.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data.channels.push_back(
        read_matrix(in, data.num_users, data.num_antennas, path));
  }
  if (has_labels) {
    data.labels.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      data.labels.push_back(
          read_matrix(in, data.num_users, data.num_antennas, path));
    }
  }
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw DataFormatError("dataset has trailing bytes: " + path);
  }
  return data;
}

}  // namespace ufpgd
