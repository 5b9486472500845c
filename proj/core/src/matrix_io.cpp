// Copyright 2026 The collabrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "collabrec/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace collabrec {
namespace {

static_assert(sizeof(double) == 8);

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<unsigned char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const RowMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) {
    put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
  }
  if (!out) throw Error("short write to " + path.string());
}

RowMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const auto rows = get_u64(in);
  const auto cols = get_u64(in);
  if (!in) throw ParseError(path.string() + ": truncated header");
  const auto expected = 16 + 8 * rows * cols;
  if (rows != 0 && cols != 0 && (rows * cols) / cols != rows) {
    throw ParseError(path.string() + ": dimensions overflow");
  }
  if (std::filesystem::file_size(path) != expected) {
    throw ParseError(path.string() + ": size does not match the " +
                     std::to_string(rows) + " x " + std::to_string(cols) +
                     " header");
  }
  RowMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = std::bit_cast<double>(get_u64(in));
  }
  return m;
}

void write_payload(const std::filesystem::path& dir, Index party_id,
                   const PartyPayload& payload) {
  validate(payload);
  std::filesystem::create_directories(dir);
  write_matrix(dir / "x_tilde.bin", payload.x_tilde.values());
  write_matrix(dir / "s_tilde.bin", payload.s_tilde.values());
  write_matrix(dir / "y.bin", RowMatrix(payload.y));
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw Error("cannot write " + (dir / "manifest.txt").string());
  manifest << "party_id " << party_id << "\n"
           << "n " << payload.x_tilde.rows() << "\n"
           << "p_tilde " << payload.x_tilde.cols() << "\n"
           << "r " << payload.s_tilde.rows() << "\n";
}

StoredPayload read_payload(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw ParseError("cannot open " + (dir / "manifest.txt").string());
  std::map<std::string, Index> fields;
  std::string key;
  Index value = 0;
  while (manifest >> key >> value) fields[key] = value;
  for (const char* required : {"party_id", "n", "p_tilde", "r"}) {
    if (!fields.count(required)) {
      throw ParseError((dir / "manifest.txt").string() + ": missing " + required);
    }
  }
  StoredPayload stored;
  stored.party_id = fields["party_id"];
  stored.payload.x_tilde = IntermediateRepresentation(read_matrix(dir / "x_tilde.bin"));
  stored.payload.s_tilde = IntermediateRepresentation(read_matrix(dir / "s_tilde.bin"));
  const RowMatrix y = read_matrix(dir / "y.bin");
  if (y.cols() != 1 && y.rows() > 0) throw ParseError("y.bin must be n x 1");
  stored.payload.y = y.size() ? Vector(y.col(0)) : Vector();
  const auto& p = stored.payload;
  if (p.x_tilde.rows() != fields["n"] || p.x_tilde.cols() != fields["p_tilde"] ||
      p.s_tilde.rows() != fields["r"]) {
    throw ParseError(dir.string() + ": matrices disagree with manifest");
  }
  validate(stored.payload);
  return stored;
}

}  // namespace collabrec
