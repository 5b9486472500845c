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

#ifndef COLLABREC_MATRIX_IO_HPP_
#define COLLABREC_MATRIX_IO_HPP_

#include <filesystem>

#include "collabrec/collaboration.hpp"
#include "collabrec/types.hpp"

namespace collabrec {

// Flat binary matrix: rows and cols as little-endian uint64, then
// rows * cols little-endian IEEE-754 doubles in row-major order.
void write_matrix(const std::filesystem::path& path, const RowMatrix& m);
RowMatrix read_matrix(const std::filesystem::path& path);

// A payload directory holds x_tilde.bin, s_tilde.bin, y.bin (an n x 1
// matrix) and manifest.txt with the lines
//   party_id <k>
//   n <n(k)>
//   p_tilde <p~(k)>
//   r <r>
void write_payload(const std::filesystem::path& dir, Index party_id,
                   const PartyPayload& payload);

struct StoredPayload {
  Index party_id = 0;
  PartyPayload payload;
};

StoredPayload read_payload(const std::filesystem::path& dir);

}  // namespace collabrec

#endif  // COLLABREC_MATRIX_IO_HPP_
