#pragma once

#include <cstdint>
#include <vector>

#include "ccvec/corpus.hpp"

namespace ccvec {

// Fixed geometry every patch is padded/truncated to before encoding.
struct ShapeConfig {
  int files = 5;
  int hunks = 8;
  int lines = 10;
  int words = 32;

  int64_t side_volume() const {
    return static_cast<int64_t>(hunks) * lines * words;
  }
  bool operator==(const ShapeConfig&) const = default;
};

// One side (removed or added) of one file slot: hunks x lines x words ids.
struct SideView {
  int hunks = 0;
  int lines = 0;
  int words = 0;
  const int32_t* data = nullptr;

  int32_t at(int h, int l, int w) const {
    return data[(static_cast<int64_t>(h) * lines + l) * words + w];
  }
};

// Integer encoding of a whole patch: files x {removed, added} x H x L x W.
// Entries are code-vocabulary ids; every padded slot holds PAD. Truncation
// keeps the earliest files/hunks/lines/words.
struct ChangeTensor {
  ShapeConfig shape;
  std::vector<int32_t> removed;  // files * H * L * W, row-major [f][h][l][w]
  std::vector<int32_t> added;

  SideView removed_side(int file) const {
    return {shape.hunks, shape.lines, shape.words,
            removed.data() + static_cast<int64_t>(file) * shape.side_volume()};
  }
  SideView added_side(int file) const {
    return {shape.hunks, shape.lines, shape.words,
            added.data() + static_cast<int64_t>(file) * shape.side_volume()};
  }
};

ChangeTensor encode_change(const PatchChange& patch, const ShapeConfig& shape,
                           const Vocabulary& code_vocab);

}  // namespace ccvec
