#include "ccvec/tensorize.hpp"

#include <algorithm>

#include "ccvec/errors.hpp"

namespace ccvec {

namespace {

void fill_side(int32_t* out, const ShapeConfig& shape,
               const std::vector<TokenLine>& lines, const Vocabulary& vocab) {
  int l_count = std::min<int>(shape.lines, static_cast<int>(lines.size()));
  for (int l = 0; l < l_count; ++l) {
    const TokenLine& line = lines[static_cast<size_t>(l)];
    int w_count = std::min<int>(shape.words, static_cast<int>(line.size()));
    for (int w = 0; w < w_count; ++w) {
      out[static_cast<int64_t>(l) * shape.words + w] = vocab.id(line[static_cast<size_t>(w)]);
    }
  }
}

}  // namespace

ChangeTensor encode_change(const PatchChange& patch, const ShapeConfig& shape,
                           const Vocabulary& code_vocab) {
  if (shape.files < 1 || shape.hunks < 1 || shape.lines < 1 || shape.words < 1) {
    throw ShapeError("all ShapeConfig dimensions must be >= 1");
  }
  if (code_vocab.kind() != VocabKind::code) {
    throw ConfigError("encode_change requires a code vocabulary");
  }

  ChangeTensor t;
  t.shape = shape;
  int64_t total = static_cast<int64_t>(shape.files) * shape.side_volume();
  t.removed.assign(static_cast<size_t>(total), Vocabulary::kPad);
  t.added.assign(static_cast<size_t>(total), Vocabulary::kPad);

  int f_count = std::min<int>(shape.files, static_cast<int>(patch.files.size()));
  for (int f = 0; f < f_count; ++f) {
    const FileChange& fc = patch.files[static_cast<size_t>(f)];
    int h_count = std::min<int>(shape.hunks, static_cast<int>(fc.hunks.size()));
    for (int h = 0; h < h_count; ++h) {
      const Hunk& hunk = fc.hunks[static_cast<size_t>(h)];
      int64_t base = (static_cast<int64_t>(f) * shape.hunks + h) *
                     static_cast<int64_t>(shape.lines) * shape.words;
      // a hunk with only one side present leaves the other side all-PAD,
      // keeping hunk indices aligned between the two tensors
      fill_side(t.removed.data() + base, shape, hunk.removed, code_vocab);
      fill_side(t.added.data() + base, shape, hunk.added, code_vocab);
    }
  }
  return t;
}

}  // namespace ccvec
