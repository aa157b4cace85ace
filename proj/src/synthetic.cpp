#include "ccvec/synthetic.hpp"

#include <algorithm>

#include "ccvec/errors.hpp"
#include "ccvec/rng.hpp"
#include "ccvec/util.hpp"

namespace ccvec {

namespace {

struct Concept {
  const char* code_token;
  const char* message_word;
};

constexpr Concept kConcepts[16] = {
    {"alloc", "allocation"}, {"timer", "timer"},     {"parser", "parser"},
    {"cache", "cache"},      {"socket", "socket"},   {"config", "config"},
    {"index", "index"},      {"worker", "worker"},   {"buffer", "buffer"},
    {"lock", "locking"},     {"queue", "queue"},     {"cursor", "cursor"},
    {"handle", "handle"},    {"stream", "stream"},   {"retry", "retry"},
    {"logger", "logging"},
};

}  // namespace

std::vector<RawPatch> make_synthetic_corpus_raw(const SyntheticOptions& options) {
  if (options.patches < 1 || options.concepts < 1 || options.concepts > 16 ||
      options.max_concepts_per_patch < 1 || options.max_files < 1 || options.max_hunks < 1 ||
      options.max_lines < 1) {
    throw ConfigError("invalid synthetic corpus options");
  }
  Rng rng(options.seed);
  std::vector<RawPatch> patches;
  patches.reserve(static_cast<size_t>(options.patches));

  for (int pi = 0; pi < options.patches; ++pi) {
    int picked = 1 + static_cast<int>(rng.next_below(
                         static_cast<uint64_t>(options.max_concepts_per_patch)));
    std::vector<int> chosen;
    // rotate through concepts so small corpora cover distinct label sets
    int base = pi % options.concepts;
    for (int c = 0; c < picked; ++c) chosen.push_back((base + c) % options.concepts);
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

    std::string marker = "p" + std::to_string(pi) + "q";  // per-patch unique token
    RawPatch patch;
    patch.message = "fix";
    for (int c : chosen) {
      patch.message += " ";
      patch.message += kConcepts[c].message_word;
    }

    int files = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(options.max_files)));
    for (int f = 0; f < files; ++f) {
      RawFileChange file;
      file.path = std::string("src/") + kConcepts[chosen[static_cast<size_t>(f) % chosen.size()]]
                      .code_token +
                  ".c";
      int hunks = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(options.max_hunks)));
      for (int h = 0; h < hunks; ++h) {
        RawHunk hunk;
        int lines = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(options.max_lines)));
        for (int l = 0; l < lines; ++l) {
          const char* tok = kConcepts[chosen[static_cast<size_t>((f + h + l) % chosen.size())]]
                                .code_token;
          int arg = static_cast<int>(rng.next_below(9));
          hunk.removed.push_back(std::string(tok) + "_old ( " + std::to_string(arg) + " ) ;");
          hunk.added.push_back(std::string(tok) + " ( " + marker + " , " +
                               std::to_string(arg) + " ) ;");
        }
        file.hunks.push_back(std::move(hunk));
      }
      patch.files.push_back(std::move(file));
    }
    patch.id = "syn" + std::to_string(pi);
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<PatchChange> make_synthetic_corpus(const SyntheticOptions& options) {
  std::vector<RawPatch> raw = make_synthetic_corpus_raw(options);
  std::vector<PatchChange> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) out[i] = tokenize_patch(raw[i]);
  return out;
}

}  // namespace ccvec
