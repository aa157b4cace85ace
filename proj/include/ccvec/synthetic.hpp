#pragma once

#include <cstdint>
#include <vector>

#include "ccvec/corpus.hpp"

namespace ccvec {

// Generator for small labeled corpora with a learnable code->message
// correlation: each patch draws a few "concepts", every concept contributes
// code lines built around its code token and one word of the log message.
// A per-patch marker token keeps code contents pairwise distinct. Used by
// the grad-check subcommand and the test fixtures.
struct SyntheticOptions {
  int patches = 8;
  int concepts = 6;       // <= 16
  int max_concepts_per_patch = 2;
  int max_files = 2;
  int max_hunks = 2;
  int max_lines = 2;
  uint64_t seed = 7;
};

std::vector<RawPatch> make_synthetic_corpus_raw(const SyntheticOptions& options);
std::vector<PatchChange> make_synthetic_corpus(const SyntheticOptions& options);

}  // namespace ccvec
