#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ccvec {

using TokenLine = std::vector<std::string>;

// Tokenized view of a patch, the unit everything downstream consumes.
// Hunks hold only changed lines; context and blank lines are dropped when
// the diff is parsed.
struct Hunk {
  std::vector<TokenLine> removed;
  std::vector<TokenLine> added;
};

struct FileChange {
  std::string path;
  std::vector<Hunk> hunks;
};

struct PatchChange {
  std::string id;
  TokenLine message_tokens;  // first log-message line, lowercased
  std::vector<FileChange> files;
};

// Raw (untokenized) twin of the structures above; this is what the canonical
// JSONL corpus stores so re-tokenization stays possible.
struct RawHunk {
  std::vector<std::string> removed;
  std::vector<std::string> added;
};

struct RawFileChange {
  std::string path;
  std::vector<RawHunk> hunks;
};

struct RawPatch {
  std::string id;
  std::string message;
  std::vector<RawFileChange> files;
};

struct ParseWarning {
  int line = 0;
  std::string text;
};

// Splits non-blank text into tokens: identifiers ([A-Za-z_] then
// [A-Za-z0-9_]*, bytes >= 0x80 treated as identifier characters), digit
// runs, the two-glyph operators == != <= >= -> && || ++ -- << >>, and single
// glyphs for everything else. Whitespace separates, nothing else is dropped.
TokenLine tokenize_line(std::string_view text, bool lowercase = false);

// Unified-diff ingestion. Hunks split at @@ markers; '-'/'+' lines become
// removed/added content, context lines and whitespace-only changed lines are
// discarded. Binary files are skipped and reported through `warnings`.
// Files without any surviving hunk are dropped.
std::vector<RawFileChange> parse_unified_diff_raw(std::string_view text,
                                                  std::vector<ParseWarning>* warnings = nullptr);
std::vector<FileChange> parse_unified_diff(std::string_view text,
                                           std::vector<ParseWarning>* warnings = nullptr);

PatchChange tokenize_patch(const RawPatch& raw);

enum class VocabKind { code, message };

class Vocabulary {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kOov = 1;

  Vocabulary() = default;
  // tokens are the non-reserved entries in id order (ids start at 2)
  Vocabulary(VocabKind kind, int min_count, std::vector<std::string> tokens);

  VocabKind kind() const { return kind_; }
  int min_count() const { return min_count_; }
  int32_t size() const { return static_cast<int32_t>(id_to_token_.size()); }

  // OOV for unknown tokens; PAD/OOV display names never match corpus tokens
  // because the tokenizer splits '<'/'>' off.
  int32_t id(std::string_view token) const;
  const std::string& token(int32_t id) const;
  bool contains(std::string_view token) const;

 private:
  VocabKind kind_ = VocabKind::code;
  int min_count_ = 1;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int32_t> token_to_id_;
};

// Frequency-filtered vocabularies over the corpus: code tokens as-is,
// message tokens lowercased, message vocabulary capped at msg_max_size
// non-reserved entries (most frequent first, ties lexicographic).
std::pair<Vocabulary, Vocabulary> build_vocabularies(const std::vector<PatchChange>& corpus,
                                                     int code_min_count, int msg_min_count,
                                                     int msg_max_size);

// Multi-hot target over the message vocabulary. Entries for PAD/OOV stay 0;
// out-of-vocabulary message words contribute nothing.
using LabelVector = std::vector<double>;
LabelVector message_labels(const PatchChange& patch, const Vocabulary& message_vocab);
bool has_any_label(const LabelVector& labels);

// Line-aligned diff/message pair files: line i of each file forms patch i.
// newline_marker occurrences in the diff line are expanded to real newlines
// before parsing. Ids are content hashes.
std::vector<RawPatch> import_paired_files_raw(const std::string& diff_path,
                                              const std::string& msg_path,
                                              const std::string& newline_marker = "<nl>");
std::vector<PatchChange> import_paired_files(const std::string& diff_path,
                                             const std::string& msg_path,
                                             const std::string& newline_marker = "<nl>");

// Canonical corpus format: one JSON object per line,
// {"id", "message", "files": [{"path", "hunks": [{"removed": [...], "added": [...]}]}]}
// with raw line strings, UTF-8.
void save_corpus_jsonl(const std::string& path, const std::vector<RawPatch>& patches);
std::vector<RawPatch> load_corpus_jsonl_raw(const std::string& path);
std::vector<PatchChange> load_corpus_jsonl(const std::string& path);

}  // namespace ccvec
