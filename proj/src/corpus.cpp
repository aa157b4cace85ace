#include "ccvec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "ccvec/errors.hpp"
#include "ccvec/util.hpp"
#include "json.hpp"

namespace ccvec {

namespace {

bool is_identifier_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_identifier_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_two_glyph_operator(char a, char b) {
  static const char* ops[] = {"==", "!=", "<=", ">=", "->", "&&", "||", "++", "--", "<<", ">>"};
  for (const char* op : ops) {
    if (a == op[0] && b == op[1]) return true;
  }
  return false;
}

bool is_blank(std::string_view text) {
  for (unsigned char c : text) {
    if (!std::isspace(c)) return false;
  }
  return true;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

// "a/foo/bar.c" -> "foo/bar.c"; quoted paths keep their quotes stripped
std::string strip_git_prefix(std::string_view path) {
  if (path.size() >= 2 && (path.substr(0, 2) == "a/" || path.substr(0, 2) == "b/")) {
    path.remove_prefix(2);
  }
  return std::string(path);
}

std::string header_path(std::string_view line) {
  // line starts with "--- " or "+++ "; take the first whitespace-delimited
  // field and ignore trailing timestamps
  std::string_view rest = line.substr(4);
  size_t end = rest.find('\t');
  if (end == std::string_view::npos) end = rest.size();
  std::string_view p = rest.substr(0, end);
  if (p == "/dev/null") return "";
  return strip_git_prefix(p);
}

// "@@" alone is accepted; otherwise the marker must carry a well-formed
// "-l[,n] +l[,n]" range closed by a second "@@".
bool valid_hunk_marker(std::string_view line) {
  if (line == "@@") return true;
  if (line.size() < 3 || line.substr(0, 3) != "@@ ") return false;
  size_t close = line.find("@@", 3);
  if (close == std::string_view::npos) return false;
  std::string_view range = line.substr(3, close - 3);
  // expected: -<digits>[,<digits>] +<digits>[,<digits>]
  size_t pos = 0;
  for (char sign : {'-', '+'}) {
    if (pos >= range.size() || range[pos] != sign) return false;
    ++pos;
    size_t digits = 0;
    while (pos < range.size() && std::isdigit(static_cast<unsigned char>(range[pos]))) {
      ++pos;
      ++digits;
    }
    if (digits == 0) return false;
    if (pos < range.size() && range[pos] == ',') {
      ++pos;
      digits = 0;
      while (pos < range.size() && std::isdigit(static_cast<unsigned char>(range[pos]))) {
        ++pos;
        ++digits;
      }
      if (digits == 0) return false;
    }
    if (sign == '-') {
      if (pos >= range.size() || range[pos] != ' ') return false;
      ++pos;
    }
  }
  while (pos < range.size() && range[pos] == ' ') ++pos;
  return pos == range.size();
}

struct DiffBuilder {
  std::vector<RawFileChange> files;
  RawFileChange current;
  RawHunk hunk;
  bool file_open = false;
  bool hunk_open = false;
  bool skip_file = false;

  void flush_hunk() {
    if (hunk_open && (!hunk.removed.empty() || !hunk.added.empty())) {
      current.hunks.push_back(std::move(hunk));
    }
    hunk = RawHunk{};
    hunk_open = false;
  }

  void flush_file() {
    flush_hunk();
    if (file_open && !skip_file && !current.hunks.empty()) {
      files.push_back(std::move(current));
    }
    current = RawFileChange{};
    file_open = false;
    skip_file = false;
  }
};

nlohmann::json parse_json_line(const std::string& line, const std::string& path, size_t line_no) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw IoError("invalid JSON in " + path + " line " + std::to_string(line_no));
  }
  return j;
}

}  // namespace

TokenLine tokenize_line(std::string_view text, bool lowercase) {
  TokenLine tokens;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    size_t start = i;
    if (is_identifier_start(c)) {
      ++i;
      while (i < text.size() && is_identifier_char(static_cast<unsigned char>(text[i]))) ++i;
    } else if (std::isdigit(c)) {
      ++i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    } else if (i + 1 < text.size() && is_two_glyph_operator(text[i], text[i + 1])) {
      i += 2;
    } else {
      ++i;
    }
    std::string tok(text.substr(start, i - start));
    if (lowercase) {
      for (char& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::vector<RawFileChange> parse_unified_diff_raw(std::string_view text,
                                                  std::vector<ParseWarning>* warnings) {
  DiffBuilder b;
  std::vector<std::string_view> lines = split_lines(text);
  for (size_t idx = 0; idx < lines.size(); ++idx) {
    std::string_view line = lines[idx];
    int line_no = static_cast<int>(idx + 1);

    bool next_is_new_file_header =
        idx + 1 < lines.size() && lines[idx + 1].substr(0, 4) == "+++ ";
    bool old_file_header = line.substr(0, 4) == "--- " &&
                           (!b.hunk_open || next_is_new_file_header);
    // inside a hunk "--- x"/"+++ x" are content ("-- x" removed etc.) unless
    // they form a new ---/+++ header pair
    if (line.substr(0, 5) == "diff ") {
      b.flush_file();
      b.file_open = true;
      // path is refined by the +++ header when present
      size_t bpos = line.rfind(" b/");
      if (bpos != std::string_view::npos) b.current.path = std::string(line.substr(bpos + 3));
      continue;
    }
    if (old_file_header) {
      b.flush_file();
      b.file_open = true;
      b.current.path = header_path(line);
      continue;
    }
    if (line.substr(0, 4) == "+++ " && b.file_open && !b.hunk_open) {
      std::string p = header_path(line);
      if (!p.empty()) b.current.path = p;
      continue;
    }
    if (line.substr(0, 2) == "@@") {
      if (!valid_hunk_marker(line)) {
        throw ParseError("malformed hunk header '" + std::string(line) + "'", line_no);
      }
      if (!b.file_open) throw ParseError("hunk marker outside any file", line_no);
      if (b.skip_file) continue;
      b.flush_hunk();
      b.hunk_open = true;
      continue;
    }
    if (line.substr(0, 13) == "Binary files " || line == "GIT binary patch") {
      if (warnings) {
        warnings->push_back({line_no, "binary file skipped: " + std::string(line)});
      }
      b.skip_file = true;
      b.flush_hunk();
      continue;
    }
    if (b.hunk_open && !b.skip_file) {
      if (!line.empty() && line[0] == '-') {
        std::string_view content = line.substr(1);
        if (!is_blank(content)) b.hunk.removed.emplace_back(content);
      } else if (!line.empty() && line[0] == '+') {
        std::string_view content = line.substr(1);
        if (!is_blank(content)) b.hunk.added.emplace_back(content);
      }
      // ' ' context, '\' markers, blanks: ignored
      continue;
    }
    // between hunks: metadata lines (index, mode, rename, similarity) are
    // skipped, and a change line means the diff is broken. Anything before
    // the first file section (mail preamble, "---" separators) is ignored.
    if (b.file_open && !b.skip_file && !line.empty() && (line[0] == '+' || line[0] == '-') &&
        !is_blank(line.substr(1))) {
      throw ParseError("change line outside any hunk", line_no);
    }
  }
  b.flush_file();
  return std::move(b.files);
}

std::vector<FileChange> parse_unified_diff(std::string_view text,
                                           std::vector<ParseWarning>* warnings) {
  std::vector<RawFileChange> raw = parse_unified_diff_raw(text, warnings);
  std::vector<FileChange> files;
  files.reserve(raw.size());
  for (const RawFileChange& rf : raw) {
    FileChange fc;
    fc.path = rf.path;
    for (const RawHunk& rh : rf.hunks) {
      Hunk h;
      for (const std::string& l : rh.removed) h.removed.push_back(tokenize_line(l));
      for (const std::string& l : rh.added) h.added.push_back(tokenize_line(l));
      if (!h.removed.empty() || !h.added.empty()) fc.hunks.push_back(std::move(h));
    }
    if (!fc.hunks.empty()) files.push_back(std::move(fc));
  }
  return files;
}

PatchChange tokenize_patch(const RawPatch& raw) {
  PatchChange p;
  p.id = raw.id;
  std::string_view first_line = raw.message;
  size_t nl = first_line.find('\n');
  if (nl != std::string_view::npos) first_line = first_line.substr(0, nl);
  p.message_tokens = tokenize_line(first_line, /*lowercase=*/true);
  for (const RawFileChange& rf : raw.files) {
    FileChange fc;
    fc.path = rf.path;
    for (const RawHunk& rh : rf.hunks) {
      Hunk h;
      for (const std::string& l : rh.removed) {
        if (!is_blank(l)) h.removed.push_back(tokenize_line(l));
      }
      for (const std::string& l : rh.added) {
        if (!is_blank(l)) h.added.push_back(tokenize_line(l));
      }
      if (!h.removed.empty() || !h.added.empty()) fc.hunks.push_back(std::move(h));
    }
    if (!fc.hunks.empty()) p.files.push_back(std::move(fc));
  }
  return p;
}

Vocabulary::Vocabulary(VocabKind kind, int min_count, std::vector<std::string> tokens)
    : kind_(kind), min_count_(min_count) {
  id_to_token_.reserve(tokens.size() + 2);
  id_to_token_.push_back("<pad>");
  id_to_token_.push_back("<oov>");
  for (std::string& t : tokens) id_to_token_.push_back(std::move(t));
  for (int32_t i = 2; i < static_cast<int32_t>(id_to_token_.size()); ++i) {
    token_to_id_[id_to_token_[static_cast<size_t>(i)]] = i;
  }
}

int32_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kOov : it->second;
}

const std::string& Vocabulary::token(int32_t id) const {
  if (id < 0 || id >= size()) {
    throw ConfigError("vocabulary id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

std::pair<Vocabulary, Vocabulary> build_vocabularies(const std::vector<PatchChange>& corpus,
                                                     int code_min_count, int msg_min_count,
                                                     int msg_max_size) {
  if (corpus.empty()) throw ConfigError("cannot build vocabularies from an empty corpus");
  if (msg_max_size < 1) throw ConfigError("msg_max_size must be >= 1");

  std::map<std::string, int64_t> code_counts;
  std::map<std::string, int64_t> msg_counts;
  for (const PatchChange& p : corpus) {
    for (const FileChange& f : p.files) {
      for (const Hunk& h : f.hunks) {
        for (const TokenLine& line : h.removed) {
          for (const std::string& t : line) ++code_counts[t];
        }
        for (const TokenLine& line : h.added) {
          for (const std::string& t : line) ++code_counts[t];
        }
      }
    }
    for (const std::string& t : p.message_tokens) ++msg_counts[t];
  }

  auto select = [](const std::map<std::string, int64_t>& counts, int min_count, size_t cap) {
    std::vector<std::pair<std::string, int64_t>> kept;
    for (const auto& [tok, n] : counts) {
      if (n >= min_count) kept.emplace_back(tok, n);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (kept.size() > cap) kept.resize(cap);
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
    return tokens;
  };

  std::vector<std::string> code_tokens =
      select(code_counts, code_min_count, code_counts.size());
  std::vector<std::string> msg_tokens =
      select(msg_counts, msg_min_count, static_cast<size_t>(msg_max_size));
  if (msg_tokens.empty()) {
    throw ConfigError("message vocabulary is empty after frequency filtering");
  }
  return {Vocabulary(VocabKind::code, code_min_count, std::move(code_tokens)),
          Vocabulary(VocabKind::message, msg_min_count, std::move(msg_tokens))};
}

LabelVector message_labels(const PatchChange& patch, const Vocabulary& message_vocab) {
  if (message_vocab.kind() != VocabKind::message) {
    throw ConfigError("message_labels requires a message vocabulary");
  }
  LabelVector labels(static_cast<size_t>(message_vocab.size()), 0.0);
  for (const std::string& tok : patch.message_tokens) {
    int32_t id = message_vocab.id(tok);
    if (id >= 2) labels[static_cast<size_t>(id)] = 1.0;
  }
  return labels;
}

bool has_any_label(const LabelVector& labels) {
  for (double v : labels) {
    if (v != 0.0) return true;
  }
  return false;
}

std::vector<RawPatch> import_paired_files_raw(const std::string& diff_path,
                                              const std::string& msg_path,
                                              const std::string& newline_marker) {
  std::string diff_text = read_text_file(diff_path);
  std::string msg_text = read_text_file(msg_path);
  std::vector<std::string_view> diff_lines = split_lines(diff_text);
  std::vector<std::string_view> msg_lines = split_lines(msg_text);
  if (diff_lines.size() != msg_lines.size()) {
    throw ConfigError("paired files disagree on patch count: " +
                      std::to_string(diff_lines.size()) +
                      " != " + std::to_string(msg_lines.size()));
  }

  std::vector<RawPatch> patches(diff_lines.size());
  parallel_for(diff_lines.size(), [&](size_t i) {
    std::string diff(diff_lines[i]);
    if (!newline_marker.empty()) {
      size_t pos = 0;
      while ((pos = diff.find(newline_marker, pos)) != std::string::npos) {
        diff.replace(pos, newline_marker.size(), "\n");
        ++pos;
      }
    }
    RawPatch p;
    p.message = std::string(msg_lines[i]);
    p.id = hex64(fnv1a64(diff + "\x1f" + p.message));
    p.files = parse_unified_diff_raw(diff);
    patches[i] = std::move(p);
  });
  return patches;
}

std::vector<PatchChange> import_paired_files(const std::string& diff_path,
                                             const std::string& msg_path,
                                             const std::string& newline_marker) {
  std::vector<RawPatch> raw = import_paired_files_raw(diff_path, msg_path, newline_marker);
  std::vector<PatchChange> patches(raw.size());
  parallel_for(raw.size(), [&](size_t i) { patches[i] = tokenize_patch(raw[i]); });
  return patches;
}

void save_corpus_jsonl(const std::string& path, const std::vector<RawPatch>& patches) {
  std::ostringstream out;
  for (const RawPatch& p : patches) {
    nlohmann::json files = nlohmann::json::array();
    for (const RawFileChange& f : p.files) {
      nlohmann::json hunks = nlohmann::json::array();
      for (const RawHunk& h : f.hunks) {
        hunks.push_back({{"removed", h.removed}, {"added", h.added}});
      }
      files.push_back({{"path", f.path}, {"hunks", hunks}});
    }
    nlohmann::json j = {{"id", p.id}, {"message", p.message}, {"files", files}};
    out << j.dump() << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<RawPatch> load_corpus_jsonl_raw(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<std::string_view> lines = split_lines(text);
  std::vector<RawPatch> patches;
  patches.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    nlohmann::json j = parse_json_line(std::string(lines[i]), path, i + 1);
    RawPatch p;
    p.message = j.value("message", std::string());
    for (const auto& jf : j.value("files", nlohmann::json::array())) {
      RawFileChange f;
      f.path = jf.value("path", std::string());
      for (const auto& jh : jf.value("hunks", nlohmann::json::array())) {
        RawHunk h;
        for (const auto& l : jh.value("removed", nlohmann::json::array())) {
          h.removed.push_back(l.get<std::string>());
        }
        for (const auto& l : jh.value("added", nlohmann::json::array())) {
          h.added.push_back(l.get<std::string>());
        }
        f.hunks.push_back(std::move(h));
      }
      p.files.push_back(std::move(f));
    }
    if (j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty()) {
      p.id = j["id"].get<std::string>();
    } else {
      p.id = hex64(fnv1a64(std::string(lines[i])));
    }
    patches.push_back(std::move(p));
  }
  return patches;
}

std::vector<PatchChange> load_corpus_jsonl(const std::string& path) {
  std::vector<RawPatch> raw = load_corpus_jsonl_raw(path);
  std::vector<PatchChange> patches(raw.size());
  parallel_for(raw.size(), [&](size_t i) { patches[i] = tokenize_patch(raw[i]); });
  return patches;
}

}  // namespace ccvec
