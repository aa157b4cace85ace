#pragma once

#include "ccvec/corpus.hpp"
#include "ccvec/errors.hpp"
#include "json.hpp"

namespace ccvec {

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  std::vector<std::string> tokens;
  if (v.size() > 2) tokens.reserve(static_cast<size_t>(v.size()) - 2);
  for (int32_t i = 2; i < v.size(); ++i) tokens.push_back(v.token(i));
  return {{"kind", v.kind() == VocabKind::code ? "code" : "message"},
          {"min_count", v.min_count()},
          {"tokens", tokens}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind != "code" && kind != "message") {
    throw CheckpointError("unknown vocabulary kind '" + kind + "'");
  }
  return Vocabulary(kind == "code" ? VocabKind::code : VocabKind::message,
                    j.at("min_count").get<int>(),
                    j.at("tokens").get<std::vector<std::string>>());
}

}  // namespace ccvec
