#include "ccvec/encoder.hpp"

#include "ccvec/errors.hpp"

namespace ccvec {

namespace {

GruCellParams make_gru_cell(ParamStore& store, Rng& rng, const std::string& prefix,
                            const std::string& group, int input_dim, int hidden_dim) {
  GruCellParams cell;
  auto mat = [&](const std::string& name, int rows, int cols) {
    ParamTensor& p = store.create(prefix + name, group, {rows, cols});
    init_uniform(p, rng);
    return &p;
  };
  auto bias = [&](const std::string& name) {
    ParamTensor& p = store.create(prefix + name, group, {hidden_dim});
    init_zero(p);
    return &p;
  };
  cell.update_x = mat("update_x", hidden_dim, input_dim);
  cell.update_h = mat("update_h", hidden_dim, hidden_dim);
  cell.update_b = bias("update_b");
  cell.reset_x = mat("reset_x", hidden_dim, input_dim);
  cell.reset_h = mat("reset_h", hidden_dim, hidden_dim);
  cell.reset_b = bias("reset_b");
  cell.cand_x = mat("cand_x", hidden_dim, input_dim);
  cell.cand_h = mat("cand_h", hidden_dim, hidden_dim);
  cell.cand_b = bias("cand_b");
  return cell;
}

GruLevelParams make_gru_level(ParamStore& store, Rng& rng, const std::string& prefix,
                              const std::string& group, int input_dim, int hidden_dim) {
  GruLevelParams level;
  level.input_dim = input_dim;
  level.hidden_dim = hidden_dim;
  level.fwd = make_gru_cell(store, rng, prefix + "fwd.", group, input_dim, hidden_dim);
  level.bwd = make_gru_cell(store, rng, prefix + "bwd.", group, input_dim, hidden_dim);
  return level;
}

AttentionParams make_attention(ParamStore& store, Rng& rng, const std::string& prefix,
                               const std::string& group, int width) {
  AttentionParams block;
  block.width = width;
  ParamTensor& w = store.create(prefix + "proj_w", group, {width, width});
  init_uniform(w, rng);
  block.proj_w = &w;
  ParamTensor& b = store.create(prefix + "proj_b", group, {width});
  init_zero(b);
  block.proj_b = &b;
  ParamTensor& u = store.create(prefix + "context", group, {width});
  init_uniform(u, rng);
  block.context = &u;
  return block;
}

}  // namespace

EncoderParams make_encoder_params(ParamStore& store, Rng& rng, const std::string& prefix,
                                  int vocab_size, int embed_dim, int gru_hidden) {
  if (embed_dim < 1 || gru_hidden < 1) {
    throw ConfigError("encoder dimensions must be >= 1");
  }
  EncoderParams p;
  p.embed_dim = embed_dim;
  p.gru_hidden = gru_hidden;
  ParamTensor& emb = store.create(prefix + "embedding", "embedding", {vocab_size, embed_dim});
  init_uniform(emb, rng);
  p.embedding = &emb;

  int a = 2 * gru_hidden;  // annotation width at every level
  p.word = make_gru_level(store, rng, prefix + "word.", "gru_word", embed_dim, gru_hidden);
  p.line = make_gru_level(store, rng, prefix + "line.", "gru_line", a, gru_hidden);
  p.hunk = make_gru_level(store, rng, prefix + "hunk.", "gru_hunk", a, gru_hidden);
  p.attn_word = make_attention(store, rng, prefix + "attn_word.", "attn_word", a);
  p.attn_line = make_attention(store, rng, prefix + "attn_line.", "attn_line", a);
  p.attn_hunk = make_attention(store, rng, prefix + "attn_hunk.", "attn_hunk", a);
  return p;
}

Val gru_step(Graph& g, const GruCellParams& cell, Val x, Val h_prev) {
  Val z = g.sigmoid(g.add(g.add(g.matvec(*cell.update_x, x), g.matvec(*cell.update_h, h_prev)),
                          g.param(*cell.update_b)));
  Val r = g.sigmoid(g.add(g.add(g.matvec(*cell.reset_x, x), g.matvec(*cell.reset_h, h_prev)),
                          g.param(*cell.reset_b)));
  Val c = g.tanh_act(g.add(
      g.add(g.matvec(*cell.cand_x, x), g.matvec(*cell.cand_h, g.mul(r, h_prev))),
      g.param(*cell.cand_b)));
  // h' = z .* h_prev + (1 - z) .* c  ==  c + z .* (h_prev - c)
  return g.add(c, g.mul(z, g.sub(h_prev, c)));
}

std::vector<Val> encode_sequence(Graph& g, const GruLevelParams& level,
                                 const std::vector<Val>& inputs) {
  if (inputs.empty()) throw ShapeError("encode_sequence: empty input");
  for (Val in : inputs) {
    if (g.width(in) != static_cast<size_t>(level.input_dim)) {
      throw ShapeError("encode_sequence: input width " + std::to_string(g.width(in)) +
                       ", expected " + std::to_string(level.input_dim));
    }
  }
  size_t n = inputs.size();
  std::vector<Val> forward(n), backward(n);
  Val h = g.constant(std::vector<double>(static_cast<size_t>(level.hidden_dim), 0.0));
  for (size_t k = 0; k < n; ++k) {
    h = gru_step(g, level.fwd, inputs[k], h);
    forward[k] = h;
  }
  h = g.constant(std::vector<double>(static_cast<size_t>(level.hidden_dim), 0.0));
  for (size_t k = n; k-- > 0;) {
    h = gru_step(g, level.bwd, inputs[k], h);
    backward[k] = h;
  }
  std::vector<Val> annotations(n);
  for (size_t k = 0; k < n; ++k) {
    annotations[k] = g.concat({forward[k], backward[k]});
  }
  return annotations;
}

std::pair<Val, Val> attention_pool(Graph& g, const AttentionParams& block,
                                   const std::vector<Val>& annotations,
                                   const std::vector<uint8_t>* mask) {
  if (annotations.empty()) throw ShapeError("attention_pool: empty input");
  std::vector<Val> scores;
  scores.reserve(annotations.size());
  for (Val h : annotations) {
    Val u = g.relu(g.add(g.matvec(*block.proj_w, h), g.param(*block.proj_b)));
    scores.push_back(g.dot(u, g.param(*block.context)));
  }
  Val weights = g.softmax(g.concat(scores), mask);
  Val pooled = g.weighted_sum(weights, annotations);
  return {pooled, weights};
}

Val encode_side(Graph& g, const EncoderParams& params, const SideView& side,
                AttentionTrace* trace, bool mask_pad) {
  if (trace) {
    trace->word.assign(static_cast<size_t>(side.hunks), {});
    trace->line.assign(static_cast<size_t>(side.hunks), {});
    trace->hunk.clear();
  }

  std::vector<Val> hunk_vecs;
  std::vector<uint8_t> hunk_mask;
  hunk_vecs.reserve(static_cast<size_t>(side.hunks));
  for (int h = 0; h < side.hunks; ++h) {
    std::vector<Val> line_vecs;
    std::vector<uint8_t> line_mask;
    line_vecs.reserve(static_cast<size_t>(side.lines));
    bool hunk_has_content = false;
    for (int l = 0; l < side.lines; ++l) {
      std::vector<Val> word_vecs;
      std::vector<uint8_t> word_mask;
      word_vecs.reserve(static_cast<size_t>(side.words));
      bool line_has_content = false;
      for (int w = 0; w < side.words; ++w) {
        int32_t id = side.at(h, l, w);
        word_vecs.push_back(g.lookup(*params.embedding, id));
        word_mask.push_back(id != Vocabulary::kPad ? 1 : 0);
        line_has_content |= id != Vocabulary::kPad;
      }
      std::vector<Val> word_annotations = encode_sequence(g, params.word, word_vecs);
      auto [line_vec, word_weights] =
          attention_pool(g, params.attn_word, word_annotations, mask_pad ? &word_mask : nullptr);
      line_vecs.push_back(line_vec);
      line_mask.push_back(line_has_content ? 1 : 0);
      hunk_has_content |= line_has_content;
      if (trace) trace->word[static_cast<size_t>(h)].push_back(g.value(word_weights));
    }
    std::vector<Val> line_annotations = encode_sequence(g, params.line, line_vecs);
    auto [hunk_vec, line_weights] =
        attention_pool(g, params.attn_line, line_annotations, mask_pad ? &line_mask : nullptr);
    hunk_vecs.push_back(hunk_vec);
    hunk_mask.push_back(hunk_has_content ? 1 : 0);
    if (trace) trace->line[static_cast<size_t>(h)] = g.value(line_weights);
  }
  std::vector<Val> hunk_annotations = encode_sequence(g, params.hunk, hunk_vecs);
  auto [side_vec, hunk_weights] =
      attention_pool(g, params.attn_hunk, hunk_annotations, mask_pad ? &hunk_mask : nullptr);
  if (trace) trace->hunk = g.value(hunk_weights);
  return side_vec;
}

}  // namespace ccvec
