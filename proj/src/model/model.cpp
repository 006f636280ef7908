#include "scope_refine/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scope_refine/minic/lexer.hpp"
#include "scope_refine/minic/printer.hpp"

namespace scope_refine::model {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// y = W x + b for a row-major rows x cols block.
void dense(const double* w, const double* b, const std::vector<double>& x, std::size_t rows,
           std::vector<double>& y) {
  const std::size_t cols = x.size();
  y.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc = b[i];
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

struct Trace {
  std::vector<double> x0;
  std::vector<std::vector<double>> pre;  // pre-activation per layer
  std::vector<std::vector<double>> act;  // activation per layer, after dropout
  std::vector<double> logits;
};

void require_features(const TokenizedInput& input) {
  if (input.features.empty()) {
    throw ModelError(ModelErrorKind::EmptyTokenList, "input has no tokens");
  }
}

Trace forward(const ModelHandle& m, const ParamLayout& layout, const TokenizedInput& input,
              double p, std::mt19937_64* rng) {
  require_features(input);
  const std::size_t H = m.spec.hidden_dim;
  const std::size_t L = m.spec.num_layers;
  Trace t;
  t.x0.assign(H, 0.0);
  for (std::uint32_t f : input.features) {
    const double* row = m.params.data() + layout.embedding + static_cast<std::size_t>(f) * H;
    for (std::size_t h = 0; h < H; ++h) t.x0[h] += row[h];
  }
  const double inv = 1.0 / static_cast<double>(input.features.size());
  for (double& v : t.x0) v *= inv;

  t.pre.resize(L);
  t.act.resize(L);
  const std::vector<double>* h = &t.x0;
  for (std::size_t l = 0; l < L; ++l) {
    dense(m.params.data() + layout.layer_w[l], m.params.data() + layout.layer_b[l], *h, H, t.pre[l]);
    t.act[l] = t.pre[l];
    for (double& v : t.act[l]) v = v > 0 ? v : 0.0;
    if (rng) {
      const double scale = 1.0 / (1.0 - p);
      for (double& v : t.act[l]) v = unit_uniform(*rng) < p ? 0.0 : v * scale;
    }
    h = &t.act[l];
  }
  dense(m.params.data() + layout.head_w, m.params.data() + layout.head_b, *h, m.spec.num_classes,
        t.logits);
  return t;
}

ModelOutput output_of(const ModelHandle& m, const ParamLayout& layout, Trace&& t) {
  ModelOutput out;
  out.probs = softmax(t.logits);
  out.logits = std::move(t.logits);
  out.layer_snapshots = std::move(t.act);
  if (m.has_probes()) {
    out.probe_logits.resize(m.spec.num_layers);
    for (std::size_t l = 0; l < m.spec.num_layers; ++l) {
      dense(m.probes.data() + layout.probe_w[l], m.probes.data() + layout.probe_b[l],
            out.layer_snapshots[l], m.spec.num_classes, out.probe_logits[l]);
    }
  }
  return out;
}

void validate_corpus(const std::vector<TrainingExample>& corpus, const ModelSpec& spec) {
  if (corpus.empty()) throw ModelError(ModelErrorKind::EmptyCorpus, "training corpus is empty");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].label >= spec.num_classes) {
      throw ModelError(ModelErrorKind::LabelOutOfRange,
                       "example " + std::to_string(i) + " has label " +
                           std::to_string(corpus[i].label));
    }
    require_features(corpus[i].input);
  }
}

class Adam {
 public:
  Adam(std::size_t n, double lr) : m_(n, 0.0), v_(n, 0.0), lr_(lr) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;
      m_[i] = b1 * m_[i] + (1 - b1) * g;
      v_[i] = b2 * v_[i] + (1 - b2) * g * g;
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double lr_;
  std::uint64_t t_ = 0;
};

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace

std::string_view to_string(ModelErrorKind kind) {
  switch (kind) {
    case ModelErrorKind::InvalidSpec: return "InvalidSpec";
    case ModelErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ModelErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ModelErrorKind::EmptyTokenList: return "EmptyTokenList";
    case ModelErrorKind::KTooSmall: return "KTooSmall";
    case ModelErrorKind::NonpositiveTemperature: return "NonpositiveTemperature";
    case ModelErrorKind::ProbesMissing: return "ProbesMissing";
    case ModelErrorKind::BadModelFile: return "BadModelFile";
  }
  return "?";
}

ModelError::ModelError(ModelErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

void ModelSpec::validate() const {
  auto fail = [](const std::string& what) { throw ModelError(ModelErrorKind::InvalidSpec, what); };
  if (num_layers < 2) fail("num_layers must be >= 2");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (vocab_hash_dim < 1) fail("vocab_hash_dim must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
  const std::size_t H = spec.hidden_dim;
  const std::size_t C = spec.num_classes;
  std::size_t at = 0;
  embedding = at;
  at += spec.vocab_hash_dim * H;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    layer_w.push_back(at);
    at += H * H;
    layer_b.push_back(at);
    at += H;
  }
  head_w = at;
  at += C * H;
  head_b = at;
  at += C;
  total = at;

  at = 0;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    probe_w.push_back(at);
    at += C * H;
    probe_b.push_back(at);
    at += C;
  }
  probe_total = at;
}

std::vector<std::string> source_tokens(const minic::SourceUnit& unit) {
  std::vector<std::string> out;
  for (auto& tok : minic::lex(minic::print_source(unit))) {
    if (tok.kind != minic::TokenKind::End) out.push_back(std::move(tok.text));
  }
  return out;
}

TokenizedInput tokenize(const std::vector<std::string>& tokens, std::size_t vocab_hash_dim) {
  TokenizedInput in;
  in.tokens = tokens;
  in.features.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    in.features.push_back(static_cast<std::uint32_t>(fnv1a(tokens[i]) % vocab_hash_dim));
    if (i + 1 < tokens.size()) {
      // Unit separator keeps ("ab","c") and ("a","bc") apart.
      const std::uint64_t h = fnv1a(tokens[i + 1], fnv1a("\x1f", fnv1a(tokens[i])));
      in.features.push_back(static_cast<std::uint32_t>(h % vocab_hash_dim));
    }
  }
  return in;
}

TokenizedInput tokenize(const minic::SourceUnit& unit, std::size_t vocab_hash_dim) {
  return tokenize(source_tokens(unit), vocab_hash_dim);
}

std::size_t ModelOutput::predicted() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

ModelHandle init_surrogate(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamLayout layout(spec);
  ModelHandle m;
  m.spec = spec;
  m.train_seed = seed;
  m.params.assign(layout.total, 0.0);
  std::mt19937_64 rng(seed);
  const std::size_t H = spec.hidden_dim;
  // Small: buckets no training token reaches keep a near-zero row, so unseen
  // identifiers barely move the pooled vector.
  std::normal_distribution<double> emb(0.0, 0.1);
  for (std::size_t i = 0; i < spec.vocab_hash_dim * H; ++i) m.params[layout.embedding + i] = emb(rng);
  std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(H)));
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    for (std::size_t i = 0; i < H * H; ++i) m.params[layout.layer_w[l] + i] = he(rng);
  }
  std::normal_distribution<double> head(0.0, std::sqrt(1.0 / static_cast<double>(H)));
  for (std::size_t i = 0; i < spec.num_classes * H; ++i) m.params[layout.head_w + i] = head(rng);
  return m;
}

double loss_and_gradient(const ModelHandle& m, const std::vector<TrainingExample>& batch, double l2,
                         std::vector<double>& grad) {
  const ParamLayout layout(m.spec);
  const std::size_t H = m.spec.hidden_dim;
  const std::size_t C = m.spec.num_classes;
  const std::size_t L = m.spec.num_layers;
  grad.assign(layout.total, 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0;

  std::vector<double> dh;
  std::vector<double> dprev;
  for (const auto& ex : batch) {
    Trace t = forward(m, layout, ex.input, 0.0, nullptr);
    const std::vector<double> probs = softmax(t.logits);
    loss -= std::log(std::max(probs[ex.label], 1e-300)) * inv_batch;

    std::vector<double> dlogits(C);
    for (std::size_t c = 0; c < C; ++c) dlogits[c] = (probs[c] - (c == ex.label ? 1.0 : 0.0)) * inv_batch;

    const std::vector<double>& top = t.act[L - 1];
    dh.assign(H, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const double* w = m.params.data() + layout.head_w + c * H;
      double* gw = grad.data() + layout.head_w + c * H;
      for (std::size_t j = 0; j < H; ++j) {
        gw[j] += dlogits[c] * top[j];
        dh[j] += dlogits[c] * w[j];
      }
      grad[layout.head_b + c] += dlogits[c];
    }
    for (std::size_t l = L; l-- > 0;) {
      const std::vector<double>& input = l == 0 ? t.x0 : t.act[l - 1];
      for (std::size_t i = 0; i < H; ++i) {
        if (t.pre[l][i] <= 0) dh[i] = 0;
      }
      dprev.assign(H, 0.0);
      for (std::size_t i = 0; i < H; ++i) {
        if (dh[i] == 0) continue;
        const double* w = m.params.data() + layout.layer_w[l] + i * H;
        double* gw = grad.data() + layout.layer_w[l] + i * H;
        for (std::size_t j = 0; j < H; ++j) {
          gw[j] += dh[i] * input[j];
          dprev[j] += dh[i] * w[j];
        }
        grad[layout.layer_b[l] + i] += dh[i];
      }
      dh.swap(dprev);
    }
    const double inv_n = 1.0 / static_cast<double>(ex.input.features.size());
    for (std::uint32_t f : ex.input.features) {
      double* ge = grad.data() + layout.embedding + static_cast<std::size_t>(f) * H;
      for (std::size_t j = 0; j < H; ++j) ge[j] += dh[j] * inv_n;
    }
  }

  if (l2 > 0) {
    auto decay = [&](std::size_t offset, std::size_t count) {
      for (std::size_t i = offset; i < offset + count; ++i) {
        loss += 0.5 * l2 * m.params[i] * m.params[i];
        grad[i] += l2 * m.params[i];
      }
    };
    for (std::size_t l = 0; l < L; ++l) decay(layout.layer_w[l], H * H);
    decay(layout.head_w, C * H);
  }
  return loss;
}

ModelHandle train_surrogate(const std::vector<TrainingExample>& corpus, const ModelSpec& spec,
                            const TrainConfig& cfg, std::uint64_t seed) {
  spec.validate();
  validate_corpus(corpus, spec);
  ModelHandle m = init_surrogate(spec, seed);
  Adam adam(m.params.size(), cfg.learning_rate);
  std::mt19937_64 rng(seed ^ 0x5eed5eed5eed5eedULL);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_size);
  std::vector<TrainingExample> batch;
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        batch.push_back(corpus[order[i]]);
      }
      loss_and_gradient(m, batch, cfg.l2, grad);
      adam.step(m.params, grad);
    }
  }
  m.train_accuracy = accuracy(m, corpus);
  return m;
}

ModelHandle fit_layer_probes(const ModelHandle& handle, const std::vector<TrainingExample>& corpus,
                             const TrainConfig& cfg) {
  validate_corpus(corpus, handle.spec);
  const ParamLayout layout(handle.spec);
  const std::size_t H = handle.spec.hidden_dim;
  const std::size_t C = handle.spec.num_classes;
  const std::size_t L = handle.spec.num_layers;

  std::vector<std::vector<std::vector<double>>> snaps;  // example -> layer -> H
  snaps.reserve(corpus.size());
  for (const auto& ex : corpus) snaps.push_back(forward(handle, layout, ex.input, 0.0, nullptr).act);

  ModelHandle out = handle;
  out.probes.assign(layout.probe_total, 0.0);
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_size);
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> w(C * H + C, 0.0);  // W then b
    std::vector<double> grad(w.size());
    Adam adam(w.size(), cfg.probe_learning_rate);
    std::mt19937_64 rng(handle.train_seed ^ (0x9b0be5ULL + l));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> logits;
    for (std::size_t epoch = 0; epoch < cfg.probe_epochs; ++epoch) {
      shuffle(order, rng);
      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        const double inv = 1.0 / static_cast<double>(end - start);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = start; i < end; ++i) {
          const auto& x = snaps[order[i]][l];
          dense(w.data(), w.data() + C * H, x, C, logits);
          const auto p = softmax(logits);
          for (std::size_t c = 0; c < C; ++c) {
            const double d = (p[c] - (c == corpus[order[i]].label ? 1.0 : 0.0)) * inv;
            for (std::size_t j = 0; j < H; ++j) grad[c * H + j] += d * x[j];
            grad[C * H + c] += d;
          }
        }
        for (std::size_t i = 0; i < C * H; ++i) grad[i] += cfg.l2 * w[i];
        adam.step(w, grad);
      }
    }
    std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(C * H),
              out.probes.begin() + static_cast<std::ptrdiff_t>(layout.probe_w[l]));
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(C * H), w.end(),
              out.probes.begin() + static_cast<std::ptrdiff_t>(layout.probe_b[l]));
  }
  return out;
}

ModelOutput infer(const ModelHandle& handle, const TokenizedInput& input) {
  const ParamLayout layout(handle.spec);
  return output_of(handle, layout, forward(handle, layout, input, 0.0, nullptr));
}

ModelOutput infer_with_dropout(const ModelHandle& handle, const TokenizedInput& input, double p,
                               std::uint64_t dropout_seed) {
  const ParamLayout layout(handle.spec);
  std::mt19937_64 rng(dropout_seed);
  return output_of(handle, layout, forward(handle, layout, input, p, &rng));
}

std::vector<SubmodelSample> infer_submodels(const ModelHandle& handle, const TokenizedInput& input,
                                            std::size_t k, std::uint64_t base_seed) {
  if (k < 2) throw ModelError(ModelErrorKind::KTooSmall, "k must be >= 2");
  require_features(input);
  std::vector<SubmodelSample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint64_t seed = base_seed + i;
    out.push_back({seed, infer_with_dropout(handle, input, handle.spec.dropout_rate, seed)});
  }
  return out;
}

std::vector<double> softmax_with_temperature(const std::vector<double>& logits, double temperature) {
  if (!(temperature > 0)) {
    throw ModelError(ModelErrorKind::NonpositiveTemperature, "temperature must be positive");
  }
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
  return softmax(scaled);
}

double accuracy(const ModelHandle& handle, const std::vector<TrainingExample>& corpus) {
  if (corpus.empty()) return 0;
  std::size_t hits = 0;
  for (const auto& ex : corpus) hits += infer(handle, ex.input).predicted() == ex.label;
  return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

std::vector<double> probe_accuracy(const ModelHandle& handle,
                                   const std::vector<TrainingExample>& corpus) {
  if (!handle.has_probes()) throw ModelError(ModelErrorKind::ProbesMissing, "probes not fitted");
  std::vector<double> hits(handle.spec.num_layers, 0.0);
  for (const auto& ex : corpus) {
    const ModelOutput out = infer(handle, ex.input);
    for (std::size_t l = 0; l < hits.size(); ++l) {
      const auto& pl = out.probe_logits[l];
      const auto best = static_cast<std::size_t>(std::max_element(pl.begin(), pl.end()) - pl.begin());
      hits[l] += best == ex.label;
    }
  }
  for (double& h : hits) h /= static_cast<double>(std::max<std::size_t>(1, corpus.size()));
  return hits;
}

}  // namespace scope_refine::model
