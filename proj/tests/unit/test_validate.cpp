#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/validate/validate.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace scope_refine;
using namespace scope_refine::validate;
using model::ModelOutput;
using model::SubmodelSample;

namespace {

// Probe logits log(q) give probe probabilities exactly q.
std::vector<double> logs(const std::vector<double>& q) {
  std::vector<double> out;
  for (double x : q) out.push_back(std::log(x));
  return out;
}

ModelOutput output(std::vector<double> probs, std::vector<std::vector<double>> probe_probs = {}) {
  ModelOutput o;
  o.logits = logs(probs);
  o.probs = std::move(probs);
  for (const auto& q : probe_probs) o.probe_logits.push_back(logs(q));
  return o;
}

SubmodelSample sample(std::vector<double> probs, std::vector<std::vector<double>> probe_probs,
                      std::uint64_t seed = 0) {
  return {seed, output(std::move(probs), std::move(probe_probs))};
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0;
  for (double& x : p) s += x = e(rng) + 1e-9;
  for (double& x : p) x /= s;
  return p;
}

std::vector<SubmodelSample> random_samples(std::mt19937_64& rng, std::size_t k, std::size_t c, std::size_t l) {
  std::vector<SubmodelSample> out;
  std::normal_distribution<double> g(0, 2);
  for (std::size_t i = 0; i < k; ++i) {
    SubmodelSample s;
    s.dropout_seed = i;
    s.output.probs = random_simplex(rng, c);
    for (std::size_t j = 0; j < l; ++j) {
      std::vector<double> z(c);
      for (double& x : z) x = g(rng);
      s.output.probe_logits.push_back(z);
    }
    out.push_back(s);
  }
  return out;
}

model::ModelHandle probed_model(double p) {
  model::ModelSpec spec;
  spec.num_layers = 3;
  spec.hidden_dim = 16;
  spec.vocab_hash_dim = 256;
  spec.dropout_rate = p;
  std::vector<model::TrainingExample> corpus;
  for (const auto& [name, source] : testing::fixture_programs()) {
    corpus.push_back({model::tokenize(minic::parse(source), spec.vocab_hash_dim), corpus.size() % 2});
  }
  model::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.probe_epochs = 5;
  return model::fit_layer_probes(model::train_surrogate(corpus, spec, cfg, 3), corpus, cfg);
}

}  // namespace

TEST_CASE("dsmg examples") {
  SUBCASE("perfect consistency") {
    const auto s = sample({1, 0}, {{1, 1e-300}, {1, 1e-300}, {1, 1e-300}});
    const auto score = dsmg_score({s, s, s});
    CHECK(score.variance_term == 0);
    CHECK(score.distance_term <= 1e-12);
    CHECK(score.combined == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("maximal disagreement") {
    const auto score = dsmg_score({sample({1, 0}, {{0.5, 0.5}, {0.5, 0.5}}), sample({0, 1}, {{0.5, 0.5}, {0.5, 0.5}})});
    CHECK(score.variance_term == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(score.distance_term == doctest::Approx(0.5));
    CHECK(score.consensus_class == 0);  // tie on the mean goes to the lower class
    CHECK(score.combined == doctest::Approx(0.25));
  }
  SUBCASE("layer weights are linear in depth") {
    CHECK(default_layer_weights(4) == std::vector<double>{0.1, 0.2, 0.3, 0.4});
    // Only the last layer disagrees with the consensus.
    const auto s = sample({0.9, 0.1}, {{1, 1e-300}, {1, 1e-300}, {1e-300, 1}});
    CHECK(dsmg_score({s, s}).distance_term == doctest::Approx(0.5));
    CHECK(dsmg_score({s, s}, {}, {0.5, 0.5, 0.0}).distance_term == doctest::Approx(0.0).scale(1e-12));
  }
}

TEST_CASE("dsmg errors") {
  const auto s = sample({0.6, 0.4}, {{0.5, 0.5}, {0.5, 0.5}});
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const ValidateError& e) {
      return std::optional(e.kind());
    }
    return std::optional<ValidateErrorKind>();
  };
  CHECK(kind_of([&] { dsmg_score({s}); }) == ValidateErrorKind::TooFewSamples);
  CHECK(kind_of([&] { dsmg_score({s, sample({0.2, 0.3, 0.5}, {{0.5, 0.5}, {0.5, 0.5}})}); }) ==
        ValidateErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { dsmg_score({s, sample({0.6, 0.4}, {{0.5, 0.5}})}); }) == ValidateErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { dsmg_score({s, SubmodelSample{1, output({0.6, 0.4})}}); }) == ValidateErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { dsmg_score({s, s}, {0.7, 0.7}); }) == ValidateErrorKind::InvalidWeights);
  CHECK(kind_of([&] { dsmg_score({s, s}, {1.5, -0.5}); }) == ValidateErrorKind::InvalidWeights);
  CHECK(kind_of([&] { dsmg_score({s, s}, {}, {1.0}); }) == ValidateErrorKind::ShapeMismatch);
  CHECK(kind_of([&] { dsmg_score({s, s}, {}, {0.6, 0.6}); }) == ValidateErrorKind::InvalidWeights);
}

TEST_CASE("dsmg matches the straight-line oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 30, c = 2 + rng() % 4, l = 2 + rng() % 5;
    const auto samples = random_samples(rng, k, c, l);
    const double w = (rng() % 11) / 10.0;
    const auto got = dsmg_score(samples, {w, 1 - w});
    double v = 0, d = 0;
    const double want = testing::oracle::dsmg_combined(samples, w, 1 - w, &v, &d);
    CHECK(std::abs(got.combined - want) <= 1e-12);
    CHECK(std::abs(got.variance_term - v) <= 1e-12);
    CHECK(std::abs(got.distance_term - d) <= 1e-12);
    CHECK(got.combined >= 0);
    CHECK(got.combined <= 1);
  }
}

TEST_CASE("dsmg on the surrogate matches the oracle and degenerates at p = 0") {
  const auto handle = probed_model(0.1);
  model::SurrogateClassifier classifier(handle);
  for (const auto& [name, source] : testing::fixture_programs()) {
    const auto tokens = model::source_tokens(minic::parse(source));
    for (std::uint64_t base : {0u, 1000u}) {
      const auto samples = classifier.infer_submodels(tokens, 30, base);
      const auto got = dsmg_score(samples);
      CHECK(std::abs(got.combined - testing::oracle::dsmg_combined(samples, 0.5, 0.5)) <= 1e-12);
      CHECK(score_input(classifier, tokens, {30, base, {}, {}}).combined == got.combined);
    }
  }
  model::SurrogateClassifier still(probed_model(0.0));
  for (const auto& [name, source] : testing::fixture_programs()) {
    CHECK(score_input(still, model::source_tokens(minic::parse(source)), {}).variance_term == 0);
  }
}

TEST_CASE("dsmg properties") {
  std::mt19937_64 rng(99);
  SUBCASE("permutation invariance") {
    for (int trial = 0; trial < 100; ++trial) {
      auto samples = random_samples(rng, 2 + rng() % 10, 2 + rng() % 3, 2 + rng() % 3);
      const auto before = dsmg_score(samples);
      std::shuffle(samples.begin(), samples.end(), rng);
      const auto after = dsmg_score(samples);
      CHECK(after.combined == doctest::Approx(before.combined).epsilon(1e-12));
      CHECK(after.consensus_class == before.consensus_class);
    }
  }
  SUBCASE("variance_term vanishes exactly when all final distributions agree") {
    for (int trial = 0; trial < 100; ++trial) {
      auto samples = random_samples(rng, 2 + rng() % 10, 3, 2);
      for (auto& s : samples) s.output.probs = samples[0].output.probs;
      CHECK(dsmg_score(samples).variance_term <= 1e-12);
      samples.back().output.probs = random_simplex(rng, 3);
      CHECK(dsmg_score(samples).variance_term > 1e-12);
    }
  }
  SUBCASE("distance_term vanishes exactly when every probe is certain of the consensus") {
    auto certain = random_samples(rng, 5, 3, 3);
    for (auto& s : certain) {
      s.output.probs = {0.2, 0.7, 0.1};
      for (auto& z : s.output.probe_logits) z = {0, 800, 0};
    }
    CHECK(dsmg_score(certain).distance_term <= 1e-12);
    certain[2].output.probe_logits[0] = {0, 800, 800};
    CHECK(dsmg_score(certain).distance_term > 1e-12);
  }
  SUBCASE("orientation: concentrating on the consensus never lowers the score") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t c = 2 + rng() % 3;
      auto samples = random_samples(rng, 2 + rng() % 8, c, 3);
      for (auto& s : samples) {
        for (auto& z : s.output.probe_logits) z = logs(random_simplex(rng, c));
      }
      const auto base = dsmg_score(samples);
      double previous = base.combined;
      for (double lambda : {0.1, 0.3, 0.6, 0.9}) {
        auto moved = samples;
        for (auto& s : moved) {
          for (std::size_t j = 0; j < c; ++j) {
            s.output.probs[j] = (1 - lambda) * samples[&s - &moved[0]].output.probs[j] +
                                lambda * (j == base.consensus_class ? 1.0 : 0.0);
          }
          for (std::size_t l = 0; l < s.output.probe_logits.size(); ++l) {
            const auto q = model::softmax_with_temperature(samples[&s - &moved[0]].output.probe_logits[l], 1.0);
            std::vector<double> mixed(c);
            for (std::size_t j = 0; j < c; ++j) {
              mixed[j] = (1 - lambda) * q[j] + lambda * (j == base.consensus_class ? 1.0 : 0.0);
            }
            s.output.probe_logits[l] = logs(mixed);
          }
        }
        const auto score = dsmg_score(moved);
        CHECK(score.consensus_class == base.consensus_class);
        CHECK(score.combined >= previous - 1e-12);
        previous = score.combined;
      }
    }
  }
}

TEST_CASE("uncertainty metric examples") {
  Evidence uniform;
  uniform.output = output({0.5, 0.5});
  CHECK(uncertainty(UncertaintyMetricId::Entropy, uniform).raw == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(uncertainty(UncertaintyMetricId::Entropy, uniform).raw - std::log(2.0)) <= 1e-12);
  CHECK(uncertainty(UncertaintyMetricId::Entropy, uniform).score == doctest::Approx(0).scale(1e-12));

  Evidence skewed;
  skewed.output = output({0.9, 0.1});
  CHECK(uncertainty(UncertaintyMetricId::MarginConfidence, skewed).score == doctest::Approx(0.8));
  CHECK(uncertainty(UncertaintyMetricId::RatioConfidence, skewed).score == doctest::Approx(1 - 1.0 / 9));
  CHECK(uncertainty(UncertaintyMetricId::RatioConfidence, skewed).raw == doctest::Approx(1.0 / 9));
  CHECK(uncertainty(UncertaintyMetricId::Vanilla, skewed).score == doctest::Approx(0.9));
  CHECK(uncertainty(UncertaintyMetricId::LeastConfidence, skewed).raw == doctest::Approx(0.1));
  CHECK(uncertainty(UncertaintyMetricId::LeastConfidence, skewed).score == doctest::Approx(0.9));

  Evidence same;
  same.samples = {output({0.7, 0.2, 0.1}), output({0.7, 0.2, 0.1}), output({0.7, 0.2, 0.1})};
  CHECK(std::abs(uncertainty(UncertaintyMetricId::MutualInformation, same).raw) <= 1e-12);
  CHECK(uncertainty(UncertaintyMetricId::MCDropoutVariance, same).raw == 0);
  CHECK(uncertainty(UncertaintyMetricId::MCDropoutVariance, same).score == 0.25);
  CHECK(uncertainty(UncertaintyMetricId::PredictiveEntropy, same).raw ==
        doctest::Approx(entropy({0.7, 0.2, 0.1})));

  Evidence split;
  split.samples = {output({1 - 1e-15, 1e-15}), output({1e-15, 1 - 1e-15})};
  CHECK(uncertainty(UncertaintyMetricId::MutualInformation, split).raw == doctest::Approx(std::log(2.0)));
  CHECK(uncertainty(UncertaintyMetricId::MCDropoutVariance, split).raw == doctest::Approx(0.25));

  Evidence ensemble;
  ensemble.ensemble = {output({0.9, 0.1}), output({0.5, 0.5}), output({0.7, 0.3})};
  CHECK(uncertainty(UncertaintyMetricId::DeepEnsemble, ensemble).raw == doctest::Approx(entropy({0.7, 0.3})));
}

TEST_CASE("temperature one equals vanilla") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    ModelOutput o;
    o.logits.resize(2 + rng() % 5);
    for (double& x : o.logits) x = g(rng);
    o.probs = model::softmax_with_temperature(o.logits, 1.0);
    Evidence e;
    e.output = o;
    e.temperature = 1.0;
    CHECK(std::abs(uncertainty_score(UncertaintyMetricId::TemperatureScaled, e) -
                   uncertainty_score(UncertaintyMetricId::Vanilla, e)) <= 1e-12);
    e.temperature = 3.0;
    CHECK(uncertainty_score(UncertaintyMetricId::TemperatureScaled, e) <=
          uncertainty_score(UncertaintyMetricId::Vanilla, e) + 1e-12);
  }
}

TEST_CASE("uncertainty metrics reject the wrong evidence") {
  Evidence single;
  single.output = output({0.6, 0.4});
  Evidence samples;
  samples.samples = {output({0.6, 0.4}), output({0.5, 0.5})};
  for (auto id : kAllUncertaintyMetrics) {
    CAPTURE(to_string(id));
    CHECK(metric_from_name(to_string(id)) == id);
    const Evidence& right = evidence_kind(id) == EvidenceKind::Single ? single : samples;
    if (evidence_kind(id) != EvidenceKind::Ensemble) CHECK_NOTHROW(uncertainty(id, right));
    const Evidence& wrong = evidence_kind(id) == EvidenceKind::Single ? samples : single;
    CHECK_THROWS_AS(uncertainty(id, wrong), ValidateError);
  }
  Evidence one_sample;
  one_sample.samples = {output({0.6, 0.4})};
  CHECK_THROWS_AS(uncertainty(UncertaintyMetricId::MutualInformation, one_sample), ValidateError);
  CHECK_FALSE(metric_from_name("dsmg").has_value());
}

TEST_CASE("orientation law for the baseline metrics") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng() % 4;
    const auto p = random_simplex(rng, c);
    std::vector<std::vector<double>> sample_probs;
    for (int k = 0; k < 4; ++k) sample_probs.push_back(random_simplex(rng, c));

    auto evidence_at = [&](double lambda, std::size_t y_single, std::size_t y_samples) {
      auto mix = [&](const std::vector<double>& q, std::size_t y) {
        std::vector<double> m(c);
        for (std::size_t j = 0; j < c; ++j) m[j] = (1 - lambda) * q[j] + lambda * (j == y ? 1.0 : 0.0);
        return output(m);
      };
      Evidence e;
      e.output = mix(p, y_single);
      e.temperature = 2.0;
      for (const auto& q : sample_probs) e.samples.push_back(mix(q, y_samples));
      e.ensemble = e.samples;
      return e;
    };
    const std::size_t y = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    std::vector<double> mean(c, 0.0);
    for (const auto& q : sample_probs) {
      for (std::size_t j = 0; j < c; ++j) mean[j] += q[j];
    }
    const std::size_t ys = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());

    for (auto id : kAllUncertaintyMetrics) {
      // MI can rise as sub-models move to the consensus at different speeds;
      // it is monotone only for identical samples, checked below.
      if (id == UncertaintyMetricId::MutualInformation) continue;
      CAPTURE(to_string(id));
      double previous = uncertainty_score(id, evidence_at(0, y, ys));
      for (double lambda : {0.1, 0.25, 0.5, 0.75, 0.99}) {
        const double now = uncertainty_score(id, evidence_at(lambda, y, ys));
        CHECK(now >= previous - 1e-12);
        previous = now;
      }
    }
  }
}

TEST_CASE("temperature calibration picks the grid NLL minimiser") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  SUBCASE("overconfident logits prefer a high temperature") {
    std::vector<LabelledLogits> set;
    for (int i = 0; i < 200; ++i) {
      const std::size_t label = rng() % 2;
      const double signal = (rng() % 10 < 6 ? 1.0 : -1.0) * 8.0;  // right 60% of the time, very sure
      set.push_back({{label == 0 ? signal : -signal, label == 0 ? -signal : signal}, label});
    }
    const double t = calibrate_temperature(set);
    for (double other : kTemperatureGrid) {
      CHECK(negative_log_likelihood(set, t) <= negative_log_likelihood(set, other));
    }
    CHECK(t == 5.0);
  }
  SUBCASE("exact minimiser and tie order") {
    std::vector<LabelledLogits> set;
    for (int i = 0; i < 50; ++i) set.push_back({{g(rng), g(rng), g(rng)}, rng() % 3});
    const double t = calibrate_temperature(set);
    double best = 1e300;
    double want = 0;
    for (double other : kTemperatureGrid) {
      if (negative_log_likelihood(set, other) < best) {
        best = negative_log_likelihood(set, other);
        want = other;
      }
    }
    CHECK(t == want);
    CHECK(calibrate_temperature({{{0.0, 0.0}, 1}}) == 0.5);  // every temperature ties
  }
  CHECK_THROWS_AS(calibrate_temperature({}), ValidateError);
}

TEST_CASE("threshold calibration examples") {
  const std::vector<ScoredOutcome> separable = {{0.9, true}, {0.8, true}, {0.2, false}, {0.1, false}};
  CHECK(calibrate_threshold(separable, {0.5, CalibrationMode::Youden}) == 0.8);
  CHECK(calibrate_threshold(separable, {0.5, CalibrationMode::MvrBudget, 0.0}) == 0.8);
  CHECK(calibrate_threshold(separable, {0.5, CalibrationMode::MvrBudget, 0.5}) == 0.9);
  CHECK(calibrate_threshold(separable, {0.37, CalibrationMode::Fixed}) == 0.37);

  const std::vector<ScoredOutcome> all_correct = {{0.9, true}, {0.4, true}};
  CHECK(calibrate_threshold(all_correct, {0.5, CalibrationMode::MvrBudget, 0.5}) == 0.0);
  CHECK(calibrate_threshold(all_correct, {0.5, CalibrationMode::Youden}) == 0.0);

  // An incorrect input above every correct one cannot be flagged without
  // flagging all correct ones, so a zero budget stops below it.
  const std::vector<ScoredOutcome> inverted = {{0.95, false}, {0.6, true}, {0.5, true}, {0.3, false}};
  CHECK(calibrate_threshold(inverted, {0.5, CalibrationMode::MvrBudget, 0.0}) == 0.5);
  CHECK(calibrate_threshold(inverted, {0.5, CalibrationMode::MvrBudget, 1.0}) ==
        std::nextafter(0.95, 2.0));

  CHECK_THROWS_AS(calibrate_threshold({}, {}), ValidateError);
  CHECK_THROWS_AS(calibrate_threshold({{0.3, false}}, {}), ValidateError);
}

TEST_CASE("threshold calibration matches exhaustive cut enumeration") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 300) {
    const std::size_t n = 2 + rng() % 99;
    std::vector<ScoredOutcome> set;
    const bool coarse = rng() % 2 == 0;  // coarse scores force ties
    for (std::size_t i = 0; i < n; ++i) {
      const bool correct = rng() % 3 != 0;
      double s = std::uniform_real_distribution<double>(0, 1)(rng);
      if (correct) s = std::min(1.0, s + 0.2);
      if (coarse) s = std::round(s * 10) / 10;
      set.push_back({s, correct});
    }
    const bool both = std::any_of(set.begin(), set.end(), [](auto& s) { return s.correct; }) &&
                      std::any_of(set.begin(), set.end(), [](auto& s) { return !s.correct; });
    if (!both) continue;
    ++checked;
    CHECK(calibrate_threshold(set, {0, CalibrationMode::Youden}) == testing::oracle::youden_threshold(set));
    for (double b : {0.0, 0.05, 0.2, 1.0}) {
      CHECK(calibrate_threshold(set, {0, CalibrationMode::MvrBudget, b}) ==
            testing::oracle::mvr_budget_threshold(set, b));
    }
  }
}

TEST_CASE("classify_input is boundary inclusive") {
  CHECK(classify_input(0.9, 0.5).verdict == Verdict::InScope);
  CHECK(classify_input(0.5, 0.5).verdict == Verdict::InScope);
  CHECK(classify_input(0.49, 0.5).verdict == Verdict::OutOfScope);
  CHECK(classify_input(0.49, 0.5).score == 0.49);
  CHECK(classify_input(0.3, 0.1, {false, UncertaintyMetricId::Entropy}).metric.name() == "entropy");
  CHECK(MetricTag{}.name() == "dsmg");
}
