#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "scope_refine/minic/parser.hpp"
#include "scope_refine/model/classifier.hpp"
#include "scope_refine/model/protocol.hpp"
#include "support/fixtures.hpp"

using namespace scope_refine;
using namespace scope_refine::model;
using nlohmann::json;

namespace {

ModelHandle probed_model(double dropout = 0.1) {
  ModelSpec spec;
  spec.num_layers = 3;
  spec.hidden_dim = 12;
  spec.vocab_hash_dim = 128;
  spec.dropout_rate = dropout;
  std::vector<TrainingExample> corpus;
  for (const auto& [name, source] : testing::fixture_programs()) {
    corpus.push_back({tokenize(minic::parse(source), spec.vocab_hash_dim), corpus.size() % 2});
  }
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.probe_epochs = 3;
  return fit_layer_probes(train_surrogate(corpus, spec, cfg, 5), corpus, cfg);
}

std::vector<std::string> loops_tokens() {
  return source_tokens(minic::parse(testing::read_file(SR_FIXTURE_DIR "/programs/loops.mc")));
}

// Serves `backend` through `rewrite(response)` on a loopback port.
struct TestServer {
  LineServer server;
  explicit TestServer(Classifier& backend, std::function<json(json)> rewrite = [](json j) { return j; })
      : server({"127.0.0.1", 0}, [&backend, rewrite](const std::string& line) {
          return rewrite(json::parse(protocol::handle_request(line, backend))).dump();
        }) {
    server.start_background();
  }
  std::string endpoint() const { return "127.0.0.1:" + std::to_string(server.port()); }
};

const protocol::CheckResult& named(const std::vector<protocol::CheckResult>& results, const std::string& name) {
  for (const auto& r : results) {
    if (r.name == name) return r;
  }
  FAIL("no check named " << name);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("endpoint parsing") {
  CHECK(parse_endpoint("localhost:8080").host == "localhost");
  CHECK(parse_endpoint("localhost:8080").port == 8080);
  CHECK(parse_endpoint(":9").host == "127.0.0.1");
  CHECK(parse_endpoint("9").port == 9);
  CHECK_THROWS_AS(parse_endpoint("host:"), NetError);
  CHECK_THROWS_AS(parse_endpoint("host:70000"), NetError);
  CHECK_THROWS_AS(parse_endpoint("host:12x"), NetError);
}

TEST_CASE("handle_request answers every line") {
  SurrogateClassifier backend(probed_model());
  const auto tokens = loops_tokens();

  SUBCASE("infer echoes the id and encodes the output") {
    const json r = json::parse(protocol::handle_request(
        json{{"id", 77}, {"op", "infer"}, {"tokens", tokens}, {"ignored", {1, 2}}}.dump(), backend));
    CHECK(r["id"] == 77);
    CHECK(protocol::decode_output(r) == backend.infer(tokens));
  }
  SUBCASE("string ids are echoed verbatim") {
    const json r = json::parse(
        protocol::handle_request(json{{"id", "abc"}, {"op", "infer"}, {"tokens", tokens}}.dump(), backend));
    CHECK(r["id"] == "abc");
  }
  SUBCASE("submodels carry their dropout seeds") {
    const json r = json::parse(protocol::handle_request(
        json{{"id", 1}, {"op", "infer_submodels"}, {"tokens", tokens}, {"k", 4}, {"base_seed", 100}}.dump(),
        backend));
    REQUIRE(r["samples"].size() == 4);
    const auto local = backend.infer_submodels(tokens, 4, 100);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r["samples"][i]["dropout_seed"] == 100 + i);
      CHECK(protocol::decode_output(r["samples"][i]) == local[i].output);
    }
  }
  SUBCASE("errors") {
    auto error_of = [&](const std::string& line) {
      const json r = json::parse(protocol::handle_request(line, backend));
      REQUIRE(r.contains("error"));
      return r;
    };
    const json k1 = error_of(json{{"id", 3}, {"op", "infer_submodels"}, {"tokens", tokens}, {"k", 1}}.dump());
    CHECK(k1["error"] == "k must be >= 2");
    CHECK(k1["id"] == 3);
    CHECK(error_of("{not json")["id"].is_null());
    CHECK(error_of("[1,2]")["id"].is_null());
    CHECK(error_of(json{{"id", 4}, {"op", "train"}, {"tokens", tokens}}.dump())["id"] == 4);
    CHECK(error_of(json{{"id", 5}, {"op", "infer"}, {"tokens", json::array()}}.dump())["id"] == 5);
    error_of(json{{"id", 6}, {"op", "infer"}, {"tokens", {1, 2}}}.dump());
    error_of(json{{"id", 7}, {"op", "infer_submodels"}, {"tokens", tokens}}.dump());
    error_of(json{{"id", 8}, {"op", "infer_submodels"}, {"tokens", tokens}, {"k", 3}, {"base_seed", -1}}.dump());
  }
}

TEST_CASE("serve_stream answers one line per line") {
  SurrogateClassifier backend(probed_model());
  std::istringstream in(json{{"id", 1}, {"op", "infer"}, {"tokens", loops_tokens()}}.dump() + "\r\nnope\n");
  std::ostringstream out;
  protocol::serve_stream(in, out, backend);
  std::istringstream lines(out.str());
  std::string a, b, c;
  REQUIRE(std::getline(lines, a));
  REQUIRE(std::getline(lines, b));
  CHECK_FALSE(std::getline(lines, c));
  CHECK(json::parse(a)["id"] == 1);
  CHECK(json::parse(b).contains("error"));
}

TEST_CASE("remote classifier matches the local surrogate over TCP") {
  SurrogateClassifier local(probed_model());
  TestServer server(local);
  RemoteClassifier remote(server.endpoint());
  const auto tokens = loops_tokens();
  CHECK(remote.infer(tokens) == local.infer(tokens));
  CHECK(remote.infer_submodels(tokens, 5, 42) == local.infer_submodels(tokens, 5, 42));
  CHECK_THROWS_AS(remote.infer_submodels(tokens, 1, 0), ModelError);
  CHECK_THROWS_AS(remote.infer({}), RemoteError);
  CHECK(remote.infer(tokens) == local.infer(tokens));  // connection survives a server error
}

TEST_CASE("zero dropout collapses sub-models onto infer through the remote path") {
  SurrogateClassifier local(probed_model(0.0));
  TestServer server(local);
  RemoteClassifier remote(server.endpoint());
  const auto tokens = loops_tokens();
  const ModelOutput base = remote.infer(tokens);
  for (const auto& s : remote.infer_submodels(tokens, 6, 9)) CHECK(s.output == base);
}

TEST_CASE("remote errors") {
  SUBCASE("nothing listening") {
    std::uint16_t port = 0;
    {
      LineServer closed({"127.0.0.1", 0}, [](const std::string& l) { return l; });
      port = closed.port();
    }
    RemoteClassifier remote("127.0.0.1:" + std::to_string(port));
    try {
      remote.infer({"int"});
      FAIL("expected RemoteError");
    } catch (const RemoteError& e) {
      CHECK(e.kind() == RemoteErrorKind::ConnectionFailed);
    }
  }
  SUBCASE("wrong id") {
    SurrogateClassifier local(probed_model());
    TestServer server(local, [](json j) {
      j["id"] = 999;
      return j;
    });
    RemoteClassifier remote(server.endpoint());
    try {
      remote.infer(loops_tokens());
      FAIL("expected RemoteError");
    } catch (const RemoteError& e) {
      CHECK(e.kind() == RemoteErrorKind::SchemaViolation);
    }
  }
}

TEST_CASE("endpoint from environment") {
  ::unsetenv(kEndpointEnvVar);
  CHECK_FALSE(endpoint_from_env().has_value());
  ::setenv(kEndpointEnvVar, "", 1);
  CHECK_FALSE(endpoint_from_env().has_value());
  ::setenv(kEndpointEnvVar, "127.0.0.1:1234", 1);
  CHECK(endpoint_from_env() == std::optional<std::string>("127.0.0.1:1234"));
  ::unsetenv(kEndpointEnvVar);
}

TEST_CASE("check_protocol passes the built-in surrogate") {
  SurrogateClassifier local(probed_model());
  TestServer server(local);
  const auto results = protocol::check_protocol(server.endpoint());
  for (const auto& r : results) CHECK_MESSAGE(r.passed, r.name << ": " << r.detail);
  CHECK(results.size() == 12);
  CHECK(protocol::all_passed(results));
}

TEST_CASE("check_protocol flags faulty servers") {
  SurrogateClassifier local(probed_model());

  SUBCASE("unreachable") {
    const auto results = protocol::check_protocol("127.0.0.1:1");
    REQUIRE(results.size() == 1);
    CHECK(results[0].name == "connect");
    CHECK_FALSE(results[0].passed);
  }
  SUBCASE("dropped id") {
    TestServer server(local, [](json j) {
      j.erase("id");
      return j;
    });
    const auto results = protocol::check_protocol(server.endpoint());
    CHECK_FALSE(named(results, "id-echo").passed);
    CHECK_FALSE(named(results, "k-too-small").passed);
    CHECK(named(results, "normalization").passed);
    CHECK_FALSE(protocol::all_passed(results));
  }
  SUBCASE("unnormalized probabilities") {
    TestServer server(local, [](json j) {
      if (j.contains("probs")) j["probs"][0] = j["probs"][0].get<double>() + 0.01;
      return j;
    });
    const auto results = protocol::check_protocol(server.endpoint());
    CHECK_FALSE(named(results, "normalization").passed);
    CHECK(named(results, "id-echo").passed);
    CHECK(named(results, "shape-consistency").passed);
  }
  SUBCASE("missing probes") {
    SurrogateClassifier bare(init_surrogate(local.handle().spec, 1));
    TestServer server(bare);
    const auto results = protocol::check_protocol(server.endpoint());
    CHECK_FALSE(named(results, "shape-consistency").passed);
    CHECK(named(results, "infer-schema").passed);
  }
  SUBCASE("nondeterministic sub-models") {
    int calls = 0;
    TestServer server(local, [&calls](json j) {
      if (j.contains("samples")) j["samples"][0]["logits"][0] = j["samples"][0]["logits"][0].get<double>() + ++calls;
      return j;
    });
    const auto results = protocol::check_protocol(server.endpoint());
    CHECK_FALSE(named(results, "submodels-determinism").passed);
    CHECK(named(results, "infer-determinism").passed);
  }
}
