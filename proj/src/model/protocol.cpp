#include "scope_refine/model/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>

namespace scope_refine::model::protocol {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& what) {
  throw RemoteError(RemoteErrorKind::SchemaViolation, what);
}

std::vector<double> numbers(const json& j, const char* field) {
  if (!j.is_array()) violation(std::string(field) + " is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) violation(std::string(field) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> rows(const json& j, const char* field) {
  if (!j.is_array()) violation(std::string(field) + " is not an array");
  std::vector<std::vector<double>> out;
  for (const auto& r : j) out.push_back(numbers(r, field));
  return out;
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) violation(std::string("missing field ") + name);
  return j[name];
}

json error_response(const json& id, const std::string& message) {
  return json{{"id", id}, {"error", message}};
}

}  // namespace

json encode_output(const ModelOutput& output) {
  return json{{"logits", output.logits},
              {"probs", output.probs},
              {"layers", output.layer_snapshots},
              {"probe_logits", output.probe_logits}};
}

ModelOutput decode_output(const json& j) {
  ModelOutput out;
  out.logits = numbers(field(j, "logits"), "logits");
  out.probs = numbers(field(j, "probs"), "probs");
  out.layer_snapshots = rows(field(j, "layers"), "layers");
  out.probe_logits = rows(field(j, "probe_logits"), "probe_logits");
  return out;
}

std::string handle_request(const std::string& line, Classifier& backend) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error&) {
    return error_response(nullptr, "malformed request: not JSON").dump();
  }
  if (!request.is_object()) return error_response(nullptr, "malformed request: not an object").dump();
  const json id = request.contains("id") ? request["id"] : json(nullptr);
  try {
    if (!request.contains("op") || !request["op"].is_string()) {
      return error_response(id, "missing op").dump();
    }
    const std::string op = request["op"];
    if (!request.contains("tokens") || !request["tokens"].is_array() || request["tokens"].empty() ||
        !std::all_of(request["tokens"].begin(), request["tokens"].end(),
                     [](const json& t) { return t.is_string(); })) {
      return error_response(id, "tokens must be a non-empty array of strings").dump();
    }
    const auto tokens = request["tokens"].get<std::vector<std::string>>();
    if (op == "infer") {
      json response = encode_output(backend.infer(tokens));
      response["id"] = id;
      return response.dump();
    }
    if (op == "infer_submodels") {
      if (!request.contains("k") || !request["k"].is_number_integer()) {
        return error_response(id, "k must be an integer").dump();
      }
      if (request["k"].get<std::int64_t>() < 2) return error_response(id, "k must be >= 2").dump();
      std::uint64_t base_seed = 0;
      if (request.contains("base_seed")) {
        if (!request["base_seed"].is_number_unsigned()) {
          return error_response(id, "base_seed must be a non-negative integer").dump();
        }
        base_seed = request["base_seed"].get<std::uint64_t>();
      }
      const auto k = request["k"].get<std::size_t>();
      json samples = json::array();
      for (const auto& s : backend.infer_submodels(tokens, k, base_seed)) {
        json sample = encode_output(s.output);
        sample["dropout_seed"] = s.dropout_seed;
        samples.push_back(std::move(sample));
      }
      return json{{"id", id}, {"samples", std::move(samples)}}.dump();
    }
    return error_response(id, "unknown op '" + op + "'").dump();
  } catch (const std::exception& e) {
    return error_response(id, e.what()).dump();
  }
}

void serve_stream(std::istream& in, std::ostream& out, Classifier& backend) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << handle_request(line, backend) << '\n' << std::flush;
  }
}

// ---- conformance checks

namespace {

constexpr double kTolerance = 1e-6;

const std::vector<std::string>& golden_tokens() {
  static const std::vector<std::string> tokens = {"int", "main_entry", "(", "int", "x", ")",  "{",
                                                  "return", "x", "/", "2", "+", "1", ";", "}"};
  return tokens;
}

json infer_request(std::int64_t id) {
  return json{{"id", id}, {"op", "infer"}, {"tokens", golden_tokens()}};
}

json submodels_request(std::int64_t id, std::int64_t k) {
  return json{{"id", id}, {"op", "infer_submodels"}, {"tokens", golden_tokens()}, {"k", k}, {"base_seed", 11}};
}

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

json ask(LineConnection& conn, const std::string& line) {
  const std::string reply = conn.round_trip(line);
  try {
    return json::parse(reply);
  } catch (const json::parse_error&) {
    throw Failure("response is not JSON: " + reply.substr(0, 80));
  }
}

ModelOutput decoded(const json& j) {
  expect(!j.contains("error"), "server reported an error: " + j.value("error", json()).dump());
  try {
    return decode_output(j);
  } catch (const RemoteError& e) {
    throw Failure(e.what());
  }
}

bool close_to(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kTolerance) return false;
  }
  return true;
}

bool close_to(const ModelOutput& a, const ModelOutput& b) {
  auto rows_close = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!close_to(x[i], y[i])) return false;
    }
    return true;
  };
  return close_to(a.logits, b.logits) && close_to(a.probs, b.probs) &&
         rows_close(a.layer_snapshots, b.layer_snapshots) && rows_close(a.probe_logits, b.probe_logits);
}

void check_shape(const ModelOutput& o) {
  expect(o.logits.size() >= 2, "need at least 2 classes");
  expect(o.probs.size() == o.logits.size(), "probs and logits differ in length");
  expect(o.layer_snapshots.size() >= 2, "need at least 2 layers");
  const std::size_t h = o.layer_snapshots[0].size();
  expect(h >= 1, "empty layer snapshot");
  for (const auto& l : o.layer_snapshots) expect(l.size() == h, "layer snapshots differ in width");
  expect(o.probe_logits.size() == o.layer_snapshots.size(), "probe_logits count differs from layer count");
  for (const auto& p : o.probe_logits) expect(p.size() == o.logits.size(), "probe logits differ from class count");
}

void check_normalized(const ModelOutput& o) {
  double sum = 0;
  for (double p : o.probs) {
    expect(p >= -kTolerance && p <= 1 + kTolerance, "probability outside [0,1]");
    sum += p;
  }
  expect(std::abs(sum - 1.0) <= kTolerance, "probs sum to " + std::to_string(sum));
}

}  // namespace

std::vector<CheckResult> check_protocol(const std::string& endpoint_text) {
  std::vector<CheckResult> results;
  Endpoint endpoint;
  try {
    endpoint = parse_endpoint(endpoint_text);
    LineConnection probe(endpoint);
  } catch (const NetError& e) {
    results.push_back({"connect", false, e.what()});
    return results;
  }
  results.push_back({"connect", true, ""});

  auto run = [&](const std::string& name, const std::function<void(LineConnection&)>& body) {
    CheckResult r{name, true, ""};
    try {
      LineConnection conn(endpoint);
      body(conn);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  };

  run("infer-schema", [](LineConnection& c) { decoded(ask(c, infer_request(1).dump())); });
  run("id-echo", [](LineConnection& c) {
    for (std::int64_t id : {424242LL, -7LL, 0LL}) {
      const json r = ask(c, infer_request(id).dump());
      expect(r.contains("id") && r["id"] == json(id), "id " + std::to_string(id) + " not echoed");
    }
  });
  run("normalization", [](LineConnection& c) { check_normalized(decoded(ask(c, infer_request(2).dump()))); });
  run("shape-consistency", [](LineConnection& c) { check_shape(decoded(ask(c, infer_request(3).dump()))); });
  run("argmax-consistency", [](LineConnection& c) {
    const ModelOutput o = decoded(ask(c, infer_request(4).dump()));
    expect(!o.logits.empty() && o.logits.size() == o.probs.size(), "bad shape");
    const auto lmax = std::max_element(o.logits.begin(), o.logits.end()) - o.logits.begin();
    const auto pmax = std::max_element(o.probs.begin(), o.probs.end()) - o.probs.begin();
    expect(lmax == pmax, "argmax of probs differs from argmax of logits");
  });
  run("infer-determinism", [](LineConnection& c) {
    const ModelOutput a = decoded(ask(c, infer_request(5).dump()));
    const ModelOutput b = decoded(ask(c, infer_request(6).dump()));
    expect(close_to(a, b), "repeated infer differs");
  });
  run("submodels-schema", [](LineConnection& c) {
    const ModelOutput base = decoded(ask(c, infer_request(7).dump()));
    const json r = ask(c, submodels_request(8, 3).dump());
    expect(!r.contains("error"), "server reported an error");
    expect(r.contains("samples") && r["samples"].is_array() && r["samples"].size() == 3,
           "expected 3 samples");
    for (std::size_t i = 0; i < 3; ++i) {
      const json& s = r["samples"][i];
      const ModelOutput o = decoded(s);
      check_shape(o);
      check_normalized(o);
      expect(o.logits.size() == base.logits.size() && o.layer_snapshots.size() == base.layer_snapshots.size() &&
                 o.layer_snapshots[0].size() == base.layer_snapshots[0].size(),
             "sample shape differs from infer");
      expect(s.contains("dropout_seed") && s["dropout_seed"] == json(11 + i), "dropout_seed is not base_seed + k");
    }
  });
  run("submodels-determinism", [](LineConnection& c) {
    const json a = ask(c, submodels_request(9, 3).dump());
    const json b = ask(c, submodels_request(10, 3).dump());
    expect(a.contains("samples") && b.contains("samples") && a["samples"].size() == b["samples"].size(),
           "missing samples");
    for (std::size_t i = 0; i < a["samples"].size(); ++i) {
      expect(close_to(decoded(a["samples"][i]), decoded(b["samples"][i])), "repeated infer_submodels differs");
    }
  });
  run("k-too-small", [](LineConnection& c) {
    const json r = ask(c, submodels_request(12, 1).dump());
    expect(r.contains("error"), "k=1 was not rejected");
    expect(r.contains("id") && r["id"] == json(12), "error response does not echo id");
  });
  run("malformed-request", [](LineConnection& c) {
    const json r = ask(c, "this is not json");
    expect(r.contains("error"), "garbage line was not answered with an error");
    decoded(ask(c, infer_request(13).dump()));
  });
  run("unknown-fields-ignored", [](LineConnection& c) {
    json req = infer_request(14);
    req["extra"] = {{"nested", true}};
    const json r = ask(c, req.dump());
    decoded(r);
    expect(r.contains("id") && r["id"] == json(14), "id not echoed");
  });
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace scope_refine::model::protocol
