#include "scope_refine/model/classifier.hpp"

#include <cstdlib>

#include "scope_refine/model/protocol.hpp"

namespace scope_refine::model {

using nlohmann::json;

SurrogateClassifier::SurrogateClassifier(ModelHandle handle) : handle_(std::move(handle)) {}

ModelOutput SurrogateClassifier::infer(const std::vector<std::string>& tokens) {
  return model::infer(handle_, tokenize(tokens, handle_.spec.vocab_hash_dim));
}

std::vector<SubmodelSample> SurrogateClassifier::infer_submodels(const std::vector<std::string>& tokens,
                                                                 std::size_t k, std::uint64_t base_seed) {
  return model::infer_submodels(handle_, tokenize(tokens, handle_.spec.vocab_hash_dim), k, base_seed);
}

std::string SurrogateClassifier::describe() const {
  const ModelSpec& s = handle_.spec;
  return "surrogate L=" + std::to_string(s.num_layers) + " H=" + std::to_string(s.hidden_dim) +
         " C=" + std::to_string(s.num_classes) + " V=" + std::to_string(s.vocab_hash_dim);
}

namespace {

std::string_view to_string(RemoteErrorKind kind) {
  switch (kind) {
    case RemoteErrorKind::ConnectionFailed: return "ConnectionFailed";
    case RemoteErrorKind::SchemaViolation: return "SchemaViolation";
    case RemoteErrorKind::ServerError: return "ServerError";
  }
  return "?";
}

}  // namespace

RemoteError::RemoteError(RemoteErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

RemoteClassifier::RemoteClassifier(const std::string& endpoint) : endpoint_(endpoint) {}

std::string RemoteClassifier::call(const std::string& request) {
  try {
    if (!connection_) connection_ = std::make_unique<LineConnection>(parse_endpoint(endpoint_));
    return connection_->round_trip(request);
  } catch (const NetError& e) {
    connection_.reset();
    throw RemoteError(RemoteErrorKind::ConnectionFailed, endpoint_ + ": " + e.what());
  }
}

namespace {

json parse_response(const std::string& line, std::int64_t id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw RemoteError(RemoteErrorKind::SchemaViolation, std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw RemoteError(RemoteErrorKind::SchemaViolation, "response is not an object");
  if (!j.contains("id") || j["id"] != json(id)) {
    throw RemoteError(RemoteErrorKind::SchemaViolation, "response id does not echo request id");
  }
  if (j.contains("error")) {
    throw RemoteError(RemoteErrorKind::ServerError, j["error"].is_string() ? j["error"].get<std::string>()
                                                                            : j["error"].dump());
  }
  return j;
}

}  // namespace

ModelOutput RemoteClassifier::infer(const std::vector<std::string>& tokens) {
  const std::int64_t id = next_id_++;
  const json request = {{"id", id}, {"op", "infer"}, {"tokens", tokens}};
  return protocol::decode_output(parse_response(call(request.dump()), id));
}

std::vector<SubmodelSample> RemoteClassifier::infer_submodels(const std::vector<std::string>& tokens,
                                                              std::size_t k, std::uint64_t base_seed) {
  if (k < 2) throw ModelError(ModelErrorKind::KTooSmall, "k must be >= 2");
  const std::int64_t id = next_id_++;
  const json request = {
      {"id", id}, {"op", "infer_submodels"}, {"tokens", tokens}, {"k", k}, {"base_seed", base_seed}};
  const json response = parse_response(call(request.dump()), id);
  if (!response.contains("samples") || !response["samples"].is_array() || response["samples"].size() != k) {
    throw RemoteError(RemoteErrorKind::SchemaViolation, "expected " + std::to_string(k) + " samples");
  }
  std::vector<SubmodelSample> out;
  for (std::size_t i = 0; i < k; ++i) {
    const json& s = response["samples"][i];
    SubmodelSample sample;
    sample.dropout_seed = base_seed + i;
    sample.output = protocol::decode_output(s);
    out.push_back(std::move(sample));
  }
  return out;
}

std::string RemoteClassifier::describe() const { return "remote " + endpoint_; }

std::optional<std::string> endpoint_from_env() {
  const char* value = std::getenv(kEndpointEnvVar);
  if (!value || !*value) return std::nullopt;
  return std::string(value);
}

}  // namespace scope_refine::model
