#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "scope_refine/model/classifier.hpp"

// Newline-delimited JSON wire protocol shared with external model servers.
//
//   request:  {"id":<int>,"op":"infer"|"infer_submodels","tokens":[<str>...],
//              "k":<int>,"base_seed":<int>}
//   infer:    {"id":..,"logits":[..],"probs":[..],"layers":[[..]..],"probe_logits":[[..]..]}
//   samples:  {"id":..,"samples":[{"dropout_seed":..,"logits":..,"probs":..,
//              "layers":..,"probe_logits":..}..]}
//   error:    {"id":..,"error":<str>}
//
// Unknown request fields are ignored and `id` is echoed verbatim.
namespace scope_refine::model::protocol {

nlohmann::json encode_output(const ModelOutput& output);
// Throws RemoteError(SchemaViolation).
ModelOutput decode_output(const nlohmann::json& j);

// One request line in, one response line out (without the newline). Never
// throws: every failure becomes an error response.
std::string handle_request(const std::string& line, Classifier& backend);

// Serves requests from `in` until EOF, one response line per request line.
void serve_stream(std::istream& in, std::ostream& out, Classifier& backend);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Golden conformance checks against a live endpoint. A failed connection is
// reported as a failing "connect" check.
std::vector<CheckResult> check_protocol(const std::string& endpoint);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace scope_refine::model::protocol
