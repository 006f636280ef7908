#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scope_refine/model/model.hpp"
#include "scope_refine/model/net.hpp"

namespace scope_refine::model {

// The model under refinement, seen through lexer tokens of canonical source.
// Implementations must be deterministic per (tokens, k, base_seed).
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelOutput infer(const std::vector<std::string>& tokens) = 0;
  virtual std::vector<SubmodelSample> infer_submodels(const std::vector<std::string>& tokens,
                                                      std::size_t k, std::uint64_t base_seed) = 0;
  virtual std::string describe() const = 0;
};

class SurrogateClassifier : public Classifier {
 public:
  explicit SurrogateClassifier(ModelHandle handle);

  ModelOutput infer(const std::vector<std::string>& tokens) override;
  std::vector<SubmodelSample> infer_submodels(const std::vector<std::string>& tokens, std::size_t k,
                                              std::uint64_t base_seed) override;
  std::string describe() const override;

  const ModelHandle& handle() const { return handle_; }

 private:
  ModelHandle handle_;
};

enum class RemoteErrorKind { ConnectionFailed, SchemaViolation, ServerError };

class RemoteError : public std::runtime_error {
 public:
  RemoteError(RemoteErrorKind kind, const std::string& detail);
  RemoteErrorKind kind() const { return kind_; }

 private:
  RemoteErrorKind kind_;
};

// Client for an external model speaking the NDJSON wire protocol.
class RemoteClassifier : public Classifier {
 public:
  explicit RemoteClassifier(const std::string& endpoint);

  ModelOutput infer(const std::vector<std::string>& tokens) override;
  std::vector<SubmodelSample> infer_submodels(const std::vector<std::string>& tokens, std::size_t k,
                                              std::uint64_t base_seed) override;
  std::string describe() const override;

 private:
  std::string endpoint_;
  std::unique_ptr<LineConnection> connection_;
  std::int64_t next_id_ = 1;

  std::string call(const std::string& request);
};

inline constexpr const char* kEndpointEnvVar = "SCOPE_REFINE_MODEL_ENDPOINT";

// The endpoint named by SCOPE_REFINE_MODEL_ENDPOINT, if set and non-empty.
std::optional<std::string> endpoint_from_env();

}  // namespace scope_refine::model
