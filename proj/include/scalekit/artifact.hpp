#pragma once

#include <string>
#include <variant>

#include "json.hpp"
#include "scalekit/lawfit.hpp"
#include "scalekit/linkage.hpp"
#include "scalekit/scalecurves.hpp"

namespace scalekit {

/// A fitted law persisted as JSON, self-describing via `type`:
/// "single_epoch", "multi_epoch", "power_law" or "linear". `fit_meta` is a
/// free-form provenance object (input hash, config echo, objective, tool
/// version). Numbers are serialized with shortest round-trip precision, so
/// load(save(x)) == x bit-exactly.
struct LawArtifact {
  std::variant<ChinchillaParams, MultiEpochParams, PowerLawFit, LinearFit>
      payload;
  nlohmann::json fit_meta = nlohmann::json::object();

  std::string type() const;

  friend bool operator==(const LawArtifact& a, const LawArtifact& b) {
    return a.payload == b.payload && a.fit_meta == b.fit_meta;
  }
};

nlohmann::json artifact_to_json(const LawArtifact& artifact);
LawArtifact artifact_from_json(const nlohmann::json& j);

void save_artifact(const LawArtifact& artifact, const std::string& path);
LawArtifact load_artifact(const std::string& path);

/// FNV-1a 64-bit over a file's bytes, hex-encoded; the input fingerprint
/// recorded in fit_meta.
std::string file_fingerprint(const std::string& path);

}  // namespace scalekit
