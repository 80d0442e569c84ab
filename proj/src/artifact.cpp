#include "scalekit/artifact.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

using nlohmann::json;

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string("law artifact: missing or non-numeric "
                                      "field '") +
                          key + "'");
  }
  return j.at(key).get<double>();
}

int int_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ValidationError(std::string("law artifact: missing or non-integer "
                                      "field '") +
                          key + "'");
  }
  return j.at(key).get<int>();
}

ChinchillaParams base_from_json(const json& j) {
  ChinchillaParams p;
  p.E = number_field(j, "E");
  p.A = number_field(j, "A");
  p.B = number_field(j, "B");
  p.alpha = number_field(j, "alpha");
  p.beta = number_field(j, "beta");
  validate_params(p);
  return p;
}

void base_to_json(const ChinchillaParams& p, json& j) {
  j["E"] = p.E;
  j["A"] = p.A;
  j["B"] = p.B;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
}

}  // namespace

std::string LawArtifact::type() const {
  struct Visitor {
    std::string operator()(const ChinchillaParams&) { return "single_epoch"; }
    std::string operator()(const MultiEpochParams&) { return "multi_epoch"; }
    std::string operator()(const PowerLawFit&) { return "power_law"; }
    std::string operator()(const LinearFit&) { return "linear"; }
  };
  return std::visit(Visitor{}, payload);
}

json artifact_to_json(const LawArtifact& artifact) {
  json j;
  j["type"] = artifact.type();
  struct Visitor {
    json& j;
    void operator()(const ChinchillaParams& p) { base_to_json(p, j); }
    void operator()(const MultiEpochParams& p) {
      base_to_json(p.base, j);
      j["r_star_n"] = p.r_star_n;
      j["r_star_d"] = p.r_star_d;
    }
    void operator()(const PowerLawFit& p) {
      j["coefficient"] = p.coefficient;
      j["exponent"] = p.exponent;
      j["r_squared"] = p.r_squared;
      j["domain"] = {p.c_min, p.c_max};
      j["n_points"] = p.n_points;
    }
    void operator()(const LinearFit& p) {
      j["slope"] = p.slope;
      j["intercept"] = p.intercept;
      j["pearson_r"] = p.pearson_r;
      j["n_points"] = p.n_points;
      j["filter_applied"] = p.filter_applied;
    }
  };
  std::visit(Visitor{j}, artifact.payload);
  j["fit_meta"] = artifact.fit_meta;
  return j;
}

LawArtifact artifact_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ValidationError("law artifact: missing 'type'");
  }
  const std::string type = j.at("type").get<std::string>();

  LawArtifact artifact;
  if (type == "single_epoch") {
    artifact.payload = base_from_json(j);
  } else if (type == "multi_epoch") {
    MultiEpochParams p;
    p.base = base_from_json(j);
    p.r_star_n = number_field(j, "r_star_n");
    p.r_star_d = number_field(j, "r_star_d");
    validate_params(p);
    artifact.payload = p;
  } else if (type == "power_law") {
    PowerLawFit p;
    p.coefficient = number_field(j, "coefficient");
    p.exponent = number_field(j, "exponent");
    p.r_squared = number_field(j, "r_squared");
    if (!j.contains("domain") || !j.at("domain").is_array() ||
        j.at("domain").size() != 2) {
      throw ValidationError("law artifact: 'domain' must be [c_min, c_max]");
    }
    p.c_min = j.at("domain").at(0).get<double>();
    p.c_max = j.at("domain").at(1).get<double>();
    p.n_points = int_field(j, "n_points");
    if (!(p.coefficient > 0.0) || !(p.c_min < p.c_max) || p.n_points < 2) {
      throw ValidationError("law artifact: invalid power_law payload");
    }
    artifact.payload = p;
  } else if (type == "linear") {
    LinearFit p;
    p.slope = number_field(j, "slope");
    p.intercept = number_field(j, "intercept");
    p.pearson_r = number_field(j, "pearson_r");
    p.n_points = int_field(j, "n_points");
    if (!j.contains("filter_applied") || !j.at("filter_applied").is_string()) {
      throw ValidationError("law artifact: missing 'filter_applied'");
    }
    p.filter_applied = j.at("filter_applied").get<std::string>();
    if (std::abs(p.pearson_r) > 1.0 || p.n_points < 2) {
      throw ValidationError("law artifact: invalid linear payload");
    }
    artifact.payload = p;
  } else {
    throw ValidationError("law artifact: unknown type '" + type + "'");
  }

  if (j.contains("fit_meta")) {
    if (!j.at("fit_meta").is_object()) {
      throw ValidationError("law artifact: fit_meta must be an object");
    }
    artifact.fit_meta = j.at("fit_meta");
  }
  return artifact;
}

void save_artifact(const LawArtifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << artifact_to_json(artifact).dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path);
}

LawArtifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in " + path + ": " + e.what());
  }
  return artifact_from_json(j);
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace scalekit
