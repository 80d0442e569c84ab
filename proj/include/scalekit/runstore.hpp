#pragma once

#include <map>
#include <string>
#include <vector>

namespace scalekit {

/// One completed training run.
///
/// Counts are stored as doubles: 6*N*D overflows 64-bit integers at large
/// scale, and experiment logs routinely write counts in scientific notation.
struct RunRecord {
  std::string run_id;
  std::string modality;                   // free-form tag, e.g. "speech"
  double n_params = 0.0;                  // N
  double d_tokens = 0.0;                  // D
  double u_tokens = 0.0;                  // unique tokens, defaults to D
  double test_loss = 0.0;                 // nats per token
  std::map<std::string, double> metrics;  // name -> accuracy in percent

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// One checkpoint of a run: cumulative compute and the loss (and optionally
/// metrics) observed there.
struct CurvePoint {
  std::string run_id;
  double compute = 0.0;  // FLOPs
  double loss = 0.0;     // nats per token
  std::map<std::string, double> metrics;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Ordered collection of run records plus load provenance.
/// Equality compares records only; provenance is bookkeeping.
struct RunSet {
  std::vector<RunRecord> records;
  std::string source_path;  // empty for generated sets
  std::string loaded_at;    // ISO-8601 UTC, empty for generated sets

  friend bool operator==(const RunSet& a, const RunSet& b) {
    return a.records == b.records;
  }
};

/// Ordered collection of curve points plus load provenance.
struct CurveSet {
  std::vector<CurvePoint> points;
  std::string source_path;
  std::string loaded_at;

  friend bool operator==(const CurveSet& a, const CurveSet& b) {
    return a.points == b.points;
  }
};

enum class FileFormat { csv, json };

/// Maps ".csv"/".json" extensions to a format. Throws ValidationError for
/// anything else.
FileFormat format_from_path(const std::string& path);

/// Loads and validates a run file.
///
/// CSV: header row required. Columns `run_id,n_params,d_tokens,test_loss`
/// are mandatory; `modality`, `u_tokens` and any number of `metric.<name>`
/// columns are optional. An empty cell means "absent"; absent u_tokens
/// defaults to d_tokens. JSON: array of objects with the same field names
/// and `metrics` as a nested object.
///
/// Errors carry the offending line (CSV) or element index (JSON), and cover
/// parse failures, duplicate run_ids and violated field invariants.
RunSet load_runs(const std::string& path, FileFormat format);

/// Loads and validates a curve file. CSV columns: `run_id,compute,loss`
/// plus optional `metric.<name>`. Points of one run_id must appear in
/// strictly increasing compute order.
CurveSet load_curves(const std::string& path, FileFormat format);

/// Writers for the same two formats. Numeric fields are emitted with
/// shortest round-trip precision, so load(save(x)) == x bit-exactly.
void save_runs(const RunSet& runs, const std::string& path, FileFormat format);
void save_curves(const CurveSet& curves, const std::string& path,
                 FileFormat format);

/// Training FLOPs under the C = 6*N*D approximation.
double derive_compute(const RunRecord& record);

/// Number of repetitions R_D = D/U_D - 1; zero for single-epoch runs.
double repetitions(const RunRecord& record);

/// Validation used by the loaders and by generators that produce sets
/// directly. Throws ValidationError naming the offending record/point.
void validate_runs(const RunSet& runs);
void validate_curves(const CurveSet& curves);

/// Views a RunSet as one final-checkpoint curve point per run, at
/// (derive_compute(r), test_loss). Metrics carry over.
CurveSet to_curves(const RunSet& runs);

}  // namespace scalekit
