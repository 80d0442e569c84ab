#include "scalekit/runstore.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "scalekit/errors.hpp"

namespace scalekit {
namespace {

using nlohmann::json;

std::string now_utc_iso8601() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& where) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError("parse error: '" + std::string(text) +
                          "' is not a number (" + where + ")");
  }
  return value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

// --- CSV ----------------------------------------------------------------

// RFC-4180-ish: fields may be quoted, quotes escaped by doubling. No
// embedded newlines inside quoted fields (run logs do not need them).
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw ValidationError("parse error: unterminated quote on line " +
                          std::to_string(line_no));
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(std::move(cur));
  }
  return lines;
}

struct Header {
  // column index -> role; role is either a fixed field name or "metric.<x>"
  std::vector<std::string> roles;
  std::unordered_map<std::string, size_t> index_of;
};

Header parse_header(const std::string& line, const std::set<std::string>& fixed,
                    const std::string& path) {
  Header h;
  h.roles = split_csv_line(line, 1);
  for (size_t i = 0; i < h.roles.size(); ++i) {
    const std::string& name = h.roles[i];
    const bool is_metric = name.rfind("metric.", 0) == 0 && name.size() > 7;
    if (!is_metric && fixed.count(name) == 0) {
      throw ValidationError("unknown column '" + name + "' in " + path);
    }
    if (!h.index_of.emplace(name, i).second) {
      throw ValidationError("duplicate column '" + name + "' in " + path);
    }
  }
  return h;
}

void require_columns(const Header& h, std::initializer_list<const char*> cols,
                     const std::string& path) {
  for (const char* c : cols) {
    if (h.index_of.count(c) == 0) {
      throw ValidationError(std::string("missing required column '") + c +
                            "' in " + path);
    }
  }
}

std::string cell(const std::vector<std::string>& fields, const Header& h,
                 const std::string& name) {
  const auto it = h.index_of.find(name);
  if (it == h.index_of.end()) return {};
  return fields[it->second];
}

void check_finite(double v, const std::string& field, const std::string& at) {
  if (!std::isfinite(v)) {
    throw ValidationError(field + " is not finite (" + at + ")");
  }
}

void validate_record(const RunRecord& r, const std::string& at) {
  if (r.run_id.empty()) throw ValidationError("empty run_id (" + at + ")");
  check_finite(r.n_params, "n_params", at);
  check_finite(r.d_tokens, "d_tokens", at);
  check_finite(r.u_tokens, "u_tokens", at);
  check_finite(r.test_loss, "test_loss", at);
  if (r.n_params <= 0.0) throw ValidationError("n_params must be > 0 (" + at + ")");
  if (r.d_tokens <= 0.0) throw ValidationError("d_tokens must be > 0 (" + at + ")");
  if (r.u_tokens <= 0.0 || r.u_tokens > r.d_tokens) {
    throw ValidationError("u_tokens must satisfy 0 < u_tokens <= d_tokens (" +
                          at + ")");
  }
  if (r.test_loss <= 0.0) throw ValidationError("test_loss must be > 0 (" + at + ")");
  for (const auto& [name, value] : r.metrics) {
    if (name.empty()) throw ValidationError("empty metric name (" + at + ")");
    check_finite(value, "metric." + name, at);
    if (value < 0.0 || value > 100.0) {
      throw ValidationError("metric." + name + " must lie in [0, 100] (" + at +
                            ")");
    }
  }
}

void validate_point(const CurvePoint& p, const std::string& at) {
  if (p.run_id.empty()) throw ValidationError("empty run_id (" + at + ")");
  check_finite(p.compute, "compute", at);
  check_finite(p.loss, "loss", at);
  if (p.compute <= 0.0) throw ValidationError("compute must be > 0 (" + at + ")");
  if (p.loss <= 0.0) throw ValidationError("loss must be > 0 (" + at + ")");
  for (const auto& [name, value] : p.metrics) {
    if (name.empty()) throw ValidationError("empty metric name (" + at + ")");
    check_finite(value, "metric." + name, at);
    if (value < 0.0 || value > 100.0) {
      throw ValidationError("metric." + name + " must lie in [0, 100] (" + at +
                            ")");
    }
  }
}

std::map<std::string, double> parse_metric_cells(
    const std::vector<std::string>& fields, const Header& h,
    const std::string& at) {
  std::map<std::string, double> metrics;
  for (size_t i = 0; i < h.roles.size(); ++i) {
    const std::string& role = h.roles[i];
    if (role.rfind("metric.", 0) != 0) continue;
    const std::string& text = fields[i];
    if (text.empty()) continue;  // absent
    metrics[role.substr(7)] = parse_double(text, at + ", column " + role);
  }
  return metrics;
}

RunSet parse_runs_csv(const std::string& content, const std::string& path) {
  const auto lines = split_lines(content);
  if (lines.empty()) throw ValidationError("empty file: " + path);
  static const std::set<std::string> fixed = {"run_id",   "modality",
                                              "n_params", "d_tokens",
                                              "u_tokens", "test_loss"};
  const Header h = parse_header(lines[0], fixed, path);
  require_columns(h, {"run_id", "n_params", "d_tokens", "test_loss"}, path);

  RunSet rs;
  std::unordered_set<std::string> seen;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line_no = static_cast<int>(li + 1);
    const std::string at = path + ":" + std::to_string(line_no);
    const auto fields = split_csv_line(lines[li], line_no);
    if (fields.size() != h.roles.size()) {
      throw ValidationError("expected " + std::to_string(h.roles.size()) +
                            " fields, got " + std::to_string(fields.size()) +
                            " (" + at + ")");
    }
    RunRecord r;
    r.run_id = cell(fields, h, "run_id");
    r.modality = cell(fields, h, "modality");
    const auto need = [&](const char* name) {
      const std::string text = cell(fields, h, name);
      if (text.empty()) {
        throw ValidationError(std::string("empty required field '") + name +
                              "' (" + at + ")");
      }
      return parse_double(text, at + ", column " + name);
    };
    r.n_params = need("n_params");
    r.d_tokens = need("d_tokens");
    const std::string u = cell(fields, h, "u_tokens");
    r.u_tokens = u.empty() ? r.d_tokens : parse_double(u, at + ", column u_tokens");
    r.test_loss = need("test_loss");
    r.metrics = parse_metric_cells(fields, h, at);
    validate_record(r, at);
    if (!seen.insert(r.run_id).second) {
      throw ValidationError("duplicate run_id '" + r.run_id + "' (" + at + ")");
    }
    rs.records.push_back(std::move(r));
  }
  if (rs.records.empty()) throw ValidationError("no records in " + path);
  return rs;
}

CurveSet parse_curves_csv(const std::string& content, const std::string& path) {
  const auto lines = split_lines(content);
  if (lines.empty()) throw ValidationError("empty file: " + path);
  static const std::set<std::string> fixed = {"run_id", "compute", "loss"};
  const Header h = parse_header(lines[0], fixed, path);
  require_columns(h, {"run_id", "compute", "loss"}, path);

  CurveSet cs;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line_no = static_cast<int>(li + 1);
    const std::string at = path + ":" + std::to_string(line_no);
    const auto fields = split_csv_line(lines[li], line_no);
    if (fields.size() != h.roles.size()) {
      throw ValidationError("expected " + std::to_string(h.roles.size()) +
                            " fields, got " + std::to_string(fields.size()) +
                            " (" + at + ")");
    }
    CurvePoint p;
    p.run_id = cell(fields, h, "run_id");
    const auto need = [&](const char* name) {
      const std::string text = cell(fields, h, name);
      if (text.empty()) {
        throw ValidationError(std::string("empty required field '") + name +
                              "' (" + at + ")");
      }
      return parse_double(text, at + ", column " + name);
    };
    p.compute = need("compute");
    p.loss = need("loss");
    p.metrics = parse_metric_cells(fields, h, at);
    validate_point(p, at);
    cs.points.push_back(std::move(p));
  }
  if (cs.points.empty()) throw ValidationError("no curve points in " + path);
  return cs;
}

// --- JSON ---------------------------------------------------------------

json parse_json(const std::string& content, const std::string& path) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error in " + path + ": " + e.what());
  }
}

double json_number(const json& obj, const char* key, const std::string& at) {
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    throw ValidationError(std::string(key) + " must be a number (" + at + ")");
  }
  return v.get<double>();
}

std::map<std::string, double> json_metrics(const json& obj,
                                           const std::string& at) {
  std::map<std::string, double> metrics;
  if (!obj.contains("metrics")) return metrics;
  const auto& m = obj.at("metrics");
  if (!m.is_object()) throw ValidationError("metrics must be an object (" + at + ")");
  for (const auto& [name, value] : m.items()) {
    if (!value.is_number()) {
      throw ValidationError("metric." + name + " must be a number (" + at + ")");
    }
    metrics[name] = value.get<double>();
  }
  return metrics;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& at) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (known.count(key) == 0) {
      throw ValidationError("unknown field '" + key + "' (" + at + ")");
    }
  }
}

RunSet parse_runs_json(const std::string& content, const std::string& path) {
  const json root = parse_json(content, path);
  if (!root.is_array()) throw ValidationError("expected a JSON array in " + path);
  static const std::set<std::string> known = {"run_id",   "modality",
                                              "n_params", "d_tokens",
                                              "u_tokens", "test_loss",
                                              "metrics"};
  RunSet rs;
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < root.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const json& obj = root[i];
    if (!obj.is_object()) throw ValidationError("expected an object (" + at + ")");
    reject_unknown_keys(obj, known, at);
    RunRecord r;
    try {
      r.run_id = obj.at("run_id").get<std::string>();
      r.modality = obj.contains("modality")
                       ? obj.at("modality").get<std::string>()
                       : std::string{};
      r.n_params = json_number(obj, "n_params", at);
      r.d_tokens = json_number(obj, "d_tokens", at);
      r.u_tokens = obj.contains("u_tokens") ? json_number(obj, "u_tokens", at)
                                            : r.d_tokens;
      r.test_loss = json_number(obj, "test_loss", at);
    } catch (const json::exception& e) {
      throw ValidationError("malformed record (" + at + "): " + e.what());
    }
    r.metrics = json_metrics(obj, at);
    validate_record(r, at);
    if (!seen.insert(r.run_id).second) {
      throw ValidationError("duplicate run_id '" + r.run_id + "' (" + at + ")");
    }
    rs.records.push_back(std::move(r));
  }
  if (rs.records.empty()) throw ValidationError("no records in " + path);
  return rs;
}

CurveSet parse_curves_json(const std::string& content, const std::string& path) {
  const json root = parse_json(content, path);
  if (!root.is_array()) throw ValidationError("expected a JSON array in " + path);
  static const std::set<std::string> known = {"run_id", "compute", "loss",
                                              "metrics"};
  CurveSet cs;
  for (size_t i = 0; i < root.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const json& obj = root[i];
    if (!obj.is_object()) throw ValidationError("expected an object (" + at + ")");
    reject_unknown_keys(obj, known, at);
    CurvePoint p;
    try {
      p.run_id = obj.at("run_id").get<std::string>();
      p.compute = json_number(obj, "compute", at);
      p.loss = json_number(obj, "loss", at);
    } catch (const json::exception& e) {
      throw ValidationError("malformed point (" + at + "): " + e.what());
    }
    p.metrics = json_metrics(obj, at);
    validate_point(p, at);
    cs.points.push_back(std::move(p));
  }
  if (cs.points.empty()) throw ValidationError("no curve points in " + path);
  return cs;
}

template <typename Items>
std::vector<std::string> metric_union(const Items& items) {
  std::set<std::string> names;
  for (const auto& item : items) {
    for (const auto& [name, value] : item.metrics) {
      (void)value;
      names.insert(name);
    }
  }
  return {names.begin(), names.end()};
}

}  // namespace

FileFormat format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".csv") return FileFormat::csv;
  if (ext == ".json") return FileFormat::json;
  throw ValidationError("cannot infer file format from '" + path +
                        "' (expected .csv or .json)");
}

RunSet load_runs(const std::string& path, FileFormat format) {
  const std::string content = read_file(path);
  RunSet rs = format == FileFormat::csv ? parse_runs_csv(content, path)
                                        : parse_runs_json(content, path);
  rs.source_path = path;
  rs.loaded_at = now_utc_iso8601();
  return rs;
}

CurveSet load_curves(const std::string& path, FileFormat format) {
  const std::string content = read_file(path);
  CurveSet cs = format == FileFormat::csv ? parse_curves_csv(content, path)
                                          : parse_curves_json(content, path);
  validate_curves(cs);
  cs.source_path = path;
  cs.loaded_at = now_utc_iso8601();
  return cs;
}

void save_runs(const RunSet& runs, const std::string& path, FileFormat format) {
  if (format == FileFormat::csv) {
    const auto metric_names = metric_union(runs.records);

    std::string out = "run_id,modality,n_params,d_tokens,u_tokens,test_loss";
    for (const auto& m : metric_names) out += ",metric." + m;
    out += '\n';
    for (const auto& r : runs.records) {
      out += csv_escape(r.run_id) + ',' + csv_escape(r.modality) + ',' +
             fmt_double(r.n_params) + ',' + fmt_double(r.d_tokens) + ',' +
             fmt_double(r.u_tokens) + ',' + fmt_double(r.test_loss);
      for (const auto& m : metric_names) {
        out += ',';
        const auto it = r.metrics.find(m);
        if (it != r.metrics.end()) out += fmt_double(it->second);
      }
      out += '\n';
    }
    write_file(path, out);
    return;
  }
  json root = json::array();
  for (const auto& r : runs.records) {
    json obj = {{"run_id", r.run_id},     {"modality", r.modality},
                {"n_params", r.n_params}, {"d_tokens", r.d_tokens},
                {"u_tokens", r.u_tokens}, {"test_loss", r.test_loss}};
    if (!r.metrics.empty()) obj["metrics"] = r.metrics;
    root.push_back(std::move(obj));
  }
  write_file(path, root.dump(2) + "\n");
}

void save_curves(const CurveSet& curves, const std::string& path,
                 FileFormat format) {
  if (format == FileFormat::csv) {
    const auto metric_names = metric_union(curves.points);

    std::string out = "run_id,compute,loss";
    for (const auto& m : metric_names) out += ",metric." + m;
    out += '\n';
    for (const auto& p : curves.points) {
      out += csv_escape(p.run_id) + ',' + fmt_double(p.compute) + ',' +
             fmt_double(p.loss);
      for (const auto& m : metric_names) {
        out += ',';
        const auto it = p.metrics.find(m);
        if (it != p.metrics.end()) out += fmt_double(it->second);
      }
      out += '\n';
    }
    write_file(path, out);
    return;
  }
  json root = json::array();
  for (const auto& p : curves.points) {
    json obj = {{"run_id", p.run_id}, {"compute", p.compute}, {"loss", p.loss}};
    if (!p.metrics.empty()) obj["metrics"] = p.metrics;
    root.push_back(std::move(obj));
  }
  write_file(path, root.dump(2) + "\n");
}

double derive_compute(const RunRecord& record) {
  validate_record(record, "derive_compute");
  return 6.0 * record.n_params * record.d_tokens;
}

double repetitions(const RunRecord& record) {
  validate_record(record, "repetitions");
  return record.d_tokens / record.u_tokens - 1.0;
}

void validate_runs(const RunSet& runs) {
  if (runs.records.empty()) throw ValidationError("run set is empty");
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < runs.records.size(); ++i) {
    const std::string at = "record " + std::to_string(i);
    validate_record(runs.records[i], at);
    if (!seen.insert(runs.records[i].run_id).second) {
      throw ValidationError("duplicate run_id '" + runs.records[i].run_id +
                            "' (" + at + ")");
    }
  }
}

void validate_curves(const CurveSet& curves) {
  if (curves.points.empty()) throw ValidationError("curve set is empty");
  std::unordered_map<std::string, double> last_compute;
  for (size_t i = 0; i < curves.points.size(); ++i) {
    const CurvePoint& p = curves.points[i];
    const std::string at = "point " + std::to_string(i);
    validate_point(p, at);
    const auto it = last_compute.find(p.run_id);
    if (it != last_compute.end() && p.compute <= it->second) {
      throw ValidationError("compute must be strictly increasing within run '" +
                            p.run_id + "' (" + at + ")");
    }
    last_compute[p.run_id] = p.compute;
  }
}

CurveSet to_curves(const RunSet& runs) {
  validate_runs(runs);
  CurveSet cs;
  cs.source_path = runs.source_path;
  cs.loaded_at = runs.loaded_at;
  for (const auto& r : runs.records) {
    cs.points.push_back(
        {r.run_id, 6.0 * r.n_params * r.d_tokens, r.test_loss, r.metrics});
  }
  return cs;
}

}  // namespace scalekit
