#include "robustssm/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "robustssm/scenario_io.hpp"

namespace robustssm {

namespace {

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::invalid_argument("bad numeric field: " + s);
  return v;
}

// Splits one RFC 4180 record, honoring quoted fields.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string results_csv_text(const std::vector<MethodRecord>& records) {
  std::string out = "run,method,mse,wall_time_s,bcrb_trace\n";
  for (const auto& rec : records) {
    out += std::to_string(rec.run);
    out.push_back(',');
    out += csv_escape(rec.method);
    out.push_back(',');
    out += format_double(rec.mse);
    out.push_back(',');
    out += format_double(rec.wall_time_s);
    out.push_back(',');
    out += format_double(rec.bcrb_trace);
    out.push_back('\n');
  }
  return out;
}

std::vector<MethodRecord> parse_results_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "run,method,mse,wall_time_s,bcrb_trace")
    throw std::invalid_argument("unexpected CSV header: " + line);
  std::vector<MethodRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_record(line);
    if (fields.size() != 5) throw std::invalid_argument("bad CSV row: " + line);
    MethodRecord rec;
    rec.run = static_cast<int>(parse_double(fields[0]));
    rec.method = fields[1];
    rec.mse = parse_double(fields[2]);
    rec.wall_time_s = parse_double(fields[3]);
    rec.bcrb_trace = parse_double(fields[4]);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_results_csv(const McReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << results_csv_text(report.records);
}

std::vector<MethodRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_results_csv_text(buf.str());
}

std::string report_json_text(const McReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["scenario"] = nlohmann::json::parse(scenario_to_text(report.scenario));
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [method, s] : report.stats) {
    stats[method] = {{"median", s.median},   {"q1", s.q1},
                     {"q3", s.q3},           {"whisker_lo", s.whisker_lo},
                     {"whisker_hi", s.whisker_hi}, {"outliers", s.outliers}};
  }
  doc["mse_stats"] = stats;
  doc["failure_counts"] = report.failure_counts;
  doc["failure_messages"] = report.failure_messages;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : report.records) {
    records.push_back({{"run", rec.run},
                       {"method", rec.method},
                       {"mse", rec.mse},
                       {"wall_time_s", rec.wall_time_s},
                       {"bcrb_trace", rec.bcrb_trace}});
  }
  doc["records"] = records;
  return doc.dump(2) + "\n";
}

void write_report_json(const McReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report_json_text(report);
}

}  // namespace robustssm
