#include "calib/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace calib {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibError(errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw CalibError(errc::io_error, "read failed on " + path.string());
  return buf.str();
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field.empty()) {
    throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(line) +
                                            ": empty numeric field");
  }
  errno = 0;
  char* end = nullptr;
  double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(line) +
                                            ": bad number '" + field + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& field, const std::filesystem::path& path,
                       std::size_t line) {
  if (field.empty()) {
    throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(line) +
                                            ": empty integer field");
  }
  errno = 0;
  char* end = nullptr;
  long long value = std::strtoll(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(line) +
                                            ": bad integer '" + field + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

PredictionSet load_predictions(const std::filesystem::path& path, PredictionFormat format) {
  const std::string content = read_file(path);

  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= content.size()) {
      std::size_t nl = content.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(content.substr(start));
        break;
      }
      lines.push_back(content.substr(start, nl - start));
      start = nl + 1;
    }
    for (std::string& line : lines) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  if (lines.empty()) throw CalibError(errc::empty_input, path.string() + " is empty");

  const std::vector<std::string> header = split_fields(lines[0]);
  std::size_t score_start;
  bool has_id;
  if (header.size() >= 2 && header[0] == "id" && header[1] == "label") {
    has_id = true;
    score_start = 2;
  } else if (!header.empty() && header[0] == "label") {
    has_id = false;
    score_start = 1;
  } else {
    throw CalibError(errc::header_mismatch,
                     path.string() + ": header must start with 'id,label' or 'label'");
  }
  const std::size_t k = header.size() - score_start;
  if (k == 0) {
    throw CalibError(errc::header_mismatch, path.string() + ": no score columns in header");
  }
  for (std::size_t c = 0; c < k; ++c) {
    const std::string expected = "s_" + std::to_string(c);
    if (header[score_start + c] != expected) {
      throw CalibError(errc::header_mismatch, path.string() + ": score column " +
                                                  std::to_string(c) + " must be named '" + expected +
                                                  "', got '" + header[score_start + c] + "'");
    }
  }

  const std::size_t n = lines.size() - 1;
  std::vector<double> scores;
  scores.reserve(n * k);
  std::vector<std::int32_t> labels;
  labels.reserve(n);
  std::vector<std::string> ids;
  if (has_id) ids.reserve(n);

  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t line_no = row + 2;  // 1-based, after the header
    const std::vector<std::string> fields = split_fields(lines[row + 1]);
    if (fields.size() != header.size()) {
      throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(line_no) +
                                              ": expected " + std::to_string(header.size()) +
                                              " fields, got " + std::to_string(fields.size()));
    }
    std::size_t at = 0;
    if (has_id) ids.push_back(fields[at++]);
    labels.push_back(static_cast<std::int32_t>(parse_int(fields[at++], path, line_no)));
    for (std::size_t c = 0; c < k; ++c) {
      scores.push_back(parse_double(fields[at++], path, line_no));
    }
  }

  if (has_id) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!seen.insert(ids[i]).second) {
        throw CalibError(errc::parse_error, path.string() + " line " + std::to_string(i + 2) +
                                                ": duplicate id '" + ids[i] + "'");
      }
    }
  }

  ScoreKind kind =
      (format == PredictionFormat::csv_logits) ? ScoreKind::logits : ScoreKind::probabilities;
  return validate(std::move(scores), n, k, kind, std::move(labels), std::move(ids),
                  path.stem().string(), "");
}

void write_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
  std::string out;
  out.reserve(preds.n * (preds.k + 2) * 20);
  out += "id,label";
  for (std::size_t c = 0; c < preds.k; ++c) {
    out += ",s_";
    out += std::to_string(c);
  }
  out += '\n';
  for (std::size_t i = 0; i < preds.n; ++i) {
    out += preds.example_ids.empty() ? std::to_string(i) : preds.example_ids[i];
    out += ',';
    out += std::to_string(preds.labels[i]);
    for (std::size_t c = 0; c < preds.k; ++c) {
      out += ',';
      out += format_double(preds.scores[i * preds.k + c]);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t nl = content.find('\n', start);
    std::string line = (nl == std::string::npos) ? content.substr(start)
                                                 : content.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return ids;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CalibError(errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CalibError(errc::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw CalibError(errc::io_error, "write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw CalibError(errc::io_error,
                     "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace calib
