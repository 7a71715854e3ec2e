#include "recyc/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "recyc/error.hpp"

namespace recyc {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

namespace {

void write_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

std::vector<std::string> parse_record(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

void write_csv(std::ostream& out, const CsvDocument& doc) {
  out << "# config: " << doc.config << '\n';
  write_record(out, doc.header);
  for (const auto& row : doc.rows) {
    require(row.size() == doc.header.size(), ErrorKind::InvalidParameter,
            "write_csv: row width does not match header");
    write_record(out, row);
  }
  if (!out) throw Error(ErrorKind::Io, "write_csv: output stream failed");
}

CsvDocument read_csv(std::istream& in) {
  CsvDocument doc;
  std::string line;
  bool have_header = false;
  const std::string prefix = "# config: ";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) {
      doc.config = line.substr(prefix.size());
    } else if (!line.empty() && line[0] == '#') {
      continue;
    } else if (!have_header) {
      doc.header = parse_record(line);
      have_header = true;
    } else if (!line.empty()) {
      doc.rows.push_back(parse_record(line));
    }
  }
  return doc;
}

}  // namespace recyc
