#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace recyc {

/// 12 significant digits, '.' decimal point, independent of the global locale.
std::string format_number(double v);

struct CsvDocument {
  std::string config;  // text after "# config: "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comment line `# config: ...`, then the header, then one line per row.
/// Fields containing a comma, quote or line break are quoted per RFC 4180.
void write_csv(std::ostream& out, const CsvDocument& doc);

CsvDocument read_csv(std::istream& in);

}  // namespace recyc
