#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sentiflow::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// line breaks. Returns std::nullopt at end of input.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    std::optional<Row> next();
    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

// Reads a header row and returns the column index for each requested name.
// Throws FormatError listing every missing column.
std::vector<std::size_t> require_columns(const Row& header, const std::vector<std::string>& names);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

}  // namespace sentiflow::csv
