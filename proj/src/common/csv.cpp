#include "sentiflow/common/csv.hpp"

#include "sentiflow/common/error.hpp"

namespace sentiflow::csv {

std::optional<Row> Reader::next() {
    Row row;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in_.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else if (c == '\n') {
            ++line_;
            row.push_back(std::move(field));
            return row;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw FormatError("unterminated quoted field near line " + std::to_string(line_ + 1));
    if (!any) return std::nullopt;
    ++line_;
    row.push_back(std::move(field));
    return row;
}

std::vector<std::size_t> require_columns(const Row& header, const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    std::string missing;
    for (const auto& name : names) {
        std::size_t found = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                found = i;
                break;
            }
        }
        if (found == header.size()) {
            if (!missing.empty()) missing += ", ";
            missing += name;
        }
        idx.push_back(found);
    }
    if (!missing.empty()) throw FormatError("missing CSV column(s): " + missing);
    return idx;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

}  // namespace sentiflow::csv
