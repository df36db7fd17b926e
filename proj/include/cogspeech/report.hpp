#pragma once

#include <string>
#include <vector>

#include "cogspeech/io.hpp"

namespace cogspeech {

// Experiment result table emitted both as an aligned human-readable text
// block and as machine-readable CSV.
struct ReportTable {
    std::string title;
    std::vector<std::string> columns;                 // first column is the row label
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns.size())
            throw DataError("report row has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(columns.size()));
        rows.push_back(std::move(cells));
    }

    std::string to_text() const {
        std::vector<std::size_t> width(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

        std::string out = title + "\n";
        const auto emit_row = [&](const std::vector<std::string>& cells) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                out += cells[c];
                if (c + 1 < cells.size()) out += std::string(width[c] - cells[c].size() + 2, ' ');
            }
            out += '\n';
        };
        emit_row(columns);
        std::size_t rule = 0;
        for (const auto w : width) rule += w + 2;
        out += std::string(rule > 2 ? rule - 2 : rule, '-') + "\n";
        for (const auto& row : rows) emit_row(row);
        for (const auto& note : notes) out += "note: " + note + "\n";
        return out;
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += columns[c];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += row[c];
            }
            out += '\n';
        }
        return out;
    }

    void write(const fs::path& text_path, const fs::path& csv_path) const {
        write_text_file(text_path, to_text());
        write_text_file(csv_path, to_csv());
    }
};

}  // namespace cogspeech
