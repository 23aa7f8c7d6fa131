#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wgqed {

// Shortest representation that round-trips to the same double, at most 17
// significant digits, '.' decimal separator regardless of locale.
std::string format_double(double x);

// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Minimal CSV sink with '#'-prefixed comment lines (gnuplot friendly).
class CsvWriter {
public:
    void comment(std::string_view line);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

}  // namespace wgqed
