#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "l3det/model.hpp"

namespace l3det {

enum class TraceFormat { JsonLines, Csv };

/// Picks the format from a file extension (.csv -> Csv, otherwise JsonLines).
TraceFormat format_for_path(const std::filesystem::path& path) noexcept;

/// Parses one trace line. `line_no` is 1-based and only used in messages.
/// When the line carries no seq, `default_seq` is used.
///
/// JSON lines: {"msg":..,"rnti":..,"tmsi":..,"ue":..,"label":..,"seq"?:..};
/// unknown keys are ignored. CSV rows follow the header seq,ue,msg,rnti,tmsi,label
/// with RFC 4180 quoting.
TelemetryRecord parse_record(std::string_view line, TraceFormat format, std::size_t line_no = 1,
                             Seq default_seq = 0);

std::string serialize_record(const TelemetryRecord& record, TraceFormat format);

inline constexpr std::string_view kCsvHeader = "seq,ue,msg,rnti,tmsi,label";

Trace read_trace(std::istream& in, TraceFormat format);
Trace read_trace_file(const std::filesystem::path& path);
Trace read_trace_file(const std::filesystem::path& path, TraceFormat format);

void write_trace(std::ostream& out, const Trace& trace, TraceFormat format);

/// Writes through a sibling temporary and renames over the target.
void write_trace_file(const std::filesystem::path& path, const Trace& trace);
void write_trace_file(const std::filesystem::path& path, const Trace& trace, TraceFormat format);

/// Atomic whole-file write used by every file-producing command.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Splits a CSV line honouring RFC 4180 quotes. Throws Error{Parse} on an
/// unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view field);

}  // namespace l3det
