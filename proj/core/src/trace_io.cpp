#include "l3det/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "l3det/error.hpp"
#include "l3det/utf8.hpp"

namespace l3det {

namespace {

using nlohmann::json;

template <typename T>
T json_identifier(const json& obj, const char* field, std::size_t line_no) {
    const auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(line_no, field, "missing mandatory field");
    if (!it->is_number_integer()) throw ParseError(line_no, field, "non-numeric identifier");
    if (it->is_number_unsigned()) {
        const auto v = it->get<std::uint64_t>();
        if (v > std::numeric_limits<T>::max()) {
            throw ParseError(line_no, field,
                             std::string(field) + " out of " +
                                 std::to_string(std::numeric_limits<T>::digits) + "-bit range");
        }
        return static_cast<T>(v);
    }
    const auto v = it->get<std::int64_t>();
    if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<T>::max()) {
        throw ParseError(line_no, field,
                         std::string(field) + " out of " +
                             std::to_string(std::numeric_limits<T>::digits) + "-bit range");
    }
    return static_cast<T>(v);
}

std::string json_text(const json& obj, const char* field, std::size_t line_no) {
    const auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(line_no, field, "missing mandatory field");
    if (!it->is_string()) throw ParseError(line_no, field, "expected a string");
    return it->get<std::string>();
}

template <typename T>
T csv_number(std::string_view text, const char* field, std::size_t line_no) {
    if (text.empty()) throw ParseError(line_no, field, "missing mandatory field");
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc::result_out_of_range) {
        throw ParseError(line_no, field,
                         std::string(field) + " out of " +
                             std::to_string(std::numeric_limits<T>::digits) + "-bit range");
    }
    if (ec != std::errc{} || ptr != end) throw ParseError(line_no, field, "non-numeric identifier");
    if (v > std::numeric_limits<T>::max()) {
        throw ParseError(line_no, field,
                         std::string(field) + " out of " +
                             std::to_string(std::numeric_limits<T>::digits) + "-bit range");
    }
    return static_cast<T>(v);
}

MessageType message_type_field(std::string raw, std::size_t line_no) {
    if (raw.empty()) throw ParseError(line_no, "msg", "empty message type");
    try {
        (void)utf8::decode(raw);
    } catch (const Error& e) {
        throw ParseError(line_no, "msg", e.what());
    }
    return MessageType::canonicalize(raw);
}

GroundTruth label_field(const std::string& raw, std::size_t line_no) {
    if (raw.empty()) throw ParseError(line_no, "label", "empty label");
    return GroundTruth::from_text(raw);
}

TelemetryRecord parse_json_line(std::string_view line, std::size_t line_no, Seq default_seq) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "<record>", "expected a JSON object");

    TelemetryRecord r;
    r.msg_type = message_type_field(json_text(obj, "msg", line_no), line_no);
    r.rnti = Rnti{json_identifier<std::uint16_t>(obj, "rnti", line_no)};
    r.tmsi = Tmsi{json_identifier<std::uint32_t>(obj, "tmsi", line_no)};
    r.ue_id = json_text(obj, "ue", line_no);
    r.label = label_field(json_text(obj, "label", line_no), line_no);
    r.seq = obj.contains("seq") ? json_identifier<std::uint64_t>(obj, "seq", line_no) : default_seq;
    return r;
}

TelemetryRecord parse_csv_line(std::string_view line, std::size_t line_no, Seq default_seq) {
    std::vector<std::string> f;
    try {
        f = split_csv_line(line);
    } catch (const Error& e) {
        throw ParseError(line_no, "<record>", e.what());
    }
    static constexpr const char* kFields[] = {"seq", "ue", "msg", "rnti", "tmsi", "label"};
    if (f.size() < 6) throw ParseError(line_no, kFields[f.size()], "missing mandatory field");

    TelemetryRecord r;
    r.seq = f[0].empty() ? default_seq : csv_number<std::uint64_t>(f[0], "seq", line_no);
    r.ue_id = f[1];
    r.msg_type = message_type_field(f[2], line_no);
    r.rnti = Rnti{csv_number<std::uint16_t>(f[3], "rnti", line_no)};
    r.tmsi = Tmsi{csv_number<std::uint32_t>(f[4], "tmsi", line_no)};
    r.label = label_field(f[5], line_no);
    return r;
}

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

TraceFormat format_for_path(const std::filesystem::path& path) noexcept {
    return path.extension() == ".csv" ? TraceFormat::Csv : TraceFormat::JsonLines;
}

TelemetryRecord parse_record(std::string_view line, TraceFormat format, std::size_t line_no,
                             Seq default_seq) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return format == TraceFormat::JsonLines ? parse_json_line(line, line_no, default_seq)
                                            : parse_csv_line(line, line_no, default_seq);
}

std::string serialize_record(const TelemetryRecord& r, TraceFormat format) {
    if (format == TraceFormat::JsonLines) {
        nlohmann::ordered_json obj;
        obj["seq"] = r.seq;
        obj["ue"] = r.ue_id;
        obj["msg"] = std::string(r.msg_type.name());
        obj["rnti"] = r.rnti.value;
        obj["tmsi"] = r.tmsi.value;
        obj["label"] = r.label.to_text();
        return obj.dump();
    }
    std::string out = std::to_string(r.seq);
    out += ',';
    out += csv_field(r.ue_id);
    out += ',';
    out += csv_field(r.msg_type.name());
    out += ',';
    out += std::to_string(r.rnti.value);
    out += ',';
    out += std::to_string(r.tmsi.value);
    out += ',';
    out += csv_field(r.label.to_text());
    return out;
}

Trace read_trace(std::istream& in, TraceFormat format) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        if (format == TraceFormat::Csv && !header_seen) {
            header_seen = true;
            std::string_view h = line;
            if (!h.empty() && h.back() == '\r') h.remove_suffix(1);
            if (h != kCsvHeader) {
                throw ParseError(line_no, "<header>",
                                 "expected header '" + std::string(kCsvHeader) + "'");
            }
            continue;
        }
        trace.push_back(parse_record(line, format, line_no, static_cast<Seq>(trace.size())));
    }
    return trace;
}

Trace read_trace_file(const std::filesystem::path& path) {
    return read_trace_file(path, format_for_path(path));
}

Trace read_trace_file(const std::filesystem::path& path, TraceFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return read_trace(in, format);
}

void write_trace(std::ostream& out, const Trace& trace, TraceFormat format) {
    if (format == TraceFormat::Csv) out << kCsvHeader << '\n';
    for (const auto& r : trace) out << serialize_record(r, format) << '\n';
}

void write_trace_file(const std::filesystem::path& path, const Trace& trace) {
    write_trace_file(path, trace, format_for_path(path));
}

void write_trace_file(const std::filesystem::path& path, const Trace& trace, TraceFormat format) {
    std::ostringstream out;
    write_trace(out, trace, format);
    write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot rename onto " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw Error(ErrorKind::Parse, "unterminated quoted CSV field");
    return fields;
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace l3det
