#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pivotal/pgcot.hpp"
#include "pivotal/rewards.hpp"
#include "pivotal/trace.hpp"

namespace pivotal {

/// Splits a UTF-8 stream into lines, dropping a trailing empty line and any
/// `\r` before the newline. Throws Error(IoError) when the file is missing.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

/// JSON-lines corpus record parsers. On failure the result carries an error
/// message instead of a value, so a malformed line never aborts a batch.
struct TraceLineResult {
    std::optional<RawTrace> trace;
    std::string error;
};

TraceLineResult parse_trace_line(const std::string& line);

struct PgcotLineResult {
    std::optional<PgcotRecord> record;
    std::string error;
};

PgcotLineResult parse_pgcot_line(const std::string& line);

std::string pgcot_record_to_json(const PgcotRecord& record);

/// Serializes one score line: the breakdown fields keyed by the trace id,
/// plus optional group-relative fields filled by the scoring command.
struct ScoredTrace {
    std::string id;
    RewardBreakdown breakdown;
    std::optional<double> advantage;
    std::optional<bool> group_kept;
};

std::string scored_trace_to_json(const ScoredTrace& scored);

std::string error_record_to_json(std::size_t line_number, const std::string& message);

}  // namespace pivotal
