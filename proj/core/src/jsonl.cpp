#include "pivotal/jsonl.hpp"

#include <fstream>

#include "json.hpp"
#include "pivotal/error.hpp"

namespace pivotal {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read file: " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write file: " + path.string());
    }
    for (const auto& line : lines) {
        out << line << '\n';
    }
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed: " + path.string());
    }
}

TraceLineResult parse_trace_line(const std::string& line) {
    TraceLineResult result;
    try {
        const auto parsed = nlohmann::json::parse(line);
        if (!parsed.is_object()) {
            result.error = "line is not a JSON object";
            return result;
        }
        RawTrace trace;
        trace.id = parsed.at("id").get<std::string>();
        trace.response = parsed.at("response").get<std::string>();
        trace.prompt = parsed.value("prompt", std::string{});
        trace.ground_truth = parsed.value("ground_truth", std::string{});
        trace.group_id = parsed.value("group_id", std::string{});
        if (trace.id.empty()) {
            result.error = "id must be non-empty";
            return result;
        }
        if (trace.response.empty()) {
            result.error = "response must be non-empty";
            return result;
        }
        result.trace = std::move(trace);
    } catch (const nlohmann::json::exception& e) {
        result.error = e.what();
    }
    return result;
}

PgcotLineResult parse_pgcot_line(const std::string& line) {
    PgcotLineResult result;
    try {
        const auto parsed = nlohmann::json::parse(line);
        if (!parsed.is_object()) {
            result.error = "line is not a JSON object";
            return result;
        }
        PgcotRecord record;
        record.image_ref = parsed.at("image_ref").get<std::string>();
        record.question = parsed.at("question").get<std::string>();
        record.original_cot = parsed.at("original_cot").get<std::string>();
        record.description = parsed.value("description", std::string{});
        record.suggestions = parsed.value("suggestions", std::string{});
        record.enhanced_cot = parsed.value("enhanced_cot", std::string{});
        result.record = std::move(record);
    } catch (const nlohmann::json::exception& e) {
        result.error = e.what();
    }
    return result;
}

std::string pgcot_record_to_json(const PgcotRecord& record) {
    ordered_json out;
    out["image_ref"] = record.image_ref;
    out["question"] = record.question;
    out["original_cot"] = record.original_cot;
    out["description"] = record.description;
    out["suggestions"] = record.suggestions;
    out["enhanced_cot"] = record.enhanced_cot;
    out["valid"] = record.valid;
    out["violations"] = record.violations;
    out["unchecked_constraints"] = record.unchecked_constraints;
    return out.dump();
}

std::string scored_trace_to_json(const ScoredTrace& scored) {
    ordered_json out;
    out["id"] = scored.id;
    out["r_acc"] = scored.breakdown.r_acc;
    out["r_form"] = scored.breakdown.r_form;
    out["r_pivot"] = scored.breakdown.r_pivot;
    out["r_len"] = scored.breakdown.r_len;
    out["r_total"] = scored.breakdown.r_total;
    out["m"] = scored.breakdown.m;
    out["m_coupled"] = scored.breakdown.m_coupled;
    out["m_excess"] = scored.breakdown.m_excess;
    out["s_pivot"] = scored.breakdown.s_pivot;
    out["length_tokens"] = scored.breakdown.length_tokens;
    out["delta_l"] = scored.breakdown.delta_l;
    if (scored.advantage) {
        out["advantage"] = *scored.advantage;
    }
    if (scored.group_kept) {
        out["group_kept"] = *scored.group_kept;
    }
    return out.dump();
}

std::string error_record_to_json(std::size_t line_number, const std::string& message) {
    ordered_json out;
    out["line"] = line_number;
    out["error"] = message;
    return out.dump();
}

}  // namespace pivotal
