#include "pivotal/error.hpp"

namespace pivotal {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SerializeInvalid: return "SERIALIZE_INVALID";
        case ErrorCode::IndexOutOfRange: return "INDEX_OUT_OF_RANGE";
        case ErrorCode::LexiconMalformed: return "LEXICON_MALFORMED";
        case ErrorCode::GroupTooSmall: return "GROUP_TOO_SMALL";
        case ErrorCode::MisalignedLogprobs: return "MISALIGNED_LOGPROBS";
        case ErrorCode::EmptyDemos: return "EMPTY_DEMOS";
        case ErrorCode::MissingUpstreamOutput: return "MISSING_UPSTREAM_OUTPUT";
        case ErrorCode::EmptyCorpus: return "EMPTY_CORPUS";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
        case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN_ERROR";
}

}  // namespace pivotal
