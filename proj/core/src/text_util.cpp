#include "text_util.hpp"

namespace pivotal::detail {

CodePoint decode_utf8(std::string_view text, std::size_t pos) {
    const auto byte = static_cast<unsigned char>(text[pos]);
    if (byte < 0x80) {
        return {byte, 1};
    }
    std::size_t len = 0;
    std::uint32_t value = 0;
    if ((byte & 0xE0) == 0xC0) {
        len = 2;
        value = byte & 0x1F;
    } else if ((byte & 0xF0) == 0xE0) {
        len = 3;
        value = byte & 0x0F;
    } else if ((byte & 0xF8) == 0xF0) {
        len = 4;
        value = byte & 0x07;
    } else {
        return {byte, 1};  // stray continuation byte
    }
    if (pos + len > text.size()) {
        return {byte, 1};
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto cont = static_cast<unsigned char>(text[pos + i]);
        if ((cont & 0xC0) != 0x80) {
            return {byte, 1};
        }
        value = (value << 6) | (cont & 0x3F);
    }
    return {value, len};
}

std::string fold_and_collapse(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char c = text[pos];
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            ++pos;
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        const auto byte = static_cast<unsigned char>(c);
        if (byte < 0x80) {
            out += ascii_lower(c);
            ++pos;
            continue;
        }
        const CodePoint cp = decode_utf8(text, pos);
        if (cp.value == 0x212A) {
            out += 'k';
        } else if (cp.value == 0x017F) {
            out += 's';
        } else {
            out.append(text.substr(pos, cp.length));
        }
        pos += cp.length;
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    return out;
}

std::string_view trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_ascii_space(text[begin])) ++begin;
    while (end > begin && is_ascii_space(text[end - 1])) --end;
    return text.substr(begin, end - begin);
}

}  // namespace pivotal::detail
