#ifndef SAM_TEXT_HPP
#define SAM_TEXT_HPP

#include <string>
#include <vector>

namespace sam {

// Percent-encodes bytes that would break line/field tokenization:
// whitespace and control bytes, non-ASCII, '%', and ','.
std::string percent_encode(const std::string& raw);
// Decodes %XX escapes; malformed escapes are kept verbatim.
std::string percent_decode(const std::string& enc);

std::vector<std::string> split(const std::string& s, char delim);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

bool is_identifier(const std::string& s);

}  // namespace sam

#endif
