#pragma once

#include <filesystem>
#include <string_view>

#include "apkaudit/checks.hpp"

namespace apkaudit {

// Applies a strict key=value configuration on top of the defaults.
// Blank lines and '#' comments are ignored. Recognised keys:
//
//   lexicon.add=<word>                 lexicon.remove=<word>
//   dangerous_permissions.add=<NAME>   dangerous_permissions.remove=<NAME>
//   crypto.pbe_min_iterations=<int>    crypto.rsa_min_bits=<int>
//   crypto.aes_min_bits=<int>
//   severity.<CHECK>=<label>           e.g. severity.DS11=L
//   timeout_secs=<int>
//
// Anything else—unknown keys, missing '=', non-numeric numbers, unknown
// check names—throws ParseError(ErrorKind::ConfigError) naming the line.
CheckConfig parse_config(std::string_view text);

// parse_config over a file's contents; an unreadable path throws
// ParseError(ErrorKind::IoFailure).
CheckConfig load_config_file(const std::filesystem::path& path);

}  // namespace apkaudit
