#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dice::cli {

// command plus flat key/value settings; unset keys take documented defaults.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> values;
};

const std::vector<std::string>& commands();

// "key = value" lines, '#' starts a comment.
RunConfig parse_config_text(std::string_view text);
std::string serialize(const RunConfig& cfg);

// Rejects unknown commands and keys that do not apply to the command.
void validate(const RunConfig& cfg);

// Every key the command accepts with its default filled in.
std::map<std::string, std::string> resolved(const RunConfig& cfg);

std::string usage();

// Writes <command>-<hash>.<ext> data files and manifest.json into output_dir
// and returns the data file paths. Throws ConfigError or dice::Error.
std::vector<std::string> run(const RunConfig& cfg);

// Full command line entry point; returns the process exit code
// (0 ok, 2 config error, 3 numerical failure).
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dice::cli
