#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace htsgd::cli {

/// Invalid configuration; key() names the offending key when there is one.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, std::string key = {}) : std::invalid_argument(what), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class ValueType { kBool, kInt, kReal, kText, kList };

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

/// One accepted key of a command.
struct KeySpec {
  std::string name;
  ValueType type;
  std::string default_text;  ///< parsed like user input
  std::string help;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

/// Commands in display order.
const std::vector<std::string>& command_names();

/// Keys accepted by `command` (shared keys first). Throws ConfigError for an
/// unknown command.
const std::vector<KeySpec>& command_schema(const std::string& command);

/// Fully resolved configuration: every schema key holds a typed value.
struct ExperimentConfig {
  std::string command;
  std::map<std::string, Value> params;

  [[nodiscard]] bool flag(const std::string& key) const;
  [[nodiscard]] std::int64_t integer(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] const std::string& text(const std::string& key) const;
  [[nodiscard]] const std::vector<double>& list(const std::string& key) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

using Entries = std::vector<std::pair<std::string, std::string>>;

/// Splits `key = value` lines. Blank lines and text after '#' are ignored;
/// a `command` key is returned separately. Throws ConfigError on a malformed
/// line or a duplicated key.
struct ParsedText {
  std::string command;
  Entries entries;
};
ParsedText split_config_text(const std::string& text);

/// Applies file entries, then flag entries (flags win), then defaults, and
/// type-checks everything against the command schema. Unknown keys and
/// malformed values raise ConfigError naming the key.
ExperimentConfig resolve_config(const std::string& command, const Entries& file_entries,
                                const Entries& flag_entries);

/// Parses a complete config text, which must name its command.
ExperimentConfig parse_config(const std::string& text);

/// Canonical text form: `command = ...` then every key in schema order.
/// parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

/// 64-bit FNV-1a of the serialized config, as 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Executes the configured experiment and writes the result (with its
/// provenance block) to the configured output, to $HTSGD_OUTPUT_DIR, or to
/// `out`. Returns one of the kExit* codes; errors are reported on `err` as a
/// one-line JSON record.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Command-line entry point: `htsgd <command> [--config FILE] [--key value ...]`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace htsgd::cli
