#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace s3t::cli {

struct KeySpec {
    const char* section;
    const char* name;
    const char* fallback;  // "" means unset
    const char* help;
};

/// Every recognized configuration key. Flags are --name with '_' as '-'.
const std::vector<KeySpec>& config_keys();

/// Resolved settings: built-in defaults, then the INI file, then flags.
class Config {
public:
    Config();

    /// INI file with [model], [detection], [experiment] and [io] sections.
    /// Unknown sections or keys are input errors naming the key.
    void load_ini(const std::string& path);
    void set(const std::string& name, const std::string& value);

    bool has(const std::string& name) const;
    const std::string& str(const std::string& name) const;
    double number(const std::string& name) const;
    long integer(const std::string& name) const;
    bool flag(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
    std::optional<double> maybe_number(const std::string& name) const;

    /// section.name -> value for every set key.
    std::map<std::string, std::string> echo() const;

private:
    const KeySpec& spec(const std::string& name) const;

    std::map<std::string, std::string> values_;
};

}  // namespace s3t::cli
