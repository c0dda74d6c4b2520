#pragma once

#include <map>
#include <optional>
#include <string>

namespace ecgmon {

// key=value configuration file: one pair per line, '#' comments, blank
// lines ignored. Keys are dotted paths, e.g. "sqa.std_threshold".
class KeyValueConfig {
public:
    KeyValueConfig() = default;
    static KeyValueConfig load(const std::string& path); // throws FormatError

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::optional<std::string> get(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace ecgmon
