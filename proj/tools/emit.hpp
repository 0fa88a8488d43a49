#ifndef TURNPIKE_TOOLS_EMIT_HPP
#define TURNPIKE_TOOLS_EMIT_HPP

#include <cstdio>
#include <string>
#include <vector>

namespace turnpike::emit {

/// 17-significant-digit rendering; reruns are byte-identical.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

/// Minimal ordered JSON builder: values are preformatted strings.
class Object {
  public:
    Object& field(const std::string& key, const std::string& raw) {
        entries_.emplace_back(key, raw);
        return *this;
    }
    Object& number(const std::string& key, double v) { return field(key, num(v)); }
    Object& integer(const std::string& key, long long v) { return field(key, std::to_string(v)); }
    Object& text(const std::string& key, const std::string& s) { return field(key, quoted(s)); }
    Object& boolean(const std::string& key, bool b) { return field(key, b ? "true" : "false"); }

    std::string str(int indent = 0) const {
        const std::string pad(indent + 2, ' ');
        std::string out = "{\n";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out += pad + quoted(entries_[i].first) + ": " + entries_[i].second;
            out += i + 1 < entries_.size() ? ",\n" : "\n";
        }
        out += std::string(indent, ' ') + "}";
        return out;
    }

    std::string compact() const {
        std::string out = "{";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out += quoted(entries_[i].first) + ": " + entries_[i].second;
            if (i + 1 < entries_.size()) out += ", ";
        }
        out += "}";
        return out;
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::string array(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += items[i];
        if (i + 1 < items.size()) out += ", ";
    }
    out += "]";
    return out;
}

inline std::string array_of_numbers(const std::vector<double>& v) {
    std::vector<std::string> items;
    items.reserve(v.size());
    for (double d : v) items.push_back(num(d));
    return array(items);
}

} // namespace turnpike::emit

#endif
