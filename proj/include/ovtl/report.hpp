#pragma once
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace ovtl {

// shortest text that round-trips the double
inline std::string fmt_double(double x)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s)
{
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("not a number: " + s);
    return v;
}

inline std::string trim(const std::string& s)
{
    size_t a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

// ordered "key = value" lines under a [section] header
struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    Section& set(const std::string& k, const std::string& v)
    {
        for (auto& e : entries)
            if (e.first == k) {
                e.second = v;
                return *this;
            }
        entries.emplace_back(k, v);
        return *this;
    }
    Section& set(const std::string& k, double v) { return set(k, fmt_double(v)); }
    Section& set(const std::string& k, long v) { return set(k, std::to_string(v)); }
    Section& set(const std::string& k, int v) { return set(k, std::to_string(v)); }
    Section& set(const std::string& k, unsigned long long v) { return set(k, std::to_string(v)); }
    Section& set(const std::string& k, bool v) { return set(k, std::string(v ? "true" : "false")); }
    Section& set(const std::string& k, const char* v) { return set(k, std::string(v)); }

    const std::string* find(const std::string& k) const
    {
        for (auto& e : entries)
            if (e.first == k) return &e.second;
        return nullptr;
    }
};

struct Document {
    std::vector<Section> sections;

    Section& section(const std::string& name)
    {
        for (auto& s : sections)
            if (s.name == name) return s;
        sections.push_back({name, {}});
        return sections.back();
    }
    Section& add(const std::string& name)
    {
        sections.push_back({name, {}});
        return sections.back();
    }
    const Section* find(const std::string& name) const
    {
        for (auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    std::string str() const
    {
        std::ostringstream os;
        bool first = true;
        for (auto& s : sections) {
            if (!first) os << "\n";
            first = false;
            os << "[" << s.name << "]\n";
            for (auto& e : s.entries) os << e.first << " = " << e.second << "\n";
        }
        return os.str();
    }

    static Document parse(const std::string& text)
    {
        Document d;
        std::istringstream is(text);
        std::string line;
        Section* cur = nullptr;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw FormatError("bad section header at line " + std::to_string(lineno));
                d.sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
                cur = &d.sections.back();
                continue;
            }
            size_t eq = t.find('=');
            if (eq == std::string::npos) throw FormatError("expected key = value at line " + std::to_string(lineno));
            if (!cur) cur = &d.section("");
            cur->entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
        return d;
    }

    static Document load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw FormatError("cannot read " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void save(const std::string& path) const
    {
        std::ofstream out(path);
        if (!out) throw FormatError("cannot write " + path);
        out << str();
    }
};

} // namespace ovtl
