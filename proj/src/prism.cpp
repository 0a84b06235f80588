// PRISM `pta` export and the matching subset reader.

#include "prtspace/textio.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace prtspace {

namespace {

std::string guard_text(const PtaModule& m, const PtaCommand& cmd) {
    std::string g = m.location_var + "=" + std::to_string(cmd.location);
    for (const auto& c : cmd.clock_guard) {
        g += "&" + c.clock + (c.rel == ClockRel::Ge ? ">=" : "<=");
        g += c.constant.empty() ? std::to_string(c.value) : c.constant;
    }
    return g;
}

std::string update_text(const PtaModule& m, const PtaUpdate& u) {
    std::string s = "(" + m.location_var + "'=" + std::to_string(u.location) + ")";
    for (const auto& r : u.resets) s += "&(" + r + "'=0)";
    for (const auto& [f, v] : u.flags) s += "&(" + f + "'=" + (v ? "true" : "false") + ")";
    return s;
}

}  // namespace

std::string export_prism(const PtaNetwork& network) {
    validate_network(network);
    std::ostringstream out;
    out << "pta\n";
    if (!network.tick_constants.empty()) out << "\n";
    for (size_t i = 0; i < network.tick_constants.size(); ++i) {
        const auto& c = network.tick_constants[i];
        out << "const int " << c.name << " = " << c.value << ";" << (i == 0 ? " // time unit 0.0001 s" : "") << "\n";
    }
    for (size_t i = 0; i < network.prob_constants.size(); ++i) {
        const auto& c = network.prob_constants[i];
        out << "const double " << c.name << " = " << to_exact_string(c.value) << ";"
            << (i == 0 ? " // accumulative probability" : "") << "\n";
    }
    for (const auto& m : network.modules) {
        out << "\nmodule " << m.name << "\n";
        out << "  " << m.location_var << " : [0.." << m.max_location << "] init 0;\n";
        for (const auto& c : m.clocks) out << "  " << c << " : clock;\n";
        for (const auto& f : m.flags) out << "  " << f << " : bool init false;\n";
        for (const auto& cmd : m.commands) {
            out << "  [" << cmd.label << "] " << guard_text(m, cmd) << " -> ";
            if (cmd.branches.size() == 1 && cmd.branches.front().prob == 1) {
                out << update_text(m, cmd.branches.front().update);
            } else {
                for (size_t b = 0; b < cmd.branches.size(); ++b)
                    out << (b ? " + " : "") << to_exact_string(cmd.branches[b].prob) << " : "
                        << update_text(m, cmd.branches[b].update);
            }
            out << ";\n";
        }
        out << "endmodule\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Reader

namespace {

std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::string strip_spaces(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

class PrismReader {
public:
    explicit PrismReader(std::string_view text) {
        std::string line;
        std::istringstream in{std::string(text)};
        while (std::getline(in, line)) {
            if (auto c = line.find("//"); c != std::string::npos) line.erase(c);
            lines_.push_back(trim(line));
        }
    }

    PtaNetwork read() {
        size_t i = skip_blank(0);
        if (i >= lines_.size() || lines_[i] != "pta") fail(i, "expected 'pta'");
        for (++i; (i = skip_blank(i)) < lines_.size();) {
            const std::string& l = lines_[i];
            if (l.rfind("const int ", 0) == 0) {
                auto [name, value] = constant(i, l.substr(10));
                try {
                    size_t used = 0;
                    long long v = std::stoll(value, &used);
                    if (used != value.size()) throw std::invalid_argument("");
                    ticks_[name] = v;
                    net_.tick_constants.push_back({name, v});
                } catch (const std::exception&) {
                    fail(i, "malformed integer '" + value + "'");
                }
                ++i;
            } else if (l.rfind("const double ", 0) == 0) {
                auto [name, value] = constant(i, l.substr(13));
                net_.prob_constants.push_back({name, probability(i, value)});
                ++i;
            } else if (l.rfind("module ", 0) == 0) {
                i = module(i);
            } else {
                fail(i, "expected a constant or a module");
            }
        }
        std::set<std::string> labels;
        for (const auto& m : net_.modules)
            for (const auto& l : m.alphabet()) labels.insert(l);
        net_.sync_alphabet.assign(labels.begin(), labels.end());
        try {
            validate_network(net_);
        } catch (const ModelError& e) {
            throw PrismFormatError(e.what(), 0);
        }
        return std::move(net_);
    }

private:
    [[noreturn]] void fail(size_t i, const std::string& what) const {
        throw PrismFormatError("line " + std::to_string(i + 1) + ": " + what, i + 1);
    }

    size_t skip_blank(size_t i) const {
        while (i < lines_.size() && lines_[i].empty()) ++i;
        return i;
    }

    std::pair<std::string, std::string> constant(size_t i, const std::string& rest) {
        auto eq = rest.find('=');
        if (eq == std::string::npos || rest.empty() || rest.back() != ';') fail(i, "malformed constant");
        std::string name = trim(rest.substr(0, eq));
        if (!is_identifier(name)) fail(i, "bad constant name '" + name + "'");
        return {name, trim(rest.substr(eq + 1, rest.size() - eq - 2))};
    }

    Probability probability(size_t i, const std::string& text) {
        try {
            return parse_probability(text);
        } catch (const NumberFormatError& e) {
            fail(i, e.what());
        }
    }

    size_t module(size_t i) {
        PtaModule m;
        m.name = trim(lines_[i].substr(7));
        if (!is_identifier(m.name)) fail(i, "bad module name");
        for (++i;; ++i) {
            if (i >= lines_.size()) fail(i - 1, "missing 'endmodule'");
            std::string l = lines_[i];
            if (l.empty()) continue;
            if (l == "endmodule") break;
            size_t start = i;
            while (l.back() != ';') {
                if (++i >= lines_.size()) fail(start, "unterminated declaration");
                l += " " + lines_[i];
            }
            l.pop_back();
            if (l.front() == '[') command(start, m, l);
            else declaration(start, m, l);
        }
        net_.modules.push_back(std::move(m));
        return i + 1;
    }

    void declaration(size_t i, PtaModule& m, const std::string& l) {
        auto colon = l.find(':');
        if (colon == std::string::npos) fail(i, "expected a variable declaration");
        std::string name = trim(l.substr(0, colon)), type = strip_spaces(l.substr(colon + 1));
        if (!is_identifier(name)) fail(i, "bad variable name");
        if (type == "clock") {
            m.clocks.push_back(name);
        } else if (type == "boolinitfalse") {
            m.flags.push_back(name);
        } else if (type.rfind("[0..", 0) == 0 && type.size() > 10 && type.substr(type.size() - 6) == "]init0") {
            if (!m.location_var.empty()) fail(i, "second location variable");
            m.location_var = name;
            try {
                m.max_location = std::stoi(type.substr(4, type.size() - 10));
            } catch (const std::exception&) {
                fail(i, "bad location range");
            }
        } else {
            fail(i, "unsupported variable type");
        }
    }

    Tick bound(size_t i, const std::string& text, std::string& constant) {
        if (is_identifier(text)) {
            auto it = ticks_.find(text);
            if (it == ticks_.end()) fail(i, "undeclared constant '" + text + "'");
            constant = text;
            return it->second;
        }
        try {
            size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used == text.size()) return v;
        } catch (const std::exception&) {
        }
        fail(i, "bad clock bound '" + text + "'");
    }

    PtaUpdate update(size_t i, const PtaModule& m, const std::string& text) {
        PtaUpdate u;
        bool have_location = false;
        for (const auto& part : split_top(text, '&')) {
            if (part.size() < 2 || part.front() != '(' || part.back() != ')') fail(i, "bad update '" + part + "'");
            std::string a = part.substr(1, part.size() - 2);
            auto eq = a.find("'=");
            if (eq == std::string::npos) fail(i, "bad assignment '" + a + "'");
            std::string var = a.substr(0, eq), val = a.substr(eq + 2);
            if (var == m.location_var) {
                try {
                    u.location = std::stoi(val);
                } catch (const std::exception&) {
                    fail(i, "bad location '" + val + "'");
                }
                have_location = true;
            } else if (std::find(m.clocks.begin(), m.clocks.end(), var) != m.clocks.end()) {
                if (val != "0") fail(i, "clocks may only be reset to 0");
                u.resets.push_back(var);
            } else if (val == "true" || val == "false") {
                u.flags.push_back({var, val == "true"});
            } else {
                fail(i, "unknown variable '" + var + "'");
            }
        }
        if (!have_location) fail(i, "update does not assign " + m.location_var);
        return u;
    }

    void command(size_t i, PtaModule& m, const std::string& l) {
        PtaCommand cmd;
        auto close = l.find(']');
        if (close == std::string::npos) fail(i, "missing ']'");
        cmd.label = trim(l.substr(1, close - 1));
        if (!cmd.label.empty() && !is_identifier(cmd.label)) fail(i, "bad label");
        std::string rest = strip_spaces(l.substr(close + 1));
        auto arrow = rest.find("->");
        if (arrow == std::string::npos) fail(i, "missing '->'");
        auto conjuncts = split_top(rest.substr(0, arrow), '&');
        for (size_t k = 0; k < conjuncts.size(); ++k) {
            const std::string& c = conjuncts[k];
            if (k == 0) {
                std::string prefix = m.location_var + "=";
                if (c.rfind(prefix, 0) != 0) fail(i, "guard must start with " + prefix);
                try {
                    cmd.location = std::stoi(c.substr(prefix.size()));
                } catch (const std::exception&) {
                    fail(i, "bad guard location");
                }
                continue;
            }
            auto op = c.find_first_of("<>");
            if (op == std::string::npos || op + 1 >= c.size() || c[op + 1] != '=') fail(i, "bad clock constraint '" + c + "'");
            ClockConstraint cc;
            cc.clock = c.substr(0, op);
            cc.rel = c[op] == '>' ? ClockRel::Ge : ClockRel::Le;
            cc.value = bound(i, c.substr(op + 2), cc.constant);
            cmd.clock_guard.push_back(cc);
        }
        std::string rhs = rest.substr(arrow + 2);
        auto alternatives = split_top(rhs, '+');
        if (alternatives.size() == 1 && !rhs.empty() && rhs.front() == '(') {
            cmd.branches.push_back({Probability(1), update(i, m, rhs)});
        } else {
            for (const auto& alt : alternatives) {
                auto colon = alt.find(':');
                if (colon == std::string::npos) fail(i, "expected 'p : update'");
                cmd.branches.push_back({probability(i, alt.substr(0, colon)), update(i, m, alt.substr(colon + 1))});
            }
        }
        m.commands.push_back(std::move(cmd));
    }

    std::vector<std::string> lines_;
    std::map<std::string, Tick> ticks_;
    PtaNetwork net_;
};

}  // namespace

PtaNetwork read_prism(std::string_view text) { return PrismReader(text).read(); }

}  // namespace prtspace
