#include "padtwin/scenario.hpp"

#include "padtwin/params_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace padtwin {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::string> words;
    for (std::string w; is >> w;) {
        words.push_back(std::move(w));
    }
    return words;
}

class LineParser {
public:
    LineParser(std::string source, int line) : source_(std::move(source)), line_(line) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ScenarioError(source_ + ":" + std::to_string(line_) + ": " + what);
    }

    double number(const std::string& text) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
            fail("expected a number, got '" + text + "'");
        }
        return v;
    }

    std::size_t zone(const std::string& text) const {
        const double z = number(text);
        if (z < 0 || z >= static_cast<double>(kZones) || z != std::floor(z)) {
            fail("zone must be 0, 1 or 2, got '" + text + "'");
        }
        return static_cast<std::size_t>(z);
    }

    void arity(const std::vector<std::string>& w, std::size_t n) const {
        if (w.size() != n) {
            fail("'" + w[0] + (w.size() > 1 ? " " + w[1] : std::string()) + "' takes " +
                 std::to_string(n - 1) + " word(s) after the action");
        }
    }

private:
    std::string source_;
    int line_;
};

protocol::Message parse_app(const std::vector<std::string>& w, const LineParser& lp) {
    if (w.size() < 2) {
        lp.fail("app needs a command");
    }
    const std::string& cmd = w[1];
    if (cmd == "auth") {
        // The secret may be omitted to send an empty attempt.
        if (w.size() > 3) {
            lp.fail("secret must be a single word");
        }
        std::string secret = w.size() == 3 ? w[2] : std::string();
        if (secret.size() > protocol::kMaxSecret) {
            lp.fail("secret longer than 32 bytes");
        }
        return protocol::Auth{std::move(secret)};
    }
    if (cmd == "level") {
        lp.arity(w, 3);
        const auto level = firmware::parse_level(w[2]);
        if (!level) {
            lp.fail("unknown heat level '" + w[2] + "'");
        }
        return protocol::SetLevel{static_cast<std::uint8_t>(*level)};
    }
    if (cmd == "timer") {
        lp.arity(w, 3);
        const double m = lp.number(w[2]);
        if (m < 0 || m > 255 || m != std::floor(m)) {
            lp.fail("timer minutes must be an integer in 0..255");
        }
        return protocol::SetTimer{static_cast<std::uint8_t>(m)};
    }
    lp.arity(w, 2);
    if (cmd == "start") return protocol::StartHeat{};
    if (cmd == "stop") return protocol::StopHeat{};
    if (cmd == "reset") return protocol::ResetLatch{};
    if (cmd == "ping") return protocol::Ping{};
    lp.fail("unknown app command '" + cmd + "'");
}

InjectFault parse_inject(const std::vector<std::string>& w, double at, const LineParser& lp) {
    if (w.size() < 3) {
        lp.fail("inject needs a fault kind and a zone");
    }
    const std::string& kind = w[1];
    const std::size_t zone = lp.zone(w[2]);
    if (kind == "stuck") {
        lp.arity(w, 4);
        return {SensorFault::stuck(zone, lp.number(w[3]), at)};
    }
    if (kind == "drift") {
        lp.arity(w, 4);
        return {SensorFault::drift(zone, lp.number(w[3]), at)};
    }
    lp.arity(w, 3);
    if (kind == "open") {
        return {SensorFault::open_circuit(zone, at)};
    }
    if (kind == "none") {
        return {SensorFault{FaultKind::None, zone, at, 0.0}};
    }
    lp.fail("unknown fault kind '" + kind + "'");
}

Event parse_event(const std::string& text, const LineParser& lp, int line) {
    auto words = split_words(text);
    const std::string at_text = words[0].substr(3);
    Event ev;
    ev.at = lp.number(at_text);
    ev.line = line;
    words.erase(words.begin());
    if (words.empty()) {
        lp.fail("event has no action");
    }
    const std::string action = words[0];
    if (action == "link") {
        lp.arity(words, 2);
        if (words[1] != "up" && words[1] != "down") {
            lp.fail("link takes 'up' or 'down'");
        }
        ev.action = LinkChange{words[1] == "up"};
    } else if (action == "app") {
        ev.action = AppCommand{parse_app(words, lp)};
    } else if (action == "inject") {
        ev.action = parse_inject(words, ev.at, lp);
    } else if (action == "set_ambient") {
        lp.arity(words, 2);
        ev.action = SetAmbient{lp.number(words[1])};
    } else {
        lp.fail("unknown action '" + action + "'");
    }
    return ev;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& source) {
    Scenario sc;
    std::ostringstream header;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw;
        if (const auto hash = text.find('#'); hash != std::string::npos) {
            text.erase(hash);
        }
        const auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        text = text.substr(first);
        LineParser lp(source, line);
        if (text.rfind("at=", 0) == 0) {
            sc.events.push_back(parse_event(text, lp, line));
        } else {
            header << text << '\n';
        }
    }

    std::istringstream hs(header.str());
    KeyValues kv;
    try {
        kv = parse_key_values(hs, source + " (header)");
        sc.duration = get_number(kv, "duration");
        sc.ambient = get_number(kv, "ambient", sc.ambient);
        sc.initial_soc = get_number(kv, "soc", sc.initial_soc);
    } catch (const ConfigError& e) {
        throw ScenarioError(e.what());
    }
    for (const auto& [key, value] : kv) {
        if (key == "name") {
            sc.name = value;
        } else if (key == "secret") {
            sc.secret = value;
        } else if (key == "expect") {
            for (const auto& word : split_words(value)) {
                const auto code = firmware::parse_anomaly(word);
                if (!code) {
                    throw ScenarioError(source + ": unknown anomaly '" + word + "' in expect");
                }
                sc.expect.push_back(*code);
            }
        } else if (key != "duration" && key != "ambient" && key != "soc") {
            throw ScenarioError(source + ": unknown header key '" + key + "'");
        }
    }
    try {
        validate(sc);
    } catch (const ScenarioError& e) {
        throw ScenarioError(source + ": " + e.what());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("cannot open " + path.string());
    }
    return parse_scenario(in, path.string());
}

void validate(const Scenario& sc) {
    if (!(sc.duration > 0) || !std::isfinite(sc.duration)) {
        throw ScenarioError("duration must be positive");
    }
    if (!(sc.initial_soc >= 0 && sc.initial_soc <= 1)) {
        throw ScenarioError("soc must be in [0, 1]");
    }
    if (!std::isfinite(sc.ambient) || sc.ambient < -40 || sc.ambient > 60) {
        throw ScenarioError("ambient must be within -40..60 C");
    }
    if (sc.secret.empty() || sc.secret.size() > protocol::kMaxSecret) {
        throw ScenarioError("secret must be 1..32 bytes");
    }
    double last = 0.0;
    for (const Event& ev : sc.events) {
        const std::string where = "line " + std::to_string(ev.line) + ": ";
        if (ev.at < 0 || ev.at > sc.duration) {
            throw ScenarioError(where + "event time outside [0, duration]");
        }
        if (ev.at < last) {
            throw ScenarioError(where + "events must be sorted by time");
        }
        last = ev.at;
        if (const auto* inj = std::get_if<InjectFault>(&ev.action); inj && inj->fault.zone >= kZones) {
            throw ScenarioError(where + "zone out of range");
        }
        if (const auto* app = std::get_if<AppCommand>(&ev.action)) {
            if (const auto* lvl = std::get_if<protocol::SetLevel>(&app->message); lvl && lvl->level > 2) {
                throw ScenarioError(where + "unknown heat level");
            }
        }
    }
}

std::string format_event(const Event& ev) {
    std::string out = "at=" + fmt(ev.at) + " ";
    std::visit(
        Overloaded{
            [&](const LinkChange& l) { out += l.up ? "link up" : "link down"; },
            [&](const SetAmbient& a) { out += "set_ambient " + fmt(a.celsius); },
            [&](const InjectFault& f) {
                const std::string zone = std::to_string(f.fault.zone);
                switch (f.fault.kind) {
                case FaultKind::Stuck: out += "inject stuck " + zone + " " + fmt(f.fault.value); break;
                case FaultKind::Drift: out += "inject drift " + zone + " " + fmt(f.fault.value); break;
                case FaultKind::OpenCircuit: out += "inject open " + zone; break;
                case FaultKind::None: out += "inject none " + zone; break;
                }
            },
            [&](const AppCommand& c) {
                std::visit(Overloaded{
                               [&](const protocol::Auth& m) { out += "app auth " + m.secret; },
                               [&](const protocol::SetLevel& m) {
                                   out += "app level " + firmware::to_string(static_cast<firmware::HeatLevel>(m.level));
                               },
                               [&](const protocol::StartHeat&) { out += "app start"; },
                               [&](const protocol::StopHeat&) { out += "app stop"; },
                               [&](const protocol::SetTimer& m) { out += "app timer " + std::to_string(m.minutes); },
                               [&](const protocol::ResetLatch&) { out += "app reset"; },
                               [&](const protocol::Ping&) { out += "app ping"; },
                               [&](const auto& m) { out += "app # unsupported " + protocol::describe(m); },
                           },
                           c.message);
            },
        },
        ev.action);
    return out;
}

}  // namespace padtwin
