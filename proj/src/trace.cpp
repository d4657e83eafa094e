#include "pipesim/trace.hpp"

#include <fstream>
#include <sstream>

namespace pipesim {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::ComputeStart: return "ComputeStart";
        case EventKind::ComputeEnd: return "ComputeEnd";
        case EventKind::TransferArrive: return "TransferArrive";
        case EventKind::SwapInDone: return "SwapInDone";
        case EventKind::SwapOutDone: return "SwapOutDone";
        case EventKind::RequestAdmit: return "RequestAdmit";
        case EventKind::RequestComplete: return "RequestComplete";
    }
    return "?";
}

static bool kind_from_name(const std::string& s, EventKind& out) {
    static const std::pair<const char*, EventKind> table[] = {
        {"ComputeStart", EventKind::ComputeStart},
        {"ComputeEnd", EventKind::ComputeEnd},
        {"TransferArrive", EventKind::TransferArrive},
        {"SwapInDone", EventKind::SwapInDone},
        {"SwapOutDone", EventKind::SwapOutDone},
        {"RequestAdmit", EventKind::RequestAdmit},
        {"RequestComplete", EventKind::RequestComplete},
    };
    for (const auto& [name, kind] : table) {
        if (s == name) {
            out = kind;
            return true;
        }
    }
    return false;
}

void write_trace(std::ostream& os, const EventTrace& trace) {
    for (const Event& e : trace) {
        os << "t=" << e.time_us << " seq=" << e.seq << " kind=" << event_kind_name(e.kind)
           << " stage=" << e.stage << " mb=" << e.microbatch << " a=" << e.a << " b=" << e.b
           << " c=" << e.c << "\n";
    }
}

void write_trace_file(const std::string& path, const EventTrace& trace) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write trace file " + path);
    write_trace(out, trace);
}

static std::int64_t field(const std::string& tok, const char* key) {
    const std::string prefix = std::string(key) + "=";
    if (tok.rfind(prefix, 0) != 0) throw SimError("bad trace field: " + tok);
    return std::stoll(tok.substr(prefix.size()));
}

EventTrace read_trace(std::istream& is) {
    EventTrace trace;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string t, seq, kind, stage, mb, a, b, c;
        ls >> t >> seq >> kind >> stage >> mb >> a >> b >> c;
        Event e;
        e.time_us = field(t, "t");
        e.seq = field(seq, "seq");
        if (kind.rfind("kind=", 0) != 0 || !kind_from_name(kind.substr(5), e.kind)) {
            throw SimError("bad trace line: " + line);
        }
        e.stage = static_cast<std::int32_t>(field(stage, "stage"));
        e.microbatch = static_cast<std::int32_t>(field(mb, "mb"));
        e.a = field(a, "a");
        e.b = field(b, "b");
        e.c = field(c, "c");
        trace.push_back(e);
    }
    return trace;
}

EventTrace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot read trace file " + path);
    return read_trace(in);
}

}  // namespace pipesim
