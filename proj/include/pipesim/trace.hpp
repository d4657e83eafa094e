#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pipesim/types.hpp"

namespace pipesim {

enum class EventKind : std::uint8_t {
    ComputeStart,
    ComputeEnd,
    TransferArrive,
    SwapInDone,
    SwapOutDone,
    RequestAdmit,
    RequestComplete,
};

const char* event_kind_name(EventKind k);

// One simulator event. `seq` is the position in the trace and breaks all
// remaining ties, so the ordering (time, seq) is total and deterministic.
// Payload meaning by kind:
//   ComputeStart     : a=effective batch, b=decoding requests, c=global pool bytes
//   ComputeEnd       : a=effective batch, b=decoding requests, c=1 at circuit end
//   TransferArrive   : a=send time us, b=payload bytes
//   SwapInDone/Out   : a=start time us, b=bytes, c=slot (0/1)
//   RequestAdmit     : a=request id, b=prompt len, c=target output len
//   RequestComplete  : a=request id, b=tokens generated
struct Event {
    Micros time_us = 0;
    std::int64_t seq = 0;
    EventKind kind = EventKind::ComputeStart;
    std::int32_t stage = -1;
    std::int32_t microbatch = -1;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
};

using EventTrace = std::vector<Event>;

// Line-delimited log, one event per line, stable field order.
void write_trace(std::ostream& os, const EventTrace& trace);
void write_trace_file(const std::string& path, const EventTrace& trace);
EventTrace read_trace(std::istream& is);
EventTrace read_trace_file(const std::string& path);

}  // namespace pipesim
