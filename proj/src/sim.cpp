#include "pipesim/sim.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <sstream>

namespace pipesim {

namespace {

// Queue tie-break at equal timestamps: frees before claims.
int queue_priority(EventKind k) {
    switch (k) {
        case EventKind::ComputeEnd: return 0;
        case EventKind::TransferArrive: return 1;
        case EventKind::SwapInDone: return 2;
        case EventKind::SwapOutDone: return 3;
        case EventKind::ComputeStart: return 4;
        default: return 5;
    }
}

struct QueuedEvent {
    Micros time = 0;
    int prio = 0;
    std::int32_t stage = 0;
    std::int32_t microbatch = 0;
    std::int64_t push_seq = 0;
    EventKind kind = EventKind::ComputeStart;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
};

struct QueueOrder {
    bool operator()(const QueuedEvent& x, const QueuedEvent& y) const {
        if (x.time != y.time) return x.time > y.time;
        if (x.prio != y.prio) return x.prio > y.prio;
        if (x.stage != y.stage) return x.stage > y.stage;
        if (x.microbatch != y.microbatch) return x.microbatch > y.microbatch;
        return x.push_seq > y.push_seq;
    }
};

enum class SwapState : std::uint8_t { NotReady, Pending, Ready };

struct ReqState {
    Tokens prompt_len = 0;
    Tokens target_output = 0;
    Tokens prompt_done = 0;
    Tokens generated = 0;
    Micros admit_us = -1;
    Micros complete_us = -1;
};

struct MbState {
    std::vector<std::int64_t> slots;  // request ids, -1 = free
    bool parked = true;
    // Current circuit composition, fixed at the stage-0 compute start.
    std::int64_t eff_batch = 0;
    std::int64_t n_decode = 0;
    std::vector<std::pair<std::int64_t, Tokens>> prefill_alloc;  // (request, tokens)
    std::int64_t live = 0;
};

struct StageState {
    // plan-derived
    const CalibrationTable* cal = nullptr;
    std::int64_t layers = 0;
    Bytes page = 0;
    Bytes local_cap = 0;  // bytes resident without swapping; <0 = unlimited
    Bytes m_global = 0;
    Bytes pcie_w = 0;
    // link into the NEXT stage (ring); null when S == 1
    const LinkSpec* out_link = nullptr;

    bool busy = false;
    Micros busy_since = 0;
    Micros last_free = 0;
    std::int64_t service_count = 0;
    std::deque<std::int32_t> ready;               // arrived microbatches, FIFO
    std::vector<Micros> arrive_us;                // per mb, last arrival here
    std::vector<SwapState> swap_state;            // per mb
    std::vector<Micros> swap_done_us;             // per mb, valid when Pending
    std::vector<Bytes> swap_bytes;                // per mb, resident global bytes
    Bytes slot_bytes[2] = {0, 0};                 // occupant bytes per global slot
    Micros in_dir_free = 0;                       // PCIe directions serialize
    Micros out_dir_free = 0;
    Micros busy_acc = 0;                          // in-window accumulators
    Micros stall_acc = 0;
};

class Engine {
public:
    Engine(const PipelinePlan& plan, const Topology& topo, const WorkloadSpec& workload,
           const ModelSpec& model)
        : plan_(plan), topo_(topo), wl_(workload), model_(model), gen_(workload) {}

    SimResult execute();

private:
    const PipelinePlan& plan_;
    const Topology& topo_;
    const WorkloadSpec& wl_;
    const ModelSpec& model_;
    RequestGenerator gen_;

    std::int64_t S_ = 0;
    std::int64_t NB_ = 0;
    std::int64_t B_ = 0;
    bool offload_ = false;
    bool swaps_active_ = false;
    Micros end_us_ = 0;
    Micros w0_ = 0, w1_ = 0;

    std::vector<StageState> stages_;
    std::vector<MbState> mbs_;
    std::vector<ReqState> reqs_;
    std::deque<std::int64_t> admit_queue_;
    std::deque<std::int32_t> parked_;

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, QueueOrder> queue_;
    std::int64_t push_seq_ = 0;
    EventTrace trace_;

    Tokens n_in_window_ = 0;
    Tokens n_out_window_ = 0;
    std::int64_t completed_window_ = 0;
    std::int64_t completed_total_ = 0;
    std::int64_t admitted_total_ = 0;

    void push(Micros t, EventKind k, std::int32_t stage, std::int32_t mb, std::int64_t a = 0,
              std::int64_t b = 0, std::int64_t c = 0) {
        queue_.push({t, queue_priority(k), stage, mb, push_seq_++, k, a, b, c});
    }
    void log(Micros t, EventKind k, std::int32_t stage, std::int32_t mb, std::int64_t a = 0,
             std::int64_t b = 0, std::int64_t c = 0) {
        trace_.push_back({t, static_cast<std::int64_t>(trace_.size()), k, stage, mb, a, b, c});
    }
    Micros window_overlap(Micros s, Micros e) const {
        const Micros lo = std::max(s, w0_);
        const Micros hi = std::min(e, w1_);
        return hi > lo ? hi - lo : 0;
    }
    bool in_window(Micros t) const { return t >= w0_ && t < w1_; }

    void validate_against_topology() const;
    void init_state();
    void admit_into(std::int32_t mb, Micros now);
    void wake_parked(Micros now);
    Bytes mb_pages_bytes(std::int32_t mb, std::int64_t stage) const;
    Bytes global_portion(std::int32_t mb, std::int64_t stage) const;
    std::int32_t next_active_after(std::int32_t mb) const;
    void issue_swap_in(std::int64_t s, std::int32_t target, int slot, Micros now);
    void try_start(std::int64_t s, Micros now);
    void begin_circuit(std::int32_t mb);
    void on_compute_start(const QueuedEvent& e);
    void on_compute_end(const QueuedEvent& e);
    void on_transfer_arrive(const QueuedEvent& e);
    void send_onward(std::int32_t mb, std::int64_t from_stage, Micros now);
    SimReport build_report() const;
};

void Engine::validate_against_topology() const {
    if (plan_.stages.empty()) throw SimError("plan has no stages");
    if (plan_.n_microbatches < 1) throw SimError("plan has no microbatches");
    if (plan_.batch_size() < 1) throw SimError("plan batch size must be >= 1");
    for (const auto& sp : plan_.stages) {
        if (!topo_.find_node(sp.node_id)) {
            throw SimError("plan/topology mismatch: node " + sp.node_id + " not in topology");
        }
    }
    for (const auto& l : plan_.ring_links) {
        const LinkSpec* t = topo_.find_link(l.src, l.dst);
        if (!t || t->latency_us != l.latency_us ||
            t->bandwidth_bytes_per_s != l.bandwidth_bytes_per_s) {
            throw SimError("plan/topology mismatch: ring link " + l.src + "->" + l.dst +
                           " differs from topology");
        }
    }
    const size_t want = plan_.stages.size() > 1 ? plan_.stages.size() : 0;
    if (plan_.ring_links.size() != want) {
        throw SimError("plan/topology mismatch: expected " + std::to_string(want) +
                       " ring links, have " + std::to_string(plan_.ring_links.size()));
    }
}

void Engine::init_state() {
    S_ = plan_.n_stages();
    NB_ = plan_.n_microbatches;
    B_ = plan_.batch_size();
    offload_ = plan_.offload_enabled;
    swaps_active_ = offload_ && NB_ > 2;
    end_us_ = wl_.bench_duration_s * 1'000'000;
    w0_ = wl_.warmup_s * 1'000'000;
    w1_ = end_us_;

    stages_.resize(S_);
    for (std::int64_t i = 0; i < S_; ++i) {
        const StagePlan& sp = plan_.stages[i];
        StageState& st = stages_[i];
        const NodeSpec* node = topo_.find_node(sp.node_id);
        st.cal = &node->calibration;
        st.layers = sp.layers.size();
        st.page = page_bytes(model_, {sp.layers.size(), model_.num_layers});
        st.m_global = sp.budget.m_global_pool;
        st.local_cap = swaps_active_ ? sp.budget.local_pool_bytes() : -1;
        st.pcie_w = sp.pcie_bandwidth_bytes_per_s;
        st.out_link = S_ > 1 ? &plan_.ring_links[i] : nullptr;
        st.arrive_us.assign(NB_, 0);
        st.swap_state.assign(NB_, SwapState::NotReady);
        st.swap_done_us.assign(NB_, 0);
        st.swap_bytes.assign(NB_, 0);
    }

    mbs_.resize(NB_);
    for (auto& mb : mbs_) mb.slots.assign(B_, -1);

    for (std::int64_t i = 0; i < wl_.concurrency_target && !gen_.exhausted(); ++i) {
        Request r = gen_.next();
        if (r.prompt_len < 0) break;
        reqs_.push_back({r.prompt_len, r.target_output_len, 0, 0, -1, -1});
        admit_queue_.push_back(r.request_id);
    }

    for (std::int32_t m = 0; m < NB_; ++m) {
        admit_into(m, 0);
        if (mbs_[m].live > 0) {
            mbs_[m].parked = false;
            stages_[0].arrive_us[m] = 0;
            stages_[0].ready.push_back(m);
            log(0, EventKind::TransferArrive, 0, m, 0, 0);
        } else {
            parked_.push_back(m);
        }
    }
    try_start(0, 0);
}

// Fills free slots from the admission queue; zero-work requests complete on
// the spot and trigger their replenishment.
void Engine::admit_into(std::int32_t mb, Micros now) {
    MbState& m = mbs_[mb];
    for (auto& slot : m.slots) {
        if (slot != -1) continue;
        while (slot == -1 && !admit_queue_.empty()) {
            const std::int64_t rid = admit_queue_.front();
            admit_queue_.pop_front();
            ReqState& r = reqs_[rid];
            r.admit_us = now;
            admitted_total_++;
            if (in_window(now)) n_in_window_ += r.prompt_len;
            log(now, EventKind::RequestAdmit, -1, mb, rid, r.prompt_len, r.target_output);
            if (r.prompt_len == 0 && r.target_output == 0) {
                r.complete_us = now;
                completed_total_++;
                if (in_window(now)) completed_window_++;
                log(now, EventKind::RequestComplete, -1, mb, rid, 0);
                if (!gen_.exhausted()) {
                    Request nr = gen_.next();
                    if (nr.prompt_len >= 0) {
                        reqs_.push_back({nr.prompt_len, nr.target_output_len, 0, 0, -1, -1});
                        admit_queue_.push_back(nr.request_id);
                    }
                }
                continue;
            }
            slot = rid;
            m.live++;
        }
        if (admit_queue_.empty() && slot == -1) break;
    }
}

void Engine::wake_parked(Micros now) {
    while (!parked_.empty() && !admit_queue_.empty()) {
        const std::int32_t mb = parked_.front();
        admit_into(mb, now);
        if (mbs_[mb].live == 0) break;  // queue drained by zero-work churn
        parked_.pop_front();
        mbs_[mb].parked = false;
        // Re-enters the ring at stage 0 over the return link.
        Micros hop = 0;
        if (S_ > 1) {
            const LinkSpec& l = plan_.ring_links.back();
            const Bytes payload = mbs_[mb].live * plan_.policy.hidden_bytes_per_token;
            hop = l.latency_us + ceil_div(payload * 1'000'000, l.bandwidth_bytes_per_s);
        }
        push(now + hop, EventKind::TransferArrive, 0, mb, now,
             mbs_[mb].live * plan_.policy.hidden_bytes_per_token);
    }
}

Bytes Engine::mb_pages_bytes(std::int32_t mb, std::int64_t stage) const {
    std::int64_t pages = 0;
    for (const std::int64_t rid : mbs_[mb].slots) {
        if (rid == -1) continue;
        const ReqState& r = reqs_[rid];
        const Tokens toks = r.prompt_done + r.generated;
        if (toks > 0) pages += ceil_div(toks, kPageTokens);
    }
    return pages * stages_[stage].page;
}

Bytes Engine::global_portion(std::int32_t mb, std::int64_t stage) const {
    const StageState& st = stages_[stage];
    if (st.local_cap < 0) return 0;
    const Bytes bytes = mb_pages_bytes(mb, stage);
    const Bytes portion = bytes - st.local_cap;
    if (portion <= 0) return 0;
    if (portion > st.m_global) {
        throw SimError("microbatch KV exceeds local pool + global pool at stage " +
                       std::to_string(stage) + " (admission sizing bug)");
    }
    return portion;
}

std::int32_t Engine::next_active_after(std::int32_t mb) const {
    for (std::int64_t k = 1; k <= NB_; ++k) {
        const std::int32_t cand = static_cast<std::int32_t>((mb + k) % NB_);
        if (!mbs_[cand].parked) return cand;
    }
    return -1;
}

void Engine::issue_swap_in(std::int64_t s, std::int32_t target, int slot, Micros now) {
    StageState& st = stages_[s];
    // Evict the slot's current occupant (full duplex: out and in overlap).
    const Bytes out_bytes = st.slot_bytes[slot];
    if (out_bytes > 0) {
        const Micros start = std::max(now, st.out_dir_free);
        const Micros done = start + ceil_div(out_bytes * 1'000'000, st.pcie_w);
        st.out_dir_free = done;
        push(done, EventKind::SwapOutDone, static_cast<std::int32_t>(s), -1, start, out_bytes,
             slot);
    }
    const Bytes in_bytes = global_portion(target, s);
    st.slot_bytes[slot] = in_bytes;
    st.swap_bytes[target] = in_bytes;
    if (in_bytes == 0) {
        st.swap_state[target] = SwapState::Ready;
        return;
    }
    const Micros start = std::max(now, st.in_dir_free);
    const Micros done = start + ceil_div(in_bytes * 1'000'000, st.pcie_w);
    st.in_dir_free = done;
    st.swap_state[target] = SwapState::Pending;
    st.swap_done_us[target] = done;
    push(done, EventKind::SwapInDone, static_cast<std::int32_t>(s), target, start, in_bytes,
         slot);
}

void Engine::try_start(std::int64_t s, Micros now) {
    StageState& st = stages_[s];
    if (st.busy || st.ready.empty()) return;
    const std::int32_t mb = st.ready.front();

    Micros start = now;
    if (swaps_active_) {
        if (st.swap_state[mb] == SwapState::NotReady) {
            // No prefetch covered this service (first circuits, post-park);
            // swap in on demand using the slot this service will occupy.
            issue_swap_in(s, mb, static_cast<int>(st.service_count % 2), now);
        }
        if (st.swap_state[mb] == SwapState::Pending) {
            // try_start runs at every state change, so the stall begins now.
            const Micros done = st.swap_done_us[mb];
            if (done > now) {
                st.stall_acc += window_overlap(now, done);
                start = done;
            }
        }
    }
    st.ready.pop_front();
    st.busy = true;  // reserved from now on; the start event may be in the future
    if (s == 0) begin_circuit(mb);
    const std::int64_t g = swaps_active_ ? st.swap_bytes[mb] : 0;
    push(start, EventKind::ComputeStart, static_cast<std::int32_t>(s), mb, mbs_[mb].eff_batch,
         mbs_[mb].n_decode, g);
}

// Fixes the circuit composition: every live request either decodes one token
// or consumes prompt tokens from this circuit's prefill chunk.
void Engine::begin_circuit(std::int32_t mb) {
    MbState& m = mbs_[mb];
    m.prefill_alloc.clear();
    m.n_decode = 0;
    Tokens chunk_left = plan_.policy.prefill_chunk;
    for (const std::int64_t rid : m.slots) {
        if (rid == -1) continue;
        const ReqState& r = reqs_[rid];
        if (r.prompt_done < r.prompt_len) {
            const Tokens take = std::min(chunk_left, r.prompt_len - r.prompt_done);
            if (take > 0) {
                m.prefill_alloc.emplace_back(rid, take);
                chunk_left -= take;
            }
        } else {
            m.n_decode++;
        }
    }
    Tokens prefill_tokens = 0;
    for (const auto& [rid, t] : m.prefill_alloc) prefill_tokens += t;
    m.eff_batch = m.n_decode + prefill_tokens;
}

void Engine::on_compute_start(const QueuedEvent& e) {
    StageState& st = stages_[e.stage];
    st.busy_since = e.time;
    st.service_count++;
    log(e.time, e.kind, e.stage, e.microbatch, e.a, e.b, e.c);

    if (swaps_active_) {
        st.swap_state[e.microbatch] = SwapState::NotReady;  // consumed for this circuit
        const std::int32_t target = next_active_after(e.microbatch);
        if (target >= 0 && target != e.microbatch &&
            st.swap_state[target] == SwapState::NotReady) {
            issue_swap_in(e.stage, target, static_cast<int>(st.service_count % 2), e.time);
        }
    }

    const Micros d = scaled_stage_time(*st.cal, std::max<std::int64_t>(1, e.a), st.layers,
                                       plan_.policy.calibration_ref_layers);
    push(e.time + d, EventKind::ComputeEnd, e.stage, e.microbatch, e.a, e.b,
         e.stage == S_ - 1 ? 1 : 0);
}

void Engine::send_onward(std::int32_t mb, std::int64_t from_stage, Micros now) {
    const std::int64_t next = (from_stage + 1) % S_;
    Micros at = now;
    Bytes payload = mbs_[mb].eff_batch * plan_.policy.hidden_bytes_per_token;
    if (S_ > 1) {
        const LinkSpec& l = plan_.ring_links[from_stage];
        at = now + l.latency_us + ceil_div(payload * 1'000'000, l.bandwidth_bytes_per_s);
    }
    push(at, EventKind::TransferArrive, static_cast<std::int32_t>(next), mb, now, payload);
}

void Engine::on_compute_end(const QueuedEvent& e) {
    StageState& st = stages_[e.stage];
    st.busy = false;
    st.last_free = e.time;
    st.busy_acc += window_overlap(st.busy_since, e.time);
    log(e.time, e.kind, e.stage, e.microbatch, e.a, e.b, e.c);

    MbState& m = mbs_[e.microbatch];
    if (e.stage == S_ - 1) {
        // Circuit end: decode tokens materialize, prompt chunks are consumed,
        // finished requests free their slots, backfill admission runs.
        if (in_window(e.time)) n_out_window_ += m.n_decode;
        for (const auto& [rid, take] : m.prefill_alloc) reqs_[rid].prompt_done += take;
        for (auto& slot : m.slots) {
            if (slot == -1) continue;
            ReqState& r = reqs_[slot];
            const bool was_decoding =
                r.prompt_done == r.prompt_len &&
                std::none_of(m.prefill_alloc.begin(), m.prefill_alloc.end(),
                             [&](const auto& p) { return p.first == slot; });
            if (was_decoding) r.generated++;
            if (r.prompt_done == r.prompt_len && r.generated >= r.target_output) {
                r.complete_us = e.time;
                completed_total_++;
                if (in_window(e.time)) completed_window_++;
                log(e.time, EventKind::RequestComplete, e.stage, e.microbatch, slot,
                    r.generated);
                slot = -1;
                m.live--;
                if (!gen_.exhausted()) {
                    Request nr = gen_.next();
                    if (nr.prompt_len >= 0) {
                        reqs_.push_back({nr.prompt_len, nr.target_output_len, 0, 0, -1, -1});
                        admit_queue_.push_back(nr.request_id);
                    }
                }
            }
        }
        admit_into(e.microbatch, e.time);
        wake_parked(e.time);
        if (m.live > 0) {
            send_onward(e.microbatch, e.stage, e.time);
        } else {
            m.parked = true;
            parked_.push_back(e.microbatch);
        }
    } else {
        send_onward(e.microbatch, e.stage, e.time);
    }
    try_start(e.stage, e.time);
}

void Engine::on_transfer_arrive(const QueuedEvent& e) {
    StageState& st = stages_[e.stage];
    st.arrive_us[e.microbatch] = e.time;
    st.ready.push_back(e.microbatch);
    log(e.time, e.kind, e.stage, e.microbatch, e.a, e.b);
    try_start(e.stage, e.time);
}

SimReport Engine::build_report() const {
    SimReport r;
    r.window_start_us = w0_;
    r.window_end_us = w1_;
    r.input_tokens = n_in_window_;
    r.output_tokens = n_out_window_;
    const Micros win = w1_ - w0_;
    r.wall_time_s = static_cast<double>(win) / 1e6;
    r.input_throughput = static_cast<double>(n_in_window_) * 1e6 / static_cast<double>(win);
    r.output_throughput = static_cast<double>(n_out_window_) * 1e6 / static_cast<double>(win);
    r.total_throughput = r.input_throughput + r.output_throughput;
    r.completed_requests = completed_window_;
    r.admitted_requests = admitted_total_;
    r.live_requests = admitted_total_ - completed_total_;
    r.rng_seed = wl_.rng_seed;
    double sum_bubble = 0;
    for (const StageState& st : stages_) {
        StageMetrics sm;
        sm.busy_us = st.busy_acc;
        sm.stall_us = st.stall_acc;
        sm.bubble_us = win - st.busy_acc - st.stall_acc;
        sm.busy_fraction = static_cast<double>(sm.busy_us) / static_cast<double>(win);
        sm.transfer_wait_fraction = static_cast<double>(sm.stall_us) / static_cast<double>(win);
        sm.bubble_fraction = static_cast<double>(sm.bubble_us) / static_cast<double>(win);
        r.max_bubble_fraction = std::max(r.max_bubble_fraction, sm.bubble_fraction);
        sum_bubble += sm.bubble_fraction;
        r.swap_stall_us += sm.stall_us;
        r.stages.push_back(sm);
    }
    r.mean_bubble_fraction = stages_.empty() ? 0 : sum_bubble / static_cast<double>(S_);
    return r;
}

SimResult Engine::execute() {
    validate_against_topology();
    init_state();

    Micros now = 0;
    while (!queue_.empty()) {
        const QueuedEvent e = queue_.top();
        if (e.time >= end_us_) break;
        queue_.pop();
        now = e.time;
        switch (e.kind) {
            case EventKind::ComputeStart: on_compute_start(e); break;
            case EventKind::ComputeEnd: on_compute_end(e); break;
            case EventKind::TransferArrive: on_transfer_arrive(e); break;
            case EventKind::SwapInDone: {
                StageState& st = stages_[e.stage];
                if (st.swap_state[e.microbatch] == SwapState::Pending &&
                    st.swap_done_us[e.microbatch] == e.time) {
                    st.swap_state[e.microbatch] = SwapState::Ready;
                }
                log(e.time, e.kind, e.stage, e.microbatch, e.a, e.b, e.c);
                try_start(e.stage, e.time);
                break;
            }
            case EventKind::SwapOutDone:
                log(e.time, e.kind, e.stage, e.microbatch, e.a, e.b, e.c);
                break;
            default:
                throw SimError("unexpected queued event kind");
        }
    }

    if (queue_.empty() && now < end_us_ && !admit_queue_.empty()) {
        std::ostringstream os;
        os << "event-queue deadlock at t=" << now << "us: " << admit_queue_.size()
           << " queued requests, microbatch states:";
        for (std::int32_t m = 0; m < NB_; ++m) {
            os << " mb" << m << (mbs_[m].parked ? "=parked" : "=active");
        }
        throw SimError(os.str());
    }

    // Clip computes still running at the horizon.
    for (StageState& st : stages_) {
        if (st.busy && st.busy_since < end_us_) {
            st.busy_acc += window_overlap(st.busy_since, end_us_);
        }
    }

    SimResult result;
    result.report = build_report();
    result.trace = std::move(trace_);
    return result;
}

}  // namespace

SimResult run(const PipelinePlan& plan, const Topology& topo, const WorkloadSpec& workload,
              const ModelSpec& model) {
    Engine engine(plan, topo, workload, model);
    return engine.execute();
}

double steady_state_throughput(const PipelinePlan& plan) {
    const std::int64_t s = plan.n_stages();
    const std::int64_t nb = plan.n_microbatches;
    const std::int64_t b = plan.batch_size();
    const Micros circuit = s * plan.stage_time_us + plan.total_hop_latency_us();
    const Micros period = std::max(nb * plan.stage_time_us, circuit);
    return static_cast<double>(nb * b) * 1e6 / static_cast<double>(period);
}

std::vector<Violation> replay_check(const EventTrace& trace, const PipelinePlan& plan) {
    std::vector<Violation> out;
    const std::int64_t S = plan.n_stages();
    auto stage_name = [](std::int64_t s) { return "stage" + std::to_string(s); };

    // One active compute per stage.
    std::vector<int> computing(S, 0);
    // Swap-in completions not yet consumed by a compute: (stage, mb) -> bytes.
    std::map<std::pair<std::int32_t, std::int32_t>, Bytes> swapped;
    // Per (stage, direction): last transfer end, for serialization/bandwidth.
    std::vector<Micros> in_busy(S, 0), out_busy(S, 0);

    for (const Event& e : trace) {
        switch (e.kind) {
            case EventKind::ComputeStart: {
                if (e.stage < 0 || e.stage >= S) {
                    out.push_back({"bad-stage", stage_name(e.stage), "event stage out of range"});
                    break;
                }
                if (computing[e.stage]++) {
                    out.push_back({"double-compute", stage_name(e.stage),
                                   "overlapping ComputeStart at t=" + std::to_string(e.time_us)});
                }
                if (e.c > 0) {
                    auto it = swapped.find({e.stage, e.microbatch});
                    if (it == swapped.end() || it->second < e.c) {
                        out.push_back({"compute-before-swap-in", stage_name(e.stage),
                                       "mb " + std::to_string(e.microbatch) + " started at t=" +
                                           std::to_string(e.time_us) +
                                           " without its global pool pages resident"});
                    } else {
                        swapped.erase(it);
                    }
                }
                break;
            }
            case EventKind::ComputeEnd:
                if (e.stage >= 0 && e.stage < S && --computing[e.stage] < 0) {
                    out.push_back({"end-without-start", stage_name(e.stage),
                                   "ComputeEnd without matching start at t=" +
                                       std::to_string(e.time_us)});
                    computing[e.stage] = 0;
                }
                break;
            case EventKind::TransferArrive: {
                if (S < 2 || e.time_us == 0) break;  // initial placements arrive at t=0
                const std::int64_t from = (e.stage - 1 + S) % S;
                const LinkSpec& l = plan.ring_links[from];
                const Micros need =
                    e.a + l.latency_us + ceil_div(e.b * 1'000'000, l.bandwidth_bytes_per_s);
                if (e.time_us < need) {
                    out.push_back({"transfer-causality", stage_name(e.stage),
                                   "arrival at t=" + std::to_string(e.time_us) +
                                       " earlier than send+latency+serialization=" +
                                       std::to_string(need)});
                }
                break;
            }
            case EventKind::SwapInDone:
            case EventKind::SwapOutDone: {
                if (e.stage < 0 || e.stage >= S) break;
                const Bytes w = plan.stages[e.stage].pcie_bandwidth_bytes_per_s;
                const Micros need = ceil_div(e.b * 1'000'000, w);
                if (e.time_us - e.a < need) {
                    out.push_back({"swap-bandwidth-exceeded", stage_name(e.stage),
                                   std::to_string(e.b) + " bytes in " +
                                       std::to_string(e.time_us - e.a) + "us exceeds PCIe rate"});
                }
                Micros& busy = e.kind == EventKind::SwapInDone ? in_busy[e.stage]
                                                               : out_busy[e.stage];
                if (e.a < busy) {
                    out.push_back({"swap-overlap", stage_name(e.stage),
                                   "concurrent same-direction swaps at t=" +
                                       std::to_string(e.a)});
                }
                busy = e.time_us;
                if (e.kind == EventKind::SwapInDone) {
                    swapped[{e.stage, e.microbatch}] = e.b;
                }
                break;
            }
            default:
                break;
        }
    }
    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.entity != b.entity) return a.entity < b.entity;
        return a.message < b.message;
    });
    return out;
}

}  // namespace pipesim
