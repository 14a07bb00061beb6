#include "l3det/sdl.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "l3det/error.hpp"
#include "l3det/rng.hpp"
#include "l3det/utf8.hpp"

namespace l3det {

// ---------------------------------------------------------------------------
// TraceStore

TraceStore::TraceStore() : segments_(std::make_unique<std::unique_ptr<Segment>[]>(kMaxSegments)) {}

TraceStore::~TraceStore() = default;

Seq TraceStore::append(TelemetryRecord record) {
    const std::size_t n = size_.load(std::memory_order_relaxed);
    if (n >= kCapacity) throw Error(ErrorKind::Configuration, "trace store is full");
    const std::size_t seg = n / kSegmentSize;
    if (!segments_[seg]) segments_[seg] = std::make_unique<Segment>();
    record.seq = static_cast<Seq>(n);
    (*segments_[seg])[n % kSegmentSize] = std::move(record);
    size_.store(n + 1, std::memory_order_release);
    return static_cast<Seq>(n);
}

const TelemetryRecord& TraceStore::at(std::size_t index) const noexcept {
    return (*segments_[index / kSegmentSize])[index % kSegmentSize];
}

PollBatch TraceStore::poll(const PollCursor& cursor, std::size_t max) const {
    if (max == 0) throw Error(ErrorKind::Configuration, "poll batch size must be at least 1");
    const std::size_t available = size();
    const std::size_t begin = cursor.position ? static_cast<std::size_t>(*cursor.position) + 1 : 0;
    PollBatch batch{{}, cursor};
    if (begin >= available) return batch;
    const std::size_t end = std::min(available, begin + max);
    batch.records.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) batch.records.push_back(at(i));
    batch.cursor.position = static_cast<Seq>(end - 1);
    return batch;
}

Trace TraceStore::snapshot() const {
    const std::size_t n = size();
    Trace out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(i));
    return out;
}

TraceStore& load(TraceStore& store, const Trace& trace) {
    for (const auto& r : trace) store.append(r);
    return store;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

using Kind = MessageType::Kind;

constexpr SessionStep kBenignSession[] = {
    {Kind::RRCSetupRequest, IdentityAction::Presented},
    {Kind::RRCSetup, IdentityAction::Presented},
    {Kind::RRCSetupComplete, IdentityAction::Presented},
    {Kind::RegistrationRequest, IdentityAction::Presented},
    {Kind::AuthenticationRequest, IdentityAction::Presented},
    {Kind::AuthenticationResponse, IdentityAction::Presented},
    {Kind::NAS_SecurityModeCommand, IdentityAction::Presented},
    {Kind::NAS_SecurityModeComplete, IdentityAction::Presented},
    {Kind::RRC_SecurityModeCommand, IdentityAction::Presented},
    {Kind::RRC_SecurityModeComplete, IdentityAction::Presented},
    {Kind::RegistrationAccept, IdentityAction::AssignFresh},
};

// C-RNTI values usable for a UE (0x0001..0xFFEF).
constexpr std::uint64_t kRntiMin = 0x0001;
constexpr std::uint64_t kRntiMax = 0xFFEF;

std::uint16_t draw_rnti(Rng& rng) {
    return static_cast<std::uint16_t>(uniform_between(rng, kRntiMin, kRntiMax));
}

std::uint32_t draw_tmsi(Rng& rng) {
    return static_cast<std::uint32_t>(uniform_between(rng, 1, 0xFFFFFFFFULL));
}

}  // namespace

std::span<const SessionStep> benign_session_template() noexcept { return kBenignSession; }

Trace generate_session(const std::string& ue, std::optional<Tmsi> prior_tmsi, std::uint64_t seed) {
    Rng rng(seed);
    const Rnti rnti{draw_rnti(rng)};
    const Tmsi fresh{draw_tmsi(rng)};
    const Tmsi presented = prior_tmsi.value_or(kUnassignedTmsi);

    Trace session;
    session.reserve(std::size(kBenignSession));
    for (const auto& step : kBenignSession) {
        TelemetryRecord r;
        r.seq = static_cast<Seq>(session.size());
        r.ue_id = ue;
        r.msg_type = step.msg;
        r.rnti = rnti;
        if (step.identity == IdentityAction::AssignFresh) {
            r.tmsi = presented.is_assigned() ? presented : fresh;
        } else {
            r.tmsi = presented;
        }
        r.label = GroundTruth::benign();
        session.push_back(std::move(r));
    }
    return session;
}

Trace interleave_shuffle(const std::vector<Trace>& per_ue_traces, std::uint64_t seed) {
    // Shuffling the multiset of source indices yields every interleaving
    // with equal probability.
    std::vector<std::uint32_t> order;
    for (std::size_t i = 0; i < per_ue_traces.size(); ++i) {
        order.insert(order.end(), per_ue_traces[i].size(), static_cast<std::uint32_t>(i));
    }
    Rng rng(seed);
    fisher_yates(std::span<std::uint32_t>(order), rng);

    std::vector<std::size_t> next(per_ue_traces.size(), 0);
    Trace out;
    out.reserve(order.size());
    for (const auto src : order) out.push_back(per_ue_traces[src][next[src]++]);
    renumber(out);
    return out;
}

Trace generate_benign_trace(const BenignTraceConfig& config) {
    std::vector<Trace> per_ue(config.ues);
    std::unordered_set<std::uint32_t> used_tmsis;
    std::uint64_t stream = 0;

    for (std::size_t u = 0; u < config.ues; ++u) {
        const std::string ue = "ue" + std::to_string(u + 1);
        std::optional<Tmsi> prior;
        for (std::size_t s = 0; s < config.sessions_per_ue; ++s) {
            Trace session;
            // Redraw on the (rare) fresh-TMSI collision so identities stay unique.
            for (;;) {
                session = generate_session(ue, prior, derive_seed(config.seed, stream++));
                const Tmsi bound = session.back().tmsi;
                if (prior || used_tmsis.insert(bound.value).second) break;
            }
            if (config.reuse_tmsi) prior = session.back().tmsi;
            auto& dst = per_ue[u];
            dst.insert(dst.end(), session.begin(), session.end());
        }
    }

    Trace merged = interleave_shuffle(per_ue, derive_seed(config.seed, ~0ULL));
    if (config.max_records && merged.size() > *config.max_records) {
        merged.resize(*config.max_records);
    }
    return merged;
}

// ---------------------------------------------------------------------------
// Injection

namespace {

struct Victim {
    Tmsi tmsi;
    Rnti rnti;
    std::size_t binding_index = 0;
};

std::vector<Victim> bound_identities(const Trace& trace) {
    std::vector<Victim> victims;
    std::unordered_set<std::uint32_t> seen;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& r = trace[i];
        if (!r.tmsi.is_assigned()) continue;
        const bool binds = r.msg_type.is(Kind::RegistrationAccept) || r.msg_type.is(Kind::RRCSetupRequest);
        if (binds && seen.insert(r.tmsi.value).second) victims.push_back({r.tmsi, r.rnti, i});
    }
    return victims;
}

// Slots are insertion points in original coordinates: slot s means "before
// original record s". Sorted slots s_0 <= s_1 <= ... land at final positions
// s_j + j, so gap g between neighbours needs s_{j+1} - s_j >= g - 1, and gap
// from the end needs s_last <= M - g.
bool slot_fits(std::size_t slot, const std::vector<std::size_t>& taken, std::size_t gap) {
    if (gap == 0) return true;
    for (const auto t : taken) {
        const std::size_t d = slot > t ? slot - t : t - slot;
        if (d + 1 < gap) return false;
    }
    return true;
}

}  // namespace

Trace inject_blind_dos(const Trace& trace, const InjectionConfig& config) {
    if (config.count == 0) {
        Trace out = trace;
        renumber(out);
        return out;
    }

    auto victims = bound_identities(trace);
    if (victims.size() < config.count) {
        throw Error(ErrorKind::InjectionCapacity,
                    "need " + std::to_string(config.count) + " bound TMSIs, trace has " +
                        std::to_string(victims.size()));
    }

    const std::size_t m = trace.size();
    const std::size_t gap = config.min_gap;
    const std::size_t last_slot = gap <= m ? m - gap : 0;
    if (gap > m) {
        throw Error(ErrorKind::InjectionCapacity, "trace shorter than the minimum gap");
    }

    Rng rng(config.seed);
    constexpr int kAttempts = 64;
    constexpr int kDrawsPerAttack = 256;

    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        // Victims uniformly without replacement.
        std::vector<Victim> pool = victims;
        fisher_yates(std::span<Victim>(pool), rng);
        pool.resize(config.count);

        std::vector<std::size_t> slots;
        bool ok = true;
        for (const auto& v : pool) {
            const std::size_t first = std::max(v.binding_index + 1, gap);
            if (first > last_slot) {
                ok = false;
                break;
            }
            bool placed = false;
            for (int draw = 0; draw < kDrawsPerAttack && !placed; ++draw) {
                const auto slot = static_cast<std::size_t>(uniform_between(rng, first, last_slot));
                if (slot_fits(slot, slots, gap)) {
                    slots.push_back(slot);
                    placed = true;
                }
            }
            if (!placed) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        struct Insertion {
            std::size_t slot;
            TelemetryRecord record;
        };
        std::vector<Insertion> inserts;
        inserts.reserve(pool.size());
        for (std::size_t k = 0; k < pool.size(); ++k) {
            TelemetryRecord attack;
            attack.ue_id = "attacker" + std::to_string(k + 1);
            attack.msg_type = Kind::RRCSetupRequest;
            attack.tmsi = pool[k].tmsi;
            do {
                attack.rnti = Rnti{draw_rnti(rng)};
            } while (attack.rnti == pool[k].rnti);
            attack.label = GroundTruth::blind_dos();
            inserts.push_back({slots[k], std::move(attack)});
        }
        std::stable_sort(inserts.begin(), inserts.end(),
                         [](const Insertion& a, const Insertion& b) { return a.slot < b.slot; });

        Trace out;
        out.reserve(m + inserts.size());
        std::size_t next = 0;
        for (std::size_t i = 0; i <= m; ++i) {
            while (next < inserts.size() && inserts[next].slot == i) {
                out.push_back(std::move(inserts[next++].record));
            }
            if (i < m) out.push_back(trace[i]);
        }
        renumber(out);
        return out;
    }
    throw Error(ErrorKind::InjectionCapacity,
                "could not place " + std::to_string(config.count) + " attacks with min_gap " +
                    std::to_string(gap));
}

// ---------------------------------------------------------------------------
// Hypoglyphs

HypoglyphMap::HypoglyphMap(std::map<char32_t, char32_t> forward) : forward_(std::move(forward)) {
    for (const auto& [from, to] : forward_) {
        if (from == to) throw Error(ErrorKind::Configuration, "hypoglyph entry maps a code point to itself");
        if (!inverse_.emplace(to, from).second) {
            throw Error(ErrorKind::Configuration, "hypoglyph map is not injective");
        }
    }
}

const HypoglyphMap& HypoglyphMap::default_map() {
    static const HypoglyphMap map({
        {U'C', U'\u0421'},  // Cyrillic capital Es
        {U'e', U'\u0435'},  // Cyrillic small Ie
        {U'q', U'\u055B'},  // Armenian emphasis mark
    });
    return map;
}

std::string apply_hypoglyphs(std::string_view text, const HypoglyphMap& map) {
    std::u32string cps = utf8::decode(text);
    for (auto& cp : cps) {
        if (const auto it = map.forward().find(cp); it != map.forward().end()) cp = it->second;
    }
    return utf8::encode(cps);
}

Trace hypoglyph_mutate(const Trace& trace, std::span<const std::size_t> selection,
                       const HypoglyphMap& map) {
    Trace out = trace;
    for (const auto pos : selection) {
        if (pos >= out.size()) {
            throw Error(ErrorKind::Selection, "position " + std::to_string(pos) + " is outside the trace (" +
                                                  std::to_string(out.size()) + " records)");
        }
    }
    std::set<std::size_t> unique(selection.begin(), selection.end());
    for (const auto pos : unique) {
        auto& r = out[pos];
        r.msg_type = MessageType::canonicalize(apply_hypoglyphs(r.msg_type.name(), map));
    }
    return out;
}

std::vector<std::size_t> select_for_mutation(const Trace& trace, std::size_t attacks, std::size_t benign,
                                             std::uint64_t seed) {
    std::vector<std::size_t> attack_pos;
    std::vector<std::size_t> benign_pos;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        (trace[i].label.is_attack() ? attack_pos : benign_pos).push_back(i);
    }
    if (attack_pos.size() < attacks || benign_pos.size() < benign) {
        throw Error(ErrorKind::Selection, "not enough records to select " + std::to_string(attacks) +
                                              " attack and " + std::to_string(benign) + " benign");
    }
    Rng rng(seed);
    fisher_yates(std::span<std::size_t>(attack_pos), rng);
    fisher_yates(std::span<std::size_t>(benign_pos), rng);
    std::vector<std::size_t> out(attack_pos.begin(), attack_pos.begin() + static_cast<std::ptrdiff_t>(attacks));
    out.insert(out.end(), benign_pos.begin(), benign_pos.begin() + static_cast<std::ptrdiff_t>(benign));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace l3det
