#pragma once

#include <qspn/node_state.hpp>

#include <compare>
#include <cstdint>
#include <memory>
#include <vector>

namespace qspn {

enum class PacketKind { plain, acyclic, continuous, extended, death, qclose, qopen };

inline const char* to_string(PacketKind k) {
    switch (k) {
        case PacketKind::plain: return "tp";
        case PacketKind::acyclic: return "atp";
        case PacketKind::continuous: return "ctp";
        case PacketKind::extended: return "etp";
        case PacketKind::death: return "death";
        case PacketKind::qclose: return "qclose";
        case PacketKind::qopen: return "qopen";
    }
    return "?";
}

struct FloodId {
    NodeId starter = 0;
    std::uint32_t seq = 0;

    std::uint64_t key() const { return (std::uint64_t{starter} << 32) | seq; }
    friend auto operator<=>(const FloodId&, const FloodId&) = default;
};

struct ChangeInfo {
    std::uint64_t id = 0;
    ChangeRecord record;
};

// Map portion carried by an ETP. Each record is a path starting at the node
// that sent the packet; receivers prepend themselves.
struct EtpBody {
    std::vector<Path> routes;
    ChangeInfo change;
    bool flag_of_interest = false;
    std::vector<ChangeInfo> known;  // sender's newest change per link, and deaths
};

struct Packet {
    PacketKind kind = PacketKind::plain;
    TracerBody body;  // TP part; for ETPs the traversed list
    FloodId flood;    // plain TPs; qclose/qopen use flood.starter
    std::shared_ptr<const EtpBody> etp;  // extended and death packets
};

struct Send {
    NodeId to = 0;
    Packet packet;
};

// What a node does with one delivery.
struct Reaction {
    std::vector<Send> sends;
    std::size_t distinct = 0;  // distinct packets originated or forwarded
    bool interesting = false;
    std::size_t extracted = 0;  // routes read from the body
};

inline void send_to_all_except(const Graph& g, NodeId me, std::optional<NodeId> except, const Packet& p,
                               Reaction& r) {
    bool any = false;
    for (NodeId n : g.neighbours(me)) {
        if (except && n == *except) continue;
        r.sends.push_back({n, p});
        any = true;
    }
    if (any) ++r.distinct;
}

}  // namespace qspn
